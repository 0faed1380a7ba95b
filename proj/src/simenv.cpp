#include "eisgrpo/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "eisgrpo/errors.hpp"
#include "eisgrpo/parallel.hpp"

namespace eisgrpo {

void EnvConfig::validate() const {
    if (d_q == 0 || d_r == 0) throw ConfigError("env.d_q and env.d_r must be positive");
    if (!(quality_gap > 0.0)) throw ConfigError("env.quality_gap must be > 0");
    if (!(noise_sigma >= 0.0)) throw ConfigError("env.noise_sigma must be >= 0");
    if (!(p_first >= 0.0 && p_first <= 1.0)) throw ConfigError("env.p_first must lie in [0, 1]");
}

void AnswererSpec::validate() const {
    if (!(skill > 0.0 && skill < 1.0)) throw ConfigError("answerer skill must lie in (0, 1)");
    if (!(length_profile.log_sigma >= 0.0)) throw ConfigError("answerer length log_sigma must be >= 0");
}

namespace {

int draw_length(const LengthProfile& lp, Rng& rng) {
    std::normal_distribution<double> n(lp.log_mean, lp.log_sigma);
    const double v = std::round(std::exp(n(rng)));
    return static_cast<int>(std::clamp(v, 1.0, 1e6));
}

std::vector<double> gaussian_vector(std::size_t n, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (double& e : v) e = g(rng);
    return v;
}

std::string indexed_id(const std::string& prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    return prefix + buf;
}

}  // namespace

std::vector<double> embed_response(double quality, const EnvConfig& cfg, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> y(cfg.d_r);
    for (std::size_t k = 0; k < cfg.d_r; ++k) y[k] = (k == 0 ? quality : 0.0) + cfg.noise_sigma * g(rng);
    return y;
}

PairwiseSample gen_sample(Rng& rng, const EnvConfig& cfg, const std::string& id) {
    PairwiseSample s;
    s.id = id;
    s.source = "gen";
    s.x = gaussian_vector(cfg.d_q, rng);
    std::normal_distribution<double> g(0.0, 1.0);
    const double base = g(rng);
    s.y1 = embed_response(base + 0.5 * cfg.quality_gap, cfg, rng);
    s.y2 = embed_response(base - 0.5 * cfg.quality_gap, cfg, rng);
    const LengthProfile lp;
    s.len1 = draw_length(lp, rng);
    s.len2 = draw_length(lp, rng);
    return s;
}

std::vector<Question> gen_questions(std::size_t count, const EnvConfig& cfg, const std::string& prefix) {
    std::vector<Question> qs(count);
    const StreamKey key(cfg.seed, "questions");
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = key.with(detail::fnv1a(prefix)).with(i).make();
        qs[i].id = indexed_id(prefix, i);
        qs[i].x = gaussian_vector(cfg.d_q, rng);
        std::normal_distribution<double> d(0.0, 1.5);
        qs[i].difficulty = d(rng);
    }
    return qs;
}

std::optional<PairChoice> select_length_matched(std::span<const Answer> answers) {
    std::optional<PairChoice> best;
    for (std::size_t c = 0; c < answers.size(); ++c) {
        if (!answers[c].correct) continue;
        for (std::size_t w = 0; w < answers.size(); ++w) {
            if (answers[w].correct) continue;
            const int gap = std::abs(answers[c].length - answers[w].length);
            // Enumeration is lexicographic in (c, w), so strict < keeps the
            // smallest index pair among equal gaps.
            if (!best || gap < best->length_gap) best = PairChoice{c, w, gap};
        }
    }
    return best;
}

std::vector<AnswererSpec> default_answerer_pool() {
    return {
        AnswererSpec{0.35, LengthProfile{5.2, 0.5}},
        AnswererSpec{0.55, LengthProfile{5.6, 0.5}},
        AnswererSpec{0.75, LengthProfile{5.0, 0.6}},
    };
}

std::vector<PairwiseSample> build_pairs(std::span<const Question> questions, std::span<const AnswererSpec> answerers,
                                        std::size_t n, const EnvConfig& cfg, unsigned threads) {
    if (answerers.empty()) throw ConfigError("answerer pool is empty");
    if (n < 2) throw ConfigError("build_pairs needs at least 2 answers per question");
    for (const auto& a : answerers) a.validate();
    cfg.validate();

    std::vector<std::optional<PairwiseSample>> slots(questions.size());
    const StreamKey key(cfg.seed, "build-pairs");
    parallel_for(questions.size(), threads, [&](std::size_t qi) {
        const Question& q = questions[qi];
        Rng rng = key.with(detail::fnv1a(q.id)).make();
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<Answer> answers(n);
        for (std::size_t k = 0; k < n; ++k) {
            const AnswererSpec& who = answerers[k % answerers.size()];
            const double logit = std::log(who.skill / (1.0 - who.skill)) - q.difficulty;
            answers[k].correct = unif(rng) < 1.0 / (1.0 + std::exp(-logit));
            answers[k].length = draw_length(who.length_profile, rng);
        }
        const auto choice = select_length_matched(answers);
        if (!choice) return;
        std::normal_distribution<double> g(0.0, 1.0);
        const double base = g(rng);
        PairwiseSample s;
        s.id = q.id;
        s.source = "pairs";
        s.x = q.x;
        s.y1 = embed_response(base + 0.5 * cfg.quality_gap, cfg, rng);
        s.y2 = embed_response(base - 0.5 * cfg.quality_gap, cfg, rng);
        s.len1 = answers[choice->correct_index].length;
        s.len2 = answers[choice->incorrect_index].length;
        slots[qi] = std::move(s);
    });

    std::vector<PairwiseSample> out;
    for (auto& s : slots) {
        if (s) out.push_back(std::move(*s));
    }
    return out;
}

std::vector<PresentedInstance> export_biased_single_ordering(std::span<const PairwiseSample> samples, double p_first,
                                                             Rng& rng, bool duplicate) {
    if (!(p_first >= 0.0 && p_first <= 1.0)) throw ConfigError("p_first must lie in [0, 1]");
    std::vector<PresentedInstance> out;
    out.reserve(duplicate ? 2 * samples.size() : samples.size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (const auto& s : samples) {
        if (duplicate) {
            out.push_back(apply_transform(s, 1));
            out.push_back(apply_transform(s, 2));
        } else {
            out.push_back(apply_transform(s, unif(rng) < p_first ? 1 : 2));
        }
    }
    return out;
}

}  // namespace eisgrpo
