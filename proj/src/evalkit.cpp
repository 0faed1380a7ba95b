#include "eisgrpo/evalkit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "eisgrpo/errors.hpp"
#include "eisgrpo/parallel.hpp"

namespace eisgrpo {

JudgeVerdict to_judge_verdict(Verdict v) {
    switch (v) {
        case Verdict::A: return JudgeVerdict::A;
        case Verdict::B: return JudgeVerdict::B;
        case Verdict::Unparseable: break;
    }
    return JudgeVerdict::Unparseable;
}

std::string to_string(JudgeVerdict v) {
    switch (v) {
        case JudgeVerdict::A: return "A";
        case JudgeVerdict::B: return "B";
        case JudgeVerdict::Tie: return "Tie";
        case JudgeVerdict::Unparseable: break;
    }
    return "Unparseable";
}

JudgeVerdict judge_verdict_from_string(const std::string& s) {
    if (s == "A") return JudgeVerdict::A;
    if (s == "B") return JudgeVerdict::B;
    if (s == "Tie" || s == "tie" || s == "TIE") return JudgeVerdict::Tie;
    return JudgeVerdict::Unparseable;
}

PairResult judge_both_orders(const PolicyParams& params, const PairwiseSample& sample) {
    const auto orderings = make_orderings(sample);
    PairResult r;
    r.sample_id = sample.id;
    r.order1 = to_judge_verdict(parse_verdict(greedy_decode(params, orderings[0])));
    r.order2 = to_judge_verdict(parse_verdict(greedy_decode(params, orderings[1])));
    r.gold1 = orderings[0].gold;
    r.gold2 = orderings[1].gold;
    return r;
}

std::vector<PairResult> judge_all(const PolicyParams& params, std::span<const PairwiseSample> samples,
                                  unsigned threads) {
    std::vector<PairResult> out(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) { out[i] = judge_both_orders(params, samples[i]); });
    return out;
}

namespace {

JudgeVerdict as_verdict(Label l) { return l == Label::A ? JudgeVerdict::A : JudgeVerdict::B; }

// true: picked the better response, false: picked the worse one.
std::optional<bool> picked_better(JudgeVerdict v, Label gold) {
    if (v == as_verdict(gold)) return true;
    if (v == as_verdict(other(gold))) return false;
    return std::nullopt;
}

bool consistent(const PairResult& r) {
    const auto a = picked_better(r.order1, r.gold1);
    const auto b = picked_better(r.order2, r.gold2);
    return a && b && *a == *b;
}

bool consistently_correct(const PairResult& r) {
    const bool c1 = r.order1 == as_verdict(r.gold1);
    const bool c2 = r.order2 == as_verdict(r.gold2);
    const bool t1 = r.order1 == JudgeVerdict::Tie;
    const bool t2 = r.order2 == JudgeVerdict::Tie;
    if (t1 && t2) return false;
    if (t1) return c2;
    if (t2) return c1;
    return c1 && c2;
}

void require_nonempty(std::span<const PairResult> results, const char* what) {
    if (results.empty()) throw ContractError(std::string(what) + " of an empty result list");
}

double fraction(std::size_t k, std::size_t n) { return static_cast<double>(k) / static_cast<double>(n); }

}  // namespace

double consistency(std::span<const PairResult> results) {
    require_nonempty(results, "consistency");
    std::size_t k = 0;
    for (const auto& r : results) k += consistent(r) ? 1 : 0;
    return fraction(k, results.size());
}

double consistent_accuracy(std::span<const PairResult> results) {
    require_nonempty(results, "consistent accuracy");
    std::size_t k = 0;
    for (const auto& r : results) k += consistently_correct(r) ? 1 : 0;
    return fraction(k, results.size());
}

double order_accuracy(std::span<const PairResult> results, int order) {
    require_nonempty(results, "order accuracy");
    if (order != 1 && order != 2) throw ContractError("order must be 1 or 2");
    std::size_t k = 0;
    for (const auto& r : results) {
        k += order == 1 ? (r.order1 == as_verdict(r.gold1)) : (r.order2 == as_verdict(r.gold2));
    }
    return fraction(k, results.size());
}

Verdict majority_vote(std::span<const Verdict> verdicts, Rng& rng) {
    std::size_t a = 0;
    std::size_t b = 0;
    for (Verdict v : verdicts) {
        a += v == Verdict::A;
        b += v == Verdict::B;
    }
    if (a == 0 && b == 0) return Verdict::Unparseable;
    if (a != b) return a > b ? Verdict::A : Verdict::B;
    std::bernoulli_distribution coin(0.5);
    return coin(rng) ? Verdict::A : Verdict::B;
}

std::int64_t flop_ratio(double baseline_params, double baseline_tokens, double primary_params, double primary_tokens) {
    if (!(baseline_params > 0 && baseline_tokens > 0 && primary_params > 0 && primary_tokens > 0)) {
        throw ContractError("flop_ratio inputs must all be positive");
    }
    const double ratio = (baseline_params * baseline_tokens) / (primary_params * primary_tokens);
    return std::max<std::int64_t>(1, std::llround(ratio));
}

MetricsReport summarize(std::span<const PairResult> results) {
    MetricsReport r;
    r.scored = results.size();
    if (results.empty()) return r;
    r.consistency = consistency(results);
    r.consistent_accuracy = consistent_accuracy(results);
    r.accuracy_order1 = order_accuracy(results, 1);
    r.accuracy_order2 = order_accuracy(results, 2);
    return r;
}

MetricsReport score_external(std::istream& in) {
    using nlohmann::json;
    struct Entry {
        std::optional<std::pair<JudgeVerdict, Label>> runs[2];
    };
    std::map<std::string, Entry> by_id;
    std::vector<std::string> order_seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            const auto id = j.at("sample_id").is_string() ? j.at("sample_id").get<std::string>()
                                                          : j.at("sample_id").dump();
            const int order = j.at("order").get<int>();
            if (order != 1 && order != 2) throw IoError("order must be 1 or 2");
            const auto gold_s = j.at("gold").get<std::string>();
            if (gold_s != "A" && gold_s != "B") throw IoError("gold must be \"A\" or \"B\"");
            const Label gold = gold_s == "A" ? Label::A : Label::B;
            const JudgeVerdict v = judge_verdict_from_string(j.at("verdict").get<std::string>());
            auto [it, inserted] = by_id.try_emplace(id);
            if (inserted) order_seen.push_back(id);
            auto& slot = it->second.runs[order - 1];
            if (slot) throw IoError("duplicate order " + std::to_string(order) + " for sample " + id);
            slot = std::make_pair(v, gold);
        } catch (const json::exception& e) {
            throw IoError("judgments line " + std::to_string(lineno) + ": " + e.what());
        } catch (const IoError& e) {
            throw IoError("judgments line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    std::vector<PairResult> results;
    MetricsReport report;
    for (const auto& id : order_seen) {
        const Entry& e = by_id.at(id);
        if (!e.runs[0] || !e.runs[1]) {
            report.skipped.push_back(id);
            continue;
        }
        PairResult r;
        r.sample_id = id;
        r.order1 = e.runs[0]->first;
        r.gold1 = e.runs[0]->second;
        r.order2 = e.runs[1]->first;
        r.gold2 = e.runs[1]->second;
        results.push_back(r);
    }
    MetricsReport s = summarize(results);
    s.skipped = std::move(report.skipped);
    return s;
}

MetricsReport score_external_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open judgments file " + path);
    return score_external(in);
}

std::string report_json(const MetricsReport& r) {
    nlohmann::json j = {{"scored", r.scored},
                        {"consistency", r.consistency},
                        {"consistent_accuracy", r.consistent_accuracy},
                        {"accuracy_order1", r.accuracy_order1},
                        {"accuracy_order2", r.accuracy_order2},
                        {"skipped_count", r.skipped.size()},
                        {"skipped", r.skipped}};
    return j.dump(2);
}

std::string report_table(const MetricsReport& r) {
    std::ostringstream os;
    char buf[96];
    const auto row = [&](const char* name, double v) {
        std::snprintf(buf, sizeof buf, "%-22s %10.4f\n", name, v);
        os << buf;
    };
    std::snprintf(buf, sizeof buf, "%-22s %10zu\n", "scored pairs", r.scored);
    os << buf;
    row("consistency", r.consistency);
    row("consistent accuracy", r.consistent_accuracy);
    row("accuracy (order 1)", r.accuracy_order1);
    row("accuracy (order 2)", r.accuracy_order2);
    std::snprintf(buf, sizeof buf, "%-22s %10zu\n", "skipped samples", r.skipped.size());
    os << buf;
    for (const auto& id : r.skipped) os << "  skipped: " << id << '\n';
    return os.str();
}

}  // namespace eisgrpo
