#include "eisgrpo/core.hpp"

#include <algorithm>

#include "eisgrpo/errors.hpp"

namespace eisgrpo {

std::size_t GroupBatch::group_size() const {
    std::size_t n = 0;
    for (const auto& sg : subgroups) n += sg.size();
    return n;
}

bool GroupBatch::has_advantages() const {
    if (advantages.size() != subgroups.size()) return false;
    for (std::size_t l = 0; l < subgroups.size(); ++l) {
        if (advantages[l].size() != subgroups[l].size()) return false;
    }
    return true;
}

std::vector<std::vector<double>> GroupBatch::rewards() const {
    std::vector<std::vector<double>> out(subgroups.size());
    for (std::size_t l = 0; l < subgroups.size(); ++l) {
        out[l].reserve(subgroups[l].size());
        for (const auto& r : subgroups[l]) out[l].push_back(r.reward);
    }
    return out;
}

PresentedInstance apply_transform(const PairwiseSample& sample, int ell) {
    if (ell != 1 && ell != 2) {
        throw InvalidTransform("pairwise transform index must be 1 or 2, got " + std::to_string(ell));
    }
    if (sample.y1.size() != sample.y2.size()) {
        throw ContractError("sample " + sample.id + ": response feature lengths differ");
    }
    PresentedInstance inst;
    inst.sample_id = sample.id;
    inst.ell = ell;
    inst.question_dim = sample.x.size();
    inst.response_dim = sample.y1.size();
    inst.features.reserve(sample.x.size() + 2 * sample.y1.size());
    const auto& first = ell == 1 ? sample.y1 : sample.y2;
    const auto& second = ell == 1 ? sample.y2 : sample.y1;
    inst.features.insert(inst.features.end(), sample.x.begin(), sample.x.end());
    inst.features.insert(inst.features.end(), first.begin(), first.end());
    inst.features.insert(inst.features.end(), second.begin(), second.end());
    inst.gold = ell == 1 ? Label::A : Label::B;
    return inst;
}

PresentedInstance swap_order(const PresentedInstance& instance) {
    PresentedInstance out = instance;
    const auto q = static_cast<std::ptrdiff_t>(instance.question_dim);
    const auto r = static_cast<std::ptrdiff_t>(instance.response_dim);
    std::copy(instance.features.begin() + q + r, instance.features.begin() + q + 2 * r, out.features.begin() + q);
    std::copy(instance.features.begin() + q, instance.features.begin() + q + r, out.features.begin() + q + r);
    out.gold = other(instance.gold);
    out.ell = instance.ell == 1 ? 2 : 1;
    return out;
}

std::vector<PresentedInstance> make_orderings(const PairwiseSample& sample) {
    return {apply_transform(sample, 1), apply_transform(sample, 2)};
}

MultipleChoiceInstance permute_choices(const MultipleChoiceSample& sample, std::span<const std::size_t> perm) {
    const std::size_t n = sample.options.size();
    if (perm.size() != n) throw InvalidTransform("permutation length does not match option count");
    if (sample.correct >= n) throw ContractError("correct option index out of range");
    std::vector<bool> seen(n, false);
    for (auto p : perm) {
        if (p >= n || seen[p]) throw InvalidTransform("permutation is not a bijection on option slots");
        seen[p] = true;
    }
    MultipleChoiceInstance out;
    out.question = sample.question;
    out.options.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.options.push_back(sample.options[perm[k]]);
        if (perm[k] == sample.correct) out.gold = k;
    }
    return out;
}

}  // namespace eisgrpo
