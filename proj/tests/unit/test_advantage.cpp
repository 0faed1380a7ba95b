#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "eisgrpo/advantage.hpp"
#include "eisgrpo/errors.hpp"

using namespace eisgrpo;

namespace {

// Direct standardization with population std and the zero-variance rule.
std::vector<double> standardize(const std::vector<double>& xs, double mean, double sd) {
    std::vector<double> out;
    for (double x : xs) out.push_back(sd < 1e-8 ? 0.0 : (x - mean) / sd);
    return out;
}

std::pair<double, double> moments(const std::vector<double>& xs) {
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

SubgroupRewards fixture() {
    std::vector<double> a(12, 1.5), b(12, 0.0);
    a.insert(a.end(), 4, 1.0);
    b.insert(b.end(), 4, 1.0);
    return {a, b};
}

SubgroupRewards random_groups(std::mt19937_64& rng, std::size_t L, std::size_t per) {
    std::uniform_int_distribution<int> pick(0, 2);
    SubgroupRewards g(L);
    for (auto& sg : g) {
        for (std::size_t i = 0; i < per; ++i) sg.push_back(-0.5 + pick(rng));
    }
    return g;
}

}  // namespace

TEST_SUITE("advantage") {
    TEST_CASE("two-subgroup fixture") {
        const auto g = fixture();
        const auto ga = grpo_advantages(g[0]);
        const auto gb = grpo_advantages(g[1]);
        CHECK(std::abs(ga[0] - 0.577) < 1e-3);
        CHECK(std::abs(ga[12] + 1.732) < 1e-3);
        CHECK(std::abs(gb[12] - 1.732) < 1e-3);
        CHECK(std::abs(gb[0] + 0.577) < 1e-3);

        // Pooled statistics cannot see subgroup membership, so B's 1.0 gets the same value as A's 1.0.
        // 1.732 is the separate-group value, not the pooled one.
        const auto glob = global_only_advantages(g);
        CHECK(std::abs(glob[0][0] - 1.044) < 1e-3);
        CHECK(std::abs(glob[0][12] - 0.285) < 1e-3);
        CHECK(std::abs(glob[1][12] - 0.285) < 1e-3);
        CHECK(std::abs(glob[1][0] + 1.234) < 1e-3);

        const auto eis = eis_advantages(g);
        CHECK(std::abs(eis[0][0] - 1.621) < 1e-3);
        CHECK(std::abs(eis[0][12] + 1.447) < 1e-3);
        CHECK(std::abs(eis[1][12] - 2.017) < 1e-3);
        CHECK(std::abs(eis[1][0] + 1.811) < 1e-3);
    }

    TEST_CASE("estimators agree with direct standardization") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 200; ++trial) {
            const auto g = random_groups(rng, 2, 2 + trial % 9);
            std::vector<double> pooled;
            for (const auto& sg : g) pooled.insert(pooled.end(), sg.begin(), sg.end());
            const auto [pm, ps] = moments(pooled);
            const auto glob = global_only_advantages(g);
            const auto eis = eis_advantages(g);
            for (std::size_t l = 0; l < g.size(); ++l) {
                const auto [m, s] = moments(g[l]);
                const auto local = standardize(g[l], m, s);
                const auto global = standardize(g[l], pm, ps);
                const auto grpo = grpo_advantages(g[l]);
                for (std::size_t i = 0; i < g[l].size(); ++i) {
                    CHECK(grpo[i] == doctest::Approx(local[i]).epsilon(1e-12));
                    CHECK(glob[l][i] == doctest::Approx(global[i]).epsilon(1e-12));
                    CHECK(eis[l][i] == doctest::Approx(global[i] + local[i]).epsilon(1e-12));
                }
            }
        }
    }

    TEST_CASE("zero-variance groups yield zero advantages") {
        const std::vector<double> flat(8, 1.5);
        for (double a : grpo_advantages(flat)) CHECK(a == 0.0);
        // Pooled variance non-zero, local variance zero: only the global term survives.
        const SubgroupRewards g{{1.5, 1.5, 1.5}, {-0.5, -0.5, -0.5}};
        const auto eis = eis_advantages(g);
        const auto glob = global_only_advantages(g);
        for (std::size_t l = 0; l < 2; ++l) {
            for (std::size_t i = 0; i < 3; ++i) CHECK(eis[l][i] == glob[l][i]);
        }
        CHECK(glob[0][0] == doctest::Approx(1.0));
        const SubgroupRewards all_same{{0.5, 0.5}, {0.5, 0.5}};
        for (const auto& sg : eis_advantages(all_same)) {
            for (double a : sg) CHECK(a == 0.0);
        }
    }

    TEST_CASE("degenerate groups are rejected") {
        CHECK_THROWS_AS(grpo_advantages(std::vector<double>{1.0}), DegenerateGroup);
        CHECK_THROWS_AS(grpo_advantages(std::vector<double>{}), DegenerateGroup);
        CHECK_THROWS_AS(eis_advantages(SubgroupRewards{{1.0, 0.0}, {1.0}}), DegenerateGroup);
        CHECK_THROWS_AS(global_only_advantages(SubgroupRewards{{1.0, 0.0}, {}}), DegenerateGroup);
        CHECK_THROWS_AS(eis_advantages(SubgroupRewards{}), DegenerateGroup);
    }

    TEST_CASE("zero-sum, shift and scale invariance over random groups") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> shift(-5.0, 5.0), scale(0.1, 10.0);
        for (int trial = 0; trial < 300; ++trial) {
            const auto g = random_groups(rng, 1 + trial % 4, 2 + trial % 7);
            const double c = shift(rng), k = scale(rng);
            auto moved = g;
            for (auto& sg : moved) {
                for (double& r : sg) r = k * r + c;
            }
            const auto a = eis_advantages(g), b = eis_advantages(moved);
            double total = 0.0;
            for (std::size_t l = 0; l < g.size(); ++l) {
                const double sub = std::accumulate(a[l].begin(), a[l].end(), 0.0);
                total += sub;
                for (std::size_t i = 0; i < a[l].size(); ++i) CHECK(std::abs(a[l][i] - b[l][i]) < 1e-9);
            }
            CHECK(std::abs(total) < 1e-9);
        }
    }

    TEST_CASE("a single subgroup doubles the per-group estimate exactly") {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 100; ++trial) {
            const auto g = random_groups(rng, 1, 2 + trial % 30);
            const auto eis = eis_advantages(g);
            const auto grpo = grpo_advantages(g[0]);
            for (std::size_t i = 0; i < grpo.size(); ++i) CHECK(eis[0][i] == 2.0 * grpo[i]);
        }
    }
}
