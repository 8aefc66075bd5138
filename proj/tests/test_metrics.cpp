#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include <json.hpp>

#include "fhn/metrics.hpp"
#include "fhn/rng.hpp"

using namespace fhn;

namespace {

TargetMatrix random_matrix(std::size_t n, std::size_t c, std::uint64_t seed, double spread = 1.0) {
    TargetMatrix m(n, std::vector<double>(c));
    RngStream rng(seed, 0);
    for (auto& row : m)
        for (double& x : row) x = spread * rng.next_gaussian();
    return m;
}

} // namespace

TEST_CASE("mse decomposition on hand-computed cases") {
    SUBCASE("perfect prediction") {
        const MseParts p = mse_decompose_flat({1, 2, 3}, {1, 2, 3});
        CHECK(p.mse == 0.0);
        CHECK(p.squared_bias == 0.0);
        CHECK(p.c_mse == 0.0);
    }
    SUBCASE("equal means, unit errors") {
        const MseParts p = mse_decompose_flat({0, 2}, {1, 1});
        CHECK(p.mse == doctest::Approx(1.0));
        CHECK(p.squared_bias == doctest::Approx(0.0));
        CHECK(p.c_mse == doctest::Approx(1.0));
    }
    SUBCASE("pure bias") {
        const MseParts p = mse_decompose_flat({1, 2, 3}, {2, 3, 4});
        CHECK(p.mse == doctest::Approx(1.0));
        CHECK(p.squared_bias == doctest::Approx(1.0));
        CHECK(p.c_mse == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("decomposition identity and direct-loop oracle on random inputs") {
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        RngStream rng(trial, 1);
        const std::size_t n = 2 + rng.next_u64() % 50;
        std::vector<double> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = 3.0 * rng.next_gaussian();
            p[i] = t[i] + rng.next_gaussian();
        }
        const MseParts parts = mse_decompose_flat(t, p);

        double direct = 0.0;
        for (std::size_t i = 0; i < n; ++i) direct += (t[i] - p[i]) * (t[i] - p[i]);
        direct /= static_cast<double>(n);
        CHECK(parts.mse == doctest::Approx(direct).epsilon(1e-13));
        CHECK(std::abs(parts.mse - (parts.squared_bias + parts.c_mse)) <=
              1e-12 * std::max(1.0, parts.mse));
    }
}

TEST_CASE("median ape") {
    SUBCASE("perfect prediction") {
        CHECK(median_ape({{1}, {2}}, {{1}, {2}}) == 0.0);
    }
    SUBCASE("odd count takes the middle order statistic") {
        CHECK(median_ape({{1}, {2}, {4}}, {{1.1}, {2}, {4}}) == doctest::Approx(0.0));
    }
    SUBCASE("even count averages the central pair") {
        CHECK(median_ape({{1}, {2}}, {{1.1}, {2.2}}) == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("zero truth throws, the filtered variant counts") {
        CHECK_THROWS_AS(median_ape({{0.0}, {1.0}}, {{0.5}, {1.0}}), ZeroTruthValue);
        const MedianApeResult r = median_ape_excluding_zeros({{0.0}, {1.0}}, {{0.5}, {2.0}});
        CHECK(r.excluded == 1);
        CHECK(r.value == doctest::Approx(1.0));
    }
    SUBCASE("scale invariance") {
        const TargetMatrix t = random_matrix(40, 2, 3, 2.0);
        TargetMatrix p = t;
        RngStream rng(4, 0);
        for (auto& row : p)
            for (double& x : row) x += 0.3 * rng.next_gaussian();
        const double base = median_ape_excluding_zeros(t, p).value;
        for (const double c : {2.0, 0.125, 1024.0}) {
            TargetMatrix ts = t, ps = p;
            for (auto& row : ts)
                for (double& x : row) x *= c;
            for (auto& row : ps)
                for (double& x : row) x *= c;
            CHECK(median_ape_excluding_zeros(ts, ps).value ==
                  doctest::Approx(base).epsilon(1e-12));
        }
    }
}

TEST_CASE("r squared") {
    SUBCASE("perfect prediction scores one") {
        const TargetMatrix t = random_matrix(20, 2, 5);
        CHECK(r_squared(t, t)[0] == 1.0);
        CHECK(r_squared_pooled(t, t) == 1.0);
    }
    SUBCASE("predicting the mean scores zero") {
        const TargetMatrix t = random_matrix(20, 1, 6);
        double m = 0.0;
        for (const auto& row : t) m += row[0];
        m /= static_cast<double>(t.size());
        const TargetMatrix p(t.size(), {m});
        CHECK(r_squared(t, p)[0] == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("anti-correlated example") {
        CHECK(r_squared({{0}, {1}, {2}}, {{2}, {1}, {0}})[0] == doctest::Approx(-3.0));
    }
    SUBCASE("constant truth throws") {
        CHECK_THROWS_AS(r_squared({{1}, {1}}, {{1}, {2}}), ConstantTruth);
    }
    SUBCASE("affine invariance") {
        const TargetMatrix t = random_matrix(30, 1, 7);
        TargetMatrix p = t;
        RngStream rng(8, 0);
        for (auto& row : p) row[0] += 0.2 * rng.next_gaussian();
        const double base = r_squared(t, p)[0];
        const double a = -2.5, b = 4.0;
        TargetMatrix ta = t, pa = p;
        for (auto& row : ta) row[0] = a * row[0] + b;
        for (auto& row : pa) row[0] = a * row[0] + b;
        CHECK(r_squared(ta, pa)[0] == doctest::Approx(base).epsilon(1e-10));
    }
    SUBCASE("pooled variant sums numerators and denominators") {
        const TargetMatrix t = random_matrix(25, 3, 9);
        TargetMatrix p = t;
        RngStream rng(10, 0);
        for (auto& row : p)
            for (double& x : row) x += 0.5 * rng.next_gaussian();

        std::vector<double> means(3, 0.0);
        for (const auto& row : t)
            for (std::size_t c = 0; c < 3; ++c) means[c] += row[c];
        for (double& m : means) m /= static_cast<double>(t.size());
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j)
            for (std::size_t c = 0; c < 3; ++c) {
                num += (t[j][c] - p[j][c]) * (t[j][c] - p[j][c]);
                den += (t[j][c] - means[c]) * (t[j][c] - means[c]);
            }
        CHECK(r_squared_pooled(t, p) == doctest::Approx(1.0 - num / den).epsilon(1e-13));
    }
}

TEST_CASE("kfold") {
    SUBCASE("n=12 k=6 gives six folds of two") {
        const FoldPlan plan = kfold(12, 6, 1);
        for (int f = 0; f < 6; ++f) CHECK(plan.fold_indices(f).size() == 2);
    }
    SUBCASE("n=7 k=6 gives sizes {2,1,1,1,1,1}") {
        const FoldPlan plan = kfold(7, 6, 1);
        std::multiset<std::size_t> sizes;
        for (int f = 0; f < 6; ++f) sizes.insert(plan.fold_indices(f).size());
        CHECK(sizes == std::multiset<std::size_t>{2, 1, 1, 1, 1, 1});
    }
    SUBCASE("folds partition the index set") {
        RngStream rng(2, 0);
        for (int trial = 0; trial < 30; ++trial) {
            const std::size_t n = 5 + rng.next_u64() % 100;
            const int k = 2 + static_cast<int>(rng.next_u64() % std::min<std::size_t>(n - 1, 9));
            const FoldPlan plan = kfold(n, k, trial);
            std::set<std::size_t> seen;
            std::size_t total = 0;
            for (int f = 0; f < k; ++f) {
                const auto idx = plan.fold_indices(f);
                total += idx.size();
                seen.insert(idx.begin(), idx.end());
            }
            CHECK(total == n);
            CHECK(seen.size() == n);
            // near-equal sizes
            std::size_t mn = n, mx = 0;
            for (int f = 0; f < k; ++f) {
                mn = std::min(mn, plan.fold_indices(f).size());
                mx = std::max(mx, plan.fold_indices(f).size());
            }
            CHECK(mx - mn <= 1);
        }
    }
    SUBCASE("deterministic in the seed") {
        CHECK(kfold(50, 5, 9).assignment == kfold(50, 5, 9).assignment);
        CHECK(kfold(50, 5, 9).assignment != kfold(50, 5, 10).assignment);
    }
    SUBCASE("invalid k") {
        CHECK_THROWS_AS(kfold(10, 1, 0), InvalidK);
        CHECK_THROWS_AS(kfold(10, 11, 0), InvalidK);
    }
}

TEST_CASE("evaluation report") {
    const TargetMatrix t = random_matrix(100, 2, 11, 0.5);
    TargetMatrix p = t;
    RngStream rng(12, 0);
    for (auto& row : p)
        for (double& x : row) x += 0.1 * rng.next_gaussian();

    const EvalReport r = evaluate_predictions(t, p, "ds", "model");
    CHECK(std::abs(r.mse - (r.squared_bias + r.c_mse)) <= 1e-12 * std::max(1.0, r.mse));
    CHECK(r.n_samples == 100);
    CHECK(r.n_coords == 2);
    CHECK(r.per_coordinate.size() == 2);
    CHECK(r.r2 <= 1.0);

    const nlohmann::json j = nlohmann::json::parse(eval_report_to_json(r));
    CHECK(j.at("mse").get<double>() == r.mse);
    CHECK(j.at("squared_bias").get<double>() == r.squared_bias);
    CHECK(j.at("c_mse").get<double>() == r.c_mse);
    CHECK(j.at("median_ape").get<double>() == r.median_ape);
    CHECK(j.at("r2").get<double>() == r.r2);
    CHECK(j.at("per_coordinate").size() == 2);
    CHECK(j.at("dataset_id").get<std::string>() == "ds");
}
