#include <gtest/gtest.h>

#include <algorithm>

#include "factint/inference.hpp"
#include "factint/sim.hpp"

using namespace factint;

namespace {

const ObjectiveSpec kAdaptive{EstimatorKind::adaptive, VarianceVariant::plugin, 0.05};

}  // namespace

TEST(SplitEstimate, FoldsPartitionTheRows) {
    const auto table = PotentialOutcomeTable::bernoulli({0.1, 0.2, 0.3, 0.9});
    const SimConfig cfg{AssignmentDist::uniform(2), OutcomeFamily::bernoulli, table, 101, 1, 4};
    const auto r = split_estimate(generate(cfg, 0), 0.3, kAdaptive, {}, 11);
    EXPECT_EQ(r.n1 + r.n2, 101u);
    EXPECT_EQ(r.n1, 30u);
    std::vector<std::size_t> all = r.fold1;
    all.insert(all.end(), r.fold2.begin(), r.fold2.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}

TEST(SplitEstimate, RejectsEmptyFolds) {
    const FactorialDataset d(AssignmentDist::uniform(1), {{0, 1.0}, {1, 0.0}, {1, 1.0}});
    EXPECT_THROW(split_estimate(d, 0.0, kAdaptive, {}, 1), std::invalid_argument);
    EXPECT_THROW(split_estimate(d, 1.0, kAdaptive, {}, 1), std::invalid_argument);
    EXPECT_THROW(split_estimate(FactorialDataset(AssignmentDist::uniform(1), {{0, 1.0}}), 0.5, kAdaptive, {}, 1),
                 std::invalid_argument);
}

TEST(SplitEstimate, IdenticalFoldsWithExactMeansGiveTrueValue) {
    // Every cell holds exactly its mean, twice: both folds see c exactly.
    const std::vector<double> c = {0.1, 0.2, 0.3, 0.9};
    std::vector<Unit> rows;
    for (CellIndex t = 0; t < 4; ++t) rows.push_back({t, c[t]});
    const FactorialDataset fold(AssignmentDist::uniform(2), rows);
    const ObjectiveSpec spec{EstimatorKind::adaptive, VarianceVariant::plugin, 0.05};
    const SplitOptions adaptive_eval{EstimatorKind::adaptive, true};
    const auto [theta, q] = fit_and_evaluate(fold, fold, spec, {}, adaptive_eval);
    EXPECT_NEAR(q, q_true(PotentialOutcomeTable::bernoulli(c), theta, 0.05), 1e-12);
}

TEST(SplitEstimate, NoLeakageFromFoldTwoOrder) {
    const auto table = PotentialOutcomeTable::bernoulli({0.1, 0.2, 0.3, 0.9});
    const SimConfig cfg{AssignmentDist::uniform(2), OutcomeFamily::bernoulli, table, 400, 1, 8};
    const auto data = generate(cfg, 0);
    std::vector<std::size_t> f1, f2;
    for (std::size_t i = 0; i < data.n(); ++i) (i % 2 ? f2 : f1).push_back(i);
    std::vector<std::size_t> f2_rev(f2.rbegin(), f2.rend());
    const auto a = fit_and_evaluate(data.subset(f1), data.subset(f2), kAdaptive, {});
    const auto b = fit_and_evaluate(data.subset(f1), data.subset(f2_rev), kAdaptive, {});
    EXPECT_EQ(a.first.vec(), b.first.vec());
    EXPECT_NEAR(a.second, b.second, 1e-12);
}

TEST(SplitEstimate, PenaltyCanBeExcluded) {
    const auto table = PotentialOutcomeTable::bernoulli({0.1, 0.2, 0.3, 0.9});
    const SimConfig cfg{AssignmentDist::uniform(2), OutcomeFamily::bernoulli, table, 300, 1, 5};
    const auto data = generate(cfg, 0);
    const auto with = split_estimate(data, 0.5, kAdaptive, {}, 3);
    const auto without = split_estimate(data, 0.5, kAdaptive, {}, 3, {EstimatorKind::ipw, false});
    EXPECT_EQ(with.theta_1.vec(), without.theta_1.vec());
    EXPECT_NEAR(with.q_hat - without.q_hat, 0.05 * entropy(with.theta_1), 1e-12);
}

TEST(SplitEstimate, ConditionalUnbiasednessOfFoldTwo) {
    const auto table = PotentialOutcomeTable::bernoulli({0.1, 0.2, 0.3, 0.9});
    const SimConfig fit_cfg{AssignmentDist::uniform(2), OutcomeFamily::bernoulli, table, 200, 1, 6};
    const auto fold1 = generate(fit_cfg, 0);
    const auto theta = maximize(make_objective(kAdaptive, fold1), 2).theta_hat;
    SimConfig eval_cfg = fit_cfg;
    eval_cfg.seed = 606;
    std::vector<double> q(3000);
    for (std::size_t r = 0; r < q.size(); ++r)
        q[r] = fit_and_evaluate(fold1, generate(eval_cfg, r), kAdaptive, {}).second;
    const auto st = mc_stats(q);
    EXPECT_NEAR(st.mean, q_true(table, theta, 0.05), 3.0 * st.se);
}
