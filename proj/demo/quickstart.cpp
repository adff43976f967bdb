// Simulate a two-factor experiment, fit the entropy-penalized policy with the
// weighting estimator, and compare it with the policy fitted on the truth.
#include <cstdio>

#include "factint/factint.hpp"

int main() {
    using namespace factint;
    const auto table = PotentialOutcomeTable::bernoulli({0.1, 0.2, 0.3, 0.9});
    const SimConfig sim{AssignmentDist::uniform(2), OutcomeFamily::bernoulli, table, 4000, 1, 2024};
    const FactorialDataset data = generate(sim, 0);

    const double lambda = 0.05;
    const auto fitted = maximize(make_objective({EstimatorKind::ipw, VarianceVariant::plugin, lambda}, data), 2);
    const auto truth = maximize(CellObjective::from_table(table, {EstimatorKind::true_q, VarianceVariant::plugin, lambda}), 2);

    std::printf("theta_hat = (%.4f, %.4f)  Q~ = %.4f\n", fitted.theta_hat[0], fitted.theta_hat[1], fitted.value);
    std::printf("theta*    = (%.4f, %.4f)  Q  = %.4f\n", truth.theta_hat[0], truth.theta_hat[1], truth.value);
    std::printf("true value of theta_hat: %.4f\n", q_true(table, fitted.theta_hat, lambda));

    const auto split = split_estimate(data, 0.5, {EstimatorKind::adaptive, VarianceVariant::plugin, lambda}, {}, 7);
    std::printf("split estimate of Q(theta*): %.4f (n1=%zu, n2=%zu)\n", split.q_hat, split.n1, split.n2);
}
