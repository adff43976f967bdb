// inference.hpp
//
// Sample-splitting estimate of the optimal value Q(theta*): fit the policy on
// one fold, evaluate it on the other.
#pragma once
#include <algorithm>
#include <numeric>
#include <vector>

#include "objective.hpp"
#include "optimizer.hpp"
#include "random.hpp"

namespace factint {

struct SplitOptions {
    EstimatorKind eval_estimator = EstimatorKind::ipw;
    bool include_penalty = true;  // add lambda f(theta_1) to the fold-2 value
};

struct SplitResult {
    ThetaVector theta_1;
    double q_hat = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> fold1;  // row indices, ascending
    std::vector<std::size_t> fold2;
};

// Fits on `fold1` and evaluates the fitted policy on `fold2`.
inline std::pair<ThetaVector, double> fit_and_evaluate(const FactorialDataset& fold1,
                                                      const FactorialDataset& fold2,
                                                      const ObjectiveSpec& fit_spec,
                                                      const OptimizerConfig& opt,
                                                      const SplitOptions& options = {}) {
    require(fold1.K() == fold2.K(), "folds must share K");
    const auto fit = maximize(make_objective(fit_spec, fold1), fold1.K(), opt);
    ObjectiveSpec eval_spec = fit_spec;
    eval_spec.estimator = options.eval_estimator;
    if (!options.include_penalty) eval_spec.penalty = PenaltyKind::none;
    if (eval_spec.estimator == EstimatorKind::mean_variance)
        require(fit_spec.estimator == EstimatorKind::mean_variance,
                "mean-variance evaluation needs a mean-variance fit spec");
    const double q = make_objective(eval_spec, fold2).value(fit.theta_hat);
    return {fit.theta_hat, q};
}

inline SplitResult split_estimate(const FactorialDataset& data, double split_fraction,
                                  const ObjectiveSpec& fit_spec, const OptimizerConfig& opt,
                                  std::uint64_t seed, const SplitOptions& options = {}) {
    require(split_fraction > 0.0 && split_fraction < 1.0, "split fraction must lie in (0,1)");
    const std::size_t n = data.n();
    const auto n1 = static_cast<std::size_t>(std::llround(split_fraction * static_cast<double>(n)));
    require(n1 >= 1 && n1 < n, "split leaves an empty fold (n=" + std::to_string(n) +
                                   ", fraction=" + std::to_string(split_fraction) + ")");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Engine eng = make_engine(seed, 0x5917);
    std::shuffle(order.begin(), order.end(), eng);
    std::vector<std::size_t> fold1(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n1));
    std::vector<std::size_t> fold2(order.begin() + static_cast<std::ptrdiff_t>(n1), order.end());
    std::sort(fold1.begin(), fold1.end());
    std::sort(fold2.begin(), fold2.end());
    auto [theta, q] =
        fit_and_evaluate(data.subset(fold1), data.subset(fold2), fit_spec, opt, options);
    return SplitResult{std::move(theta), q, fold1.size(), fold2.size(), seed, std::move(fold1),
                       std::move(fold2)};
}

}  // namespace factint
