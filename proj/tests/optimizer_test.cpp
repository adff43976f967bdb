#include <gtest/gtest.h>

#include <cmath>

#include "factint/objective.hpp"
#include "factint/optimizer.hpp"

using namespace factint;

namespace {

CellObjective truth(std::vector<double> c, double lambda) {
    const std::size_t cells = c.size();
    return CellObjective::from_table(PotentialOutcomeTable::gaussian(std::move(c), std::vector<double>(cells, 1.0)),
                                     {EstimatorKind::true_q, VarianceVariant::plugin, lambda});
}

// Exhaustive grid at resolution 1/400 (clamped into the box), evaluating
// sum_t c_t P_theta(t) + lambda entropy directly.
double grid_max(const std::vector<double>& c, double lambda, int K) {
    const int m = 401;
    std::vector<double> axis(m), h(m);
    for (int i = 0; i < m; ++i) {
        const double t = std::clamp(i / 400.0, kDefaultBoxEps, 1.0 - kDefaultBoxEps);
        axis[i] = t;
        h[i] = -(t * std::log(t) + (1 - t) * std::log(1 - t));
    }
    std::vector<int> idx(K, 0);
    double best = -1e300;
    for (;;) {
        double q = 0.0, ent = 0.0;
        for (std::size_t t = 0; t < c.size(); ++t) {
            double p = c[t];
            for (int k = 0; k < K; ++k) p *= ((t >> k) & 1u) ? axis[idx[k]] : 1.0 - axis[idx[k]];
            q += p;
        }
        for (int k = 0; k < K; ++k) ent += h[idx[k]];
        best = std::max(best, q + lambda * ent);
        int k = 0;
        while (k < K && ++idx[k] == m) idx[k++] = 0;
        if (k == K) break;
    }
    return best;
}

}  // namespace

TEST(Maximize, ClosedFormOneFactor) {
    const auto r = maximize(truth({0.2, 0.8}, 0.1), 1);
    EXPECT_NEAR(r.theta_hat[0], 0.9975273768433653, 1e-6);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.all_start_values.size(), 16u);
}

TEST(Maximize, EntropyDominatedReturnsCenter) {
    Engine eng(4);
    std::vector<double> c(8);
    for (auto& v : c) v = uniform01(eng);
    const auto r = maximize(truth(c, 1e6), 3);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.theta_hat[k], 0.5, 1e-6);
}

TEST(Maximize, UniqueBestCellGivesUpperCorner) {
    const auto r = maximize(truth({0.1, 0.2, 0.3, 0.9}, 0.0), 2);
    EXPECT_DOUBLE_EQ(r.theta_hat[0], 1.0 - kDefaultBoxEps);
    EXPECT_DOUBLE_EQ(r.theta_hat[1], 1.0 - kDefaultBoxEps);
}

TEST(Maximize, AgreesWithGridOracle) {
    Engine eng(99);
    for (int rep = 0; rep < 50; ++rep) {
        const int K = 1 + rep % 3;
        std::vector<double> c(cell_count(K));
        for (auto& v : c) v = uniform01(eng);
        const double lambda = rep % 5 == 0 ? 0.0 : 0.3 * uniform01(eng);
        const auto obj = truth(c, lambda);
        const auto r = maximize(obj, K);
        EXPECT_NEAR(r.value, obj.value(r.theta_hat), 1e-15);
        EXPECT_NEAR(r.value, grid_max(c, lambda, K), 1e-4) << "rep " << rep;
    }
}

TEST(Maximize, DeterministicAndMonotone) {
    Engine eng(5);
    std::vector<double> c(16);
    for (auto& v : c) v = uniform01(eng);
    OptimizerConfig cfg;
    cfg.seed = 42;
    const auto a = maximize(truth(c, 0.05), 4, cfg);
    const auto b = maximize(truth(c, 0.05), 4, cfg);
    EXPECT_EQ(a.theta_hat.vec(), b.theta_hat.vec());
    EXPECT_EQ(a.all_start_values, b.all_start_values);
    EXPECT_EQ(a.start_index, b.start_index);
    for (std::size_t i = 1; i < a.value_trace.size(); ++i) EXPECT_GE(a.value_trace[i], a.value_trace[i - 1]);
}

TEST(Maximize, TiesGoToLowestStart) {
    const auto r = maximize(truth({0.5, 0.5}, 0.0), 1);
    EXPECT_EQ(r.start_index, 0);
    EXPECT_DOUBLE_EQ(r.theta_hat[0], 0.5);
}

TEST(Maximize, NonFiniteObjectiveIsNumericalError) {
    auto bad = [](const ThetaVector& th) { return Evaluation{std::log(th[0] - 0.5), {1.0}}; };
    EXPECT_THROW(maximize(bad, 1), numerical_error);
}

TEST(Maximize, RespectsCustomBox) {
    OptimizerConfig cfg;
    cfg.box = Box::symmetric(2, 0.7);
    const auto r = maximize(truth({0.1, 0.2, 0.3, 0.9}, 0.0), 2, cfg);
    EXPECT_DOUBLE_EQ(r.theta_hat[0], 0.7);
    EXPECT_DOUBLE_EQ(r.theta_hat[1], 0.7);
    cfg.box = Box{{0.2}, {0.1}};
    EXPECT_THROW(maximize(truth({0.1, 0.2}, 0.0), 1, cfg), std::invalid_argument);
}

TEST(HighdimBox, Examples) {
    const Box b = highdim_box(12, 4096, 0.1);
    EXPECT_NEAR(b.hi[0], 0.8254041852680184, 1e-12);
    EXPECT_NEAR(b.lo[0], 1.0 - 0.8254041852680184, 1e-12);
    EXPECT_LE(std::pow(b.hi[0], 12) * 4096.0 / 4096.0, 0.1 + 1e-12);
    EXPECT_DOUBLE_EQ(highdim_box(3, 100, 1.0).hi[0], 1.0 - kDefaultBoxEps);
    EXPECT_THROW(highdim_box(10, 1024, std::pow(2.0, -10)), std::invalid_argument);
    EXPECT_THROW(highdim_box(2, 10, 0.0), std::invalid_argument);
}
