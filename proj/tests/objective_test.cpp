#include <gtest/gtest.h>

#include <cmath>

#include "factint/objective.hpp"
#include "factint/sim.hpp"

using namespace factint;

namespace {

std::vector<double> random_theta(Engine& eng, int K, double lo = 0.05) {
    std::vector<double> th(K);
    for (auto& v : th) v = lo + (1.0 - 2.0 * lo) * uniform01(eng);
    return th;
}

FactorialDataset random_dataset(Engine& eng, int K, std::size_t n) {
    std::vector<Unit> rows(n);
    for (auto& u : rows) {
        u.combo = static_cast<CellIndex>(eng() % cell_count(K));
        u.y = uniform01(eng) * 2.0 - 0.3;
    }
    return FactorialDataset(AssignmentDist::uniform(K), rows);
}

double max_rel_fd_error(const CellObjective& obj, const std::vector<double>& th) {
    const auto e = obj(ThetaVector(th));
    double worst = 0.0;
    for (std::size_t k = 0; k < th.size(); ++k) {
        const double h = 1e-5;
        auto up = th, down = th;
        up[k] += h;
        down[k] -= h;
        const double fd = (obj.value(ThetaVector(up)) - obj.value(ThetaVector(down))) / (2 * h);
        const double scale = std::max(1.0, std::abs(fd));
        worst = std::max(worst, std::abs(fd - e.gradient[k]) / scale);
    }
    return worst;
}

}  // namespace

TEST(QTrue, Examples) {
    const auto table = PotentialOutcomeTable::bernoulli({0.2, 0.8});
    EXPECT_NEAR(q_true(table, ThetaVector({0.7}), 0.0), 0.62, 1e-15);
    const auto flat = PotentialOutcomeTable::gaussian(std::vector<double>(8, 0.37), std::vector<double>(8, 1.0));
    EXPECT_NEAR(q_true(flat, ThetaVector({0.1, 0.5, 0.93}), 0.0), 0.37, 1e-15);
    const auto t2 = PotentialOutcomeTable::bernoulli({0.1, 0.2, 0.3, 0.4});
    EXPECT_NEAR(q_true(t2, ThetaVector({0.5, 0.5}), 0.5), 0.9431471805599453, 1e-12);
}

TEST(QAdaptive, PlugInIdentityAndSingleCell) {
    // One unit per cell with y = c_t, so c_hat = c exactly.
    const std::vector<double> c = {0.1, 0.5, 0.2, 0.7, 0.3, 0.3, 0.9, 0.4};
    std::vector<Unit> rows;
    for (CellIndex t = 0; t < 8; ++t) rows.push_back({t, c[t]});
    const auto s = summarize_cells(FactorialDataset(AssignmentDist::uniform(3), rows));
    const ThetaVector theta({0.2, 0.6, 0.8});
    EXPECT_NEAR(q_adaptive(s, theta, 0.3), q_true(PotentialOutcomeTable::bernoulli(c), theta, 0.3), 1e-12);

    const auto one = summarize_cells(FactorialDataset(AssignmentDist::uniform(3), {{5, 0.6}, {5, 0.2}}));
    EXPECT_NEAR(q_adaptive(one, theta, 0.0), 0.4 * prob_of_combo(theta, TreatmentCombo(3, 5)), 1e-15);
}

TEST(QIpw, Examples) {
    Engine eng(3);
    const auto d = random_dataset(eng, 3, 30);
    double mean = 0.0;
    for (const auto& u : d.rows()) mean += u.y;
    EXPECT_NEAR(q_ipw(d, ThetaVector::uniform(3, 0.5), 0.0), mean / 30.0, 1e-12);
    EXPECT_NEAR(q_ipw(FactorialDataset(AssignmentDist::uniform(1), {{1, 2.5}}), ThetaVector({0.8}), 0.0), 4.0,
                1e-14);
}

TEST(QIpw, UnbiasedAtK2) {
    const auto table = PotentialOutcomeTable::bernoulli({0.15, 0.4, 0.55, 0.8});
    const SimConfig cfg{AssignmentDist::uniform(2), OutcomeFamily::bernoulli, table, 500, 10000, 77};
    EXPECT_TRUE(validate_unbiasedness(cfg, ThetaVector({0.3, 0.7})).pass);
}

TEST(QHajek, Examples) {
    Engine eng(4);
    const auto d = random_dataset(eng, 2, 25);
    double mean = 0.0;
    for (const auto& u : d.rows()) mean += u.y;
    EXPECT_NEAR(q_hajek(d, ThetaVector({0.5, 0.5})), mean / 25.0, 1e-12);

    std::vector<Unit> rows = d.rows();
    for (auto& u : rows) u.y = 1.75;
    EXPECT_NEAR(q_hajek(FactorialDataset(d.dist(), rows), ThetaVector({0.1, 0.95})), 1.75, 1e-12);

    for (auto& u : rows) u.y = 3.0 * uniform01(eng);
    const FactorialDataset base(d.dist(), rows);
    for (auto& u : rows) u.y *= 2.5;
    EXPECT_NEAR(q_hajek(FactorialDataset(d.dist(), rows), ThetaVector({0.3, 0.6})),
                2.5 * q_hajek(base, ThetaVector({0.3, 0.6})), 1e-12);
}

TEST(QHajek, RatioEstimatorNearTruth) {
    const auto table = PotentialOutcomeTable::bernoulli({0.2, 0.8});
    const SimConfig cfg{AssignmentDist::uniform(1), OutcomeFamily::bernoulli, table, 2000, 4000, 12};
    const ThetaVector theta({0.9});
    std::vector<double> v(cfg.replicates);
    for (std::size_t r = 0; r < v.size(); ++r) v[r] = q_hajek(generate(cfg, r), theta);
    const auto st = mc_stats(v);
    EXPECT_NEAR(st.mean, 0.74, 3.0 * st.se + 0.005);
}

TEST(QMeanVariance, PenaltyOffAndConstantOutcomes) {
    Engine eng(6);
    const auto d = random_dataset(eng, 2, 40);
    const ThetaVector theta({0.35, 0.8});
    for (auto v : {VarianceVariant::plugin, VarianceVariant::u1, VarianceVariant::u2})
        EXPECT_NEAR(q_mean_variance(d, std::nullopt, theta, 0.0, v), q_ipw(d, theta, 0.0), 1e-12);

    std::vector<Unit> rows;
    for (CellIndex t = 0; t < 4; ++t)
        for (int i = 0; i < 3; ++i) rows.push_back({t, 0.6});
    const std::vector<double> zero(4, 0.0);
    EXPECT_NEAR(q_mean_variance(FactorialDataset(AssignmentDist::uniform(2), rows), std::span<const double>(zero),
                                theta, 2.0, VarianceVariant::plugin),
                0.6, 1e-12);
}

TEST(QMeanVariance, CellObjectiveMatchesDirectFormula) {
    Engine eng(10);
    for (int rep = 0; rep < 30; ++rep) {
        const int K = 1 + rep % 3;
        const auto d = random_dataset(eng, K, 3 + eng() % 40);
        const ThetaVector theta(random_theta(eng, K));
        const double lambda = 2.0 * uniform01(eng);
        for (auto v : {VarianceVariant::plugin, VarianceVariant::u1, VarianceVariant::u2}) {
            const auto obj = make_objective({EstimatorKind::mean_variance, v, lambda}, d);
            EXPECT_NEAR(obj.value(theta), q_mean_variance(d, std::nullopt, theta, lambda, v), 1e-10);
        }
    }
}

TEST(QMeanVariance, MonteCarloMean) {
    const auto table = PotentialOutcomeTable::gaussian({0.2, 0.8}, {0.4, 0.4});
    const SimConfig cfg{AssignmentDist::uniform(1), OutcomeFamily::gaussian, table, 500, 4000, 31};
    const auto s2 = table.variances();
    std::vector<double> v(cfg.replicates);
    for (std::size_t r = 0; r < v.size(); ++r)
        v[r] = q_mean_variance(generate(cfg, r), std::span<const double>(s2), ThetaVector({0.5}), 1.0,
                               VarianceVariant::plugin);
    const auto st = mc_stats(v);
    EXPECT_NEAR(st.mean, 0.41, 3.0 * st.se + 0.005);
}

TEST(Gradient, ConstantAndSymmetricCases) {
    const auto flat = PotentialOutcomeTable::gaussian(std::vector<double>(4, 0.5), std::vector<double>(4, 0.0));
    const auto g = CellObjective::from_table(flat, {EstimatorKind::true_q, VarianceVariant::plugin, 0.0})(
        ThetaVector({0.2, 0.7}));
    for (double v : g.gradient) EXPECT_NEAR(v, 0.0, 1e-15);

    // v depends only on popcount, so the gradient at all-0.5 is the same on
    // every axis and the entropy term vanishes.
    const std::vector<double> pc = {0.0, 1.0, 1.0, 2.0, 1.0, 2.0, 2.0, 3.0};
    const auto sym = PotentialOutcomeTable::gaussian(pc, std::vector<double>(8, 0.0));
    const auto a = CellObjective::from_table(sym, {EstimatorKind::true_q, VarianceVariant::plugin, 0.0})(
        ThetaVector::uniform(3, 0.5));
    const auto b = CellObjective::from_table(sym, {EstimatorKind::true_q, VarianceVariant::plugin, 0.7})(
        ThetaVector::uniform(3, 0.5));
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(a.gradient[k], a.gradient[0], 1e-14);
        EXPECT_NEAR(b.gradient[k], a.gradient[k], 1e-14);
    }
}

TEST(Gradient, MatchesCentralDifferencesOnRandomInstances) {
    Engine eng(2024);
    const std::array<EstimatorKind, 5> kinds = {EstimatorKind::true_q, EstimatorKind::adaptive, EstimatorKind::ipw,
                                                EstimatorKind::hajek, EstimatorKind::mean_variance};
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int K = 1 + rep % 6;
        const double lambda = uniform01(eng);
        const auto kind = kinds[rep % kinds.size()];
        const auto variant = static_cast<VarianceVariant>(rep % 3);
        const ObjectiveSpec spec{kind, variant, lambda};
        std::optional<CellObjective> obj;
        if (kind == EstimatorKind::true_q) {
            std::vector<double> c(cell_count(K));
            for (auto& v : c) v = uniform01(eng);
            obj = CellObjective::from_table(PotentialOutcomeTable::gaussian(c, std::vector<double>(c.size(), 1.0)),
                                            spec);
        } else {
            obj = make_objective(spec, random_dataset(eng, K, 10 + eng() % 100));
        }
        worst = std::max(worst, max_rel_fd_error(*obj, random_theta(eng, K, 0.1)));
    }
    EXPECT_LE(worst, 1e-6);
}

TEST(Objective, AffineResponse) {
    Engine eng(9);
    const std::vector<double> c = {0.1, 0.3, 0.7, 0.2};
    std::vector<double> c2(4);
    for (int t = 0; t < 4; ++t) c2[t] = 3.0 * c[t] + 1.5;
    const auto t1 = PotentialOutcomeTable::gaussian(c, std::vector<double>(4, 1.0));
    const auto t2 = PotentialOutcomeTable::gaussian(c2, std::vector<double>(4, 1.0));
    for (int rep = 0; rep < 20; ++rep) {
        const ThetaVector theta(random_theta(eng, 2));
        EXPECT_NEAR(q_true(t2, theta, 0.0), 3.0 * q_true(t1, theta, 0.0) + 1.5, 1e-12);
    }
    const ObjectiveSpec spec{EstimatorKind::true_q, VarianceVariant::plugin, 0.0};
    const auto a = maximize(CellObjective::from_table(t1, spec), 2);
    const auto b = maximize(CellObjective::from_table(t2, spec), 2);
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(a.theta_hat[k], b.theta_hat[k], 1e-9);
}

TEST(SeparationRadius, ErrorWhenEtaExceedsRange) {
    const auto table = PotentialOutcomeTable::bernoulli({0.2, 0.8});
    EXPECT_THROW(separation_radius(table, 0.1, 10.0), std::invalid_argument);
    EXPECT_THROW(separation_radius(table, 0.1, 0.0), std::invalid_argument);
}

TEST(SeparationRadius, MatchesDenseOneDimensionalScan) {
    const auto table = PotentialOutcomeTable::bernoulli({0.2, 0.8});
    const double lambda = 0.1, eta = 0.001;
    const auto r = separation_radius(table, lambda, eta);
    // Independent scan of the same grid j/200, clamped into the box.
    const double theta_star = 1.0 / (1.0 + std::exp(-6.0));
    const double q_star = q_true(table, ThetaVector({theta_star}), lambda);
    double radius = 0.0;
    for (int j = 0; j <= 200; ++j) {
        const double th = std::clamp(j / 200.0, kDefaultBoxEps, 1.0 - kDefaultBoxEps);
        if (std::abs(q_true(table, ThetaVector({th}), lambda) - q_star) <= eta)
            radius = std::max(radius, std::abs(th - theta_star));
    }
    EXPECT_NEAR(r.radius, radius, 1e-6);
    EXPECT_NEAR(r.theta_star[0], theta_star, 1e-6);
    EXPECT_GT(r.radius, 0.0);
}

TEST(ConsistencyScale, Formula) {
    EXPECT_NEAR(consistency_eta_scale(3, 800), std::sqrt(8.0 * std::log(8.0) / 800.0), 1e-15);
}
