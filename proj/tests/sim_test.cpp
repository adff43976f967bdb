#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "factint/sim.hpp"

using namespace factint;

namespace {

SimConfig bern(std::vector<double> c, std::size_t n, std::size_t R, std::uint64_t seed) {
    const int K = std::countr_zero(c.size());
    return SimConfig{AssignmentDist::uniform(K), OutcomeFamily::bernoulli, PotentialOutcomeTable::bernoulli(c), n, R,
                     seed};
}

}  // namespace

TEST(Generate, NearOneMeanAndCellFrequencies) {
    const auto d = generate(bern({0.999, 0.999}, 10000, 1, 1), 0);
    double mean = 0.0;
    for (const auto& u : d.rows()) mean += u.y;
    EXPECT_GE(mean / 10000.0, 0.99);

    const auto e = generate(bern({0.5, 0.5, 0.5, 0.5}, 100000, 1, 2), 0);
    const auto s = summarize_cells(e);
    for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(s.n_t[t] / 1e5, 0.25, 0.01);
}

TEST(Generate, ProductAssignmentFrequencies) {
    SimConfig cfg = bern({0.5, 0.5, 0.5, 0.5}, 100000, 1, 3);
    cfg.assignment = AssignmentDist::product({0.8, 0.3});
    const auto s = summarize_cells(generate(cfg, 0));
    const auto a = cfg.assignment.cell_probabilities();
    for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(s.n_t[t] / 1e5, a[t], 0.01);
}

TEST(Generate, ReproducibleBytes) {
    const auto cfg = bern({0.2, 0.4, 0.6, 0.8}, 500, 1, 11);
    std::ostringstream a, b, c;
    write_dataset(a, generate(cfg, 3));
    write_dataset(b, generate(cfg, 3));
    write_dataset(c, generate(cfg, 4));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
}

TEST(McStats, BatchMeansAndOrderInsensitiveMean) {
    std::vector<double> x(1000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 7);
    const auto s = mc_stats(x);
    EXPECT_NEAR(s.mean, 2.997, 1e-12);
    std::vector<double> r(x.rbegin(), x.rend());
    EXPECT_NEAR(mc_stats(r).mean, s.mean, 1e-12);
    EXPECT_GT(s.se, 0.0);
    EXPECT_EQ(mc_stats(std::vector<double>(10, 1.0)).se, 0.0);
}

TEST(ValidateUnbiasedness, PassesAndDegenerateCases) {
    EXPECT_TRUE(validate_unbiasedness(bern({0.1, 0.3, 0.6, 0.7}, 200, 10000, 5), ThetaVector({0.3, 0.7})).pass);

    auto flat = bern({0.5, 0.5}, 100, 200, 6);
    flat.family = OutcomeFamily::gaussian;
    flat.table = PotentialOutcomeTable::gaussian({0.5, 0.5}, {0.0, 0.0});
    const auto r = validate_unbiasedness(flat, ThetaVector({0.5}));
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(r.degenerate);
}

TEST(ValidateUnbiasedness, ReportCarriesToleranceAndSe) {
    const auto r = validate_unbiasedness(bern({0.2, 0.8}, 50, 400, 7), ThetaVector({0.6}));
    EXPECT_GT(r.se, 0.0);
    EXPECT_DOUBLE_EQ(r.tolerance, 3.0 * r.se);
    EXPECT_EQ(r.pass, std::abs(r.statistic - r.target) <= r.tolerance);
    EXPECT_EQ(r.seed, 7u);
}

TEST(ValidateClt, DegenerateConstantOutcomes) {
    auto flat = bern({0.5, 0.5}, 100, 50, 6);
    flat.family = OutcomeFamily::gaussian;
    flat.table = PotentialOutcomeTable::gaussian({0.5, 0.5}, {0.0, 0.0});
    const auto r = validate_clt(flat, ThetaVector({0.5}));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_TRUE(r[0].degenerate);
    EXPECT_FALSE(r[0].pass);
}

TEST(CurseDiagnostic, ExactApproxAndMonteCarlo) {
    const auto r = curse_diagnostic(10, 100);
    // (1 - 2/1024)^100 and exp(-200/1024), evaluated independently.
    EXPECT_NEAR(r.exact, 0.8224204785913858, 1e-12);
    EXPECT_NEAR(r.approx, 0.8225775623986646, 1e-12);
    EXPECT_EQ(curse_diagnostic(6, 0).exact, 1.0);
    const auto mc = curse_diagnostic(10, 100, 10000, 4);
    EXPECT_TRUE(mc.report.pass);
}

TEST(Median, OddAndEven) {
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
}

TEST(ValidateConsistency, HugeLambdaPinsCenter) {
    ConsistencySetup setup;
    setup.table = PotentialOutcomeTable::bernoulli({0.1, 0.2, 0.3, 0.9});
    setup.lambda = 1e6;
    setup.replicates = 10;
    for (std::size_t n : {100, 400}) {
        const auto err = adaptive_theta_errors(setup, n, ThetaVector({0.5, 0.5}));
        for (double e : err) EXPECT_LT(e, 1e-6);
    }
}
