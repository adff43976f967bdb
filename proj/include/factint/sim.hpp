// sim.hpp
//
// Synthetic factorial experiments and Monte Carlo checks of the estimators'
// finite-sample behaviour. Replicate r of a configuration always uses the
// engine seeded by (config.seed, r), so every statistic here is a pure
// function of the configuration.
#pragma once
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "design.hpp"
#include "estimators.hpp"
#include "inference.hpp"
#include "objective.hpp"
#include "optimizer.hpp"
#include "random.hpp"

namespace factint {

enum class OutcomeFamily { bernoulli, gaussian };

struct SimConfig {
    AssignmentDist assignment = AssignmentDist::uniform(1);
    OutcomeFamily family = OutcomeFamily::bernoulli;
    PotentialOutcomeTable table;
    std::size_t n = 1;
    std::size_t replicates = 1;
    std::uint64_t seed = 0;

    int K() const { return assignment.factors(); }

    void validate() const {
        require(table.K == assignment.factors(), "outcome table K does not match assignment K");
        require(table.c.size() == cell_count(table.K) && table.sigma.size() == table.c.size(),
                "outcome table must cover all 2^K cells");
        require(n >= 1, "n must be positive");
        require(replicates >= 1, "need at least one replicate");
        if (family == OutcomeFamily::bernoulli)
            for (double c : table.c) require(c > 0.0 && c < 1.0, "bernoulli cell means must lie in (0,1)");
    }
};

inline FactorialDataset generate(const SimConfig& cfg, std::size_t replicate_index) {
    cfg.validate();
    Engine eng = make_engine(cfg.seed, replicate_index);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int K = cfg.K();
    const bool uniform = cfg.assignment.kind() == AssignmentDist::Kind::uniform;
    std::vector<Unit> rows(cfg.n);
    for (Unit& u : rows) {
        if (uniform) {
            u.combo = static_cast<CellIndex>(eng() >> (64 - K));
        } else {
            u.combo = 0;
            for (int k = 0; k < K; ++k)
                if (uniform01(eng) < cfg.assignment.pi()[k]) u.combo |= CellIndex{1} << k;
        }
        const double c = cfg.table.c[u.combo];
        if (cfg.family == OutcomeFamily::bernoulli)
            u.y = uniform01(eng) < c ? 1.0 : 0.0;
        else
            u.y = c + cfg.table.sigma[u.combo] * normal(eng);
    }
    return FactorialDataset(cfg.assignment, std::move(rows));
}

struct McStats {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased sample variance
    double se = 0.0;        // batch-means standard error of the mean
    double skewness = 0.0;
};

// Batch means over `batches` contiguous blocks (fewer when count is small).
inline McStats mc_stats(std::span<const double> xs, std::size_t batches = 20) {
    McStats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double m2 = 0.0, m3 = 0.0;
    for (double x : xs) {
        const double d = x - s.mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    if (xs.size() >= 2) s.variance = m2 / static_cast<double>(xs.size() - 1);
    const double pop2 = m2 / static_cast<double>(xs.size());
    s.skewness = pop2 > 0.0 ? (m3 / static_cast<double>(xs.size())) / std::pow(pop2, 1.5) : 0.0;

    const std::size_t B = std::min(batches, xs.size());
    if (B < 2) return s;
    std::vector<double> means(B, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t lo = b * xs.size() / B, hi = (b + 1) * xs.size() / B;
        for (std::size_t i = lo; i < hi; ++i) means[b] += xs[i];
        means[b] /= static_cast<double>(hi - lo);
    }
    double mm = 0.0;
    for (double m : means) mm += m;
    mm /= static_cast<double>(B);
    double v = 0.0;
    for (double m : means) v += (m - mm) * (m - mm);
    v /= static_cast<double>(B - 1);
    s.se = std::sqrt(v / static_cast<double>(B));
    return s;
}

// One checked claim. pass <=> lower <= statistic <= upper; for two-sided
// checks lower/upper are target -/+ tolerance.
struct ValidationReport {
    std::string claim;
    std::string statistic_kind;  // "mc_mean", "coverage", "slope", ...
    double statistic = 0.0;
    double target = 0.0;
    double se = 0.0;
    double tolerance = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool pass = false;
    bool degenerate = false;
    bool negative_control = false;  // a regime expected to break the estimator
    std::uint64_t seed = 0;
    double runtime_seconds = 0.0;
    std::vector<std::pair<std::string, double>> details;
    std::string note;

    static ValidationReport two_sided(std::string claim, std::string kind, double statistic,
                                      double target, double tolerance, double se = 0.0) {
        ValidationReport r;
        r.claim = std::move(claim);
        r.statistic_kind = std::move(kind);
        r.statistic = statistic;
        r.target = target;
        r.se = se;
        r.tolerance = tolerance;
        r.lower = target - tolerance;
        r.upper = target + tolerance;
        r.pass = std::abs(statistic - target) <= tolerance;
        return r;
    }

    static ValidationReport bounded(std::string claim, std::string kind, double statistic,
                                    double lower, double upper, double target, double se = 0.0) {
        ValidationReport r;
        r.claim = std::move(claim);
        r.statistic_kind = std::move(kind);
        r.statistic = statistic;
        r.target = target;
        r.se = se;
        r.lower = lower;
        r.upper = upper;
        r.tolerance = std::max(std::abs(target - lower), std::abs(upper - target));
        r.pass = statistic >= lower && statistic <= upper;
        return r;
    }

    double detail(const std::string& key) const {
        for (const auto& [k, v] : details)
            if (k == key) return v;
        return std::numeric_limits<double>::quiet_NaN();
    }
};

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline ValidationReport stamp(ValidationReport r, std::uint64_t seed, const Stopwatch& sw) {
    r.seed = seed;
    r.runtime_seconds = sw.seconds();
    return r;
}

}  // namespace detail

// E[Q~(theta)] = Q(theta) with lambda = 0.
inline ValidationReport validate_unbiasedness(const SimConfig& cfg, const ThetaVector& theta) {
    detail::Stopwatch sw;
    cfg.validate();
    const auto values = parallel_map(cfg.replicates, [&](std::size_t r) {
        return q_ipw(generate(cfg, r), theta, 0.0);
    });
    const McStats st = mc_stats(values);
    const double target = q_true(cfg.table, theta, 0.0);
    auto rep = ValidationReport::two_sided("unbiasedness", "mc_mean", st.mean, target, 3.0 * st.se, st.se);
    if (st.se == 0.0) {
        rep.degenerate = true;
        rep.tolerance = 1e-12 * std::max(1.0, std::abs(target));
        rep.lower = target - rep.tolerance;
        rep.upper = target + rep.tolerance;
        rep.pass = std::abs(st.mean - target) <= rep.tolerance;
        rep.note = "zero Monte Carlo spread; exact agreement required";
    }
    rep.details = {{"K", cfg.K()}, {"n", static_cast<double>(cfg.n)},
                   {"replicates", static_cast<double>(cfg.replicates)}, {"mc_variance", st.variance}};
    return detail::stamp(rep, cfg.seed, sw);
}

// Exact variance of Q~(theta) (lambda = 0) under iid sampling:
// (1/n) [ sum_t P_theta(t)^2 / P(t) (sigma_t^2 + c_t^2) - Q(theta)^2 ].
inline double ipw_exact_variance(const SimConfig& cfg, const ThetaVector& theta) {
    const auto p = cell_probabilities(theta);
    const auto a = cfg.assignment.cell_probabilities();
    double second = 0.0, mean = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        const double s2 = cfg.table.sigma[t] * cfg.table.sigma[t];
        second += p[t] * p[t] / a[t] * (s2 + cfg.table.c[t] * cfg.table.c[t]);
        mean += p[t] * cfg.table.c[t];
    }
    return (second - mean * mean) / static_cast<double>(cfg.n);
}

// |T| max_t P_theta(t) / n
inline double ipw_variance_scale(const ThetaVector& theta, std::size_t n) {
    const auto p = cell_probabilities(theta);
    return static_cast<double>(p.size()) * *std::max_element(p.begin(), p.end()) /
           static_cast<double>(n);
}

struct VarianceScalingSetup {
    std::vector<SimConfig> configs;  // one per K; n and replicates taken from below
    std::vector<ThetaVector> thetas; // aligned with configs
    std::vector<std::size_t> ns;
    std::size_t replicates = 5000;
    double slope_tolerance = 0.15;
    double band_factor = 8.0;
};

// Per K: slope of log MC-variance on log n (target -1), and for every (K, n)
// the ratio of the MC variance to |T| max P_theta / n inside
// [1/band, band] (checked on log2 scale).
inline std::vector<ValidationReport> validate_variance_scaling(const VarianceScalingSetup& setup) {
    require(setup.configs.size() == setup.thetas.size(), "one theta per configuration");
    require(setup.ns.size() >= 2, "variance scaling needs at least two sample sizes");
    std::vector<ValidationReport> out;
    for (std::size_t c = 0; c < setup.configs.size(); ++c) {
        detail::Stopwatch sw;
        const auto& theta = setup.thetas[c];
        std::vector<double> log_n, log_v;
        std::vector<ValidationReport> bands;
        for (std::size_t n : setup.ns) {
            SimConfig cfg = setup.configs[c];
            cfg.n = n;
            cfg.replicates = setup.replicates;
            cfg.seed = stream_seed(setup.configs[c].seed, n);
            const auto values = parallel_map(cfg.replicates, [&](std::size_t r) {
                return q_ipw(generate(cfg, r), theta, 0.0);
            });
            const McStats st = mc_stats(values);
            const double scale = ipw_variance_scale(theta, n);
            log_n.push_back(std::log(static_cast<double>(n)));
            log_v.push_back(std::log(st.variance));
            auto band = ValidationReport::two_sided(
                "variance_scaling.band.K" + std::to_string(cfg.K()) + ".n" + std::to_string(n),
                "log2_variance_ratio", std::log2(st.variance / scale), 0.0, std::log2(setup.band_factor));
            band.details = {{"mc_variance", st.variance},
                            {"bound_scale", scale},
                            {"exact_variance", ipw_exact_variance(cfg, theta)},
                            {"ratio", st.variance / scale}};
            bands.push_back(detail::stamp(band, cfg.seed, sw));
        }
        const double mx = std::accumulate(log_n.begin(), log_n.end(), 0.0) / static_cast<double>(log_n.size());
        const double my = std::accumulate(log_v.begin(), log_v.end(), 0.0) / static_cast<double>(log_v.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < log_n.size(); ++i) {
            sxy += (log_n[i] - mx) * (log_v[i] - my);
            sxx += (log_n[i] - mx) * (log_n[i] - mx);
        }
        auto slope = ValidationReport::two_sided(
            "variance_scaling.slope.K" + std::to_string(setup.configs[c].K()), "loglog_slope", sxy / sxx,
            -1.0, setup.slope_tolerance);
        out.push_back(detail::stamp(slope, setup.configs[c].seed, sw));
        for (auto& b : bands) out.push_back(std::move(b));
    }
    return out;
}

// E[Q^(theta)] = sum_t c_t P_theta(t) (1 - (1 - P(t))^n) with lambda = 0. A
// second report checks that the adaptive mean is separated from the unbiased
// value whenever the predicted bias exceeds 6 standard errors.
inline std::vector<ValidationReport> validate_adaptive_bias(const SimConfig& cfg, const ThetaVector& theta) {
    detail::Stopwatch sw;
    cfg.validate();
    struct Pair {
        double adaptive = 0.0, ipw = 0.0;
    };
    const auto pairs = parallel_map(cfg.replicates, [&](std::size_t r) {
        const auto data = generate(cfg, r);
        return Pair{q_adaptive(summarize_cells(data), theta, 0.0), q_ipw(data, theta, 0.0)};
    });
    std::vector<double> a(pairs.size()), w(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        a[i] = pairs[i].adaptive;
        w[i] = pairs[i].ipw;
    }
    const McStats sa = mc_stats(a), sw_ipw = mc_stats(w);
    const auto p = cell_probabilities(theta);
    const auto assign = cfg.assignment.cell_probabilities();
    const double n = static_cast<double>(cfg.n);
    double target = 0.0, q = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        target += cfg.table.c[t] * p[t] * (1.0 - std::pow(1.0 - assign[t], n));
        q += cfg.table.c[t] * p[t];
    }
    const double cells = static_cast<double>(p.size());
    std::vector<ValidationReport> out;
    auto main = ValidationReport::two_sided("adaptive_bias.n" + std::to_string(cfg.n), "mc_mean", sa.mean,
                                            target, 3.0 * sa.se, sa.se);
    main.details = {{"q_true", q},
                    {"exact_factor_target", target},
                    {"exp_approx_target", q * (1.0 - std::exp(-n / cells))},
                    {"ipw_mc_mean", sw_ipw.mean},
                    {"ipw_se", sw_ipw.se}};
    out.push_back(detail::stamp(main, cfg.seed, sw));
    if (q - target > 6.0 * sa.se) {
        auto sep = ValidationReport::bounded("adaptive_bias.separated.n" + std::to_string(cfg.n),
                                             "z_from_unbiased", (q - sa.mean) / sa.se, 3.0,
                                             std::numeric_limits<double>::infinity(), (q - target) / sa.se,
                                             sa.se);
        sep.note = "adaptive mean must sit more than 3 SE below the unbiased value Q(theta)";
        out.push_back(detail::stamp(sep, cfg.seed, sw));
    }
    return out;
}

struct ConsistencySetup {
    PotentialOutcomeTable table;
    OutcomeFamily family = OutcomeFamily::bernoulli;
    std::optional<AssignmentDist> assignment;  // uniform when absent
    double lambda = 0.05;
    std::vector<std::size_t> ns;
    std::size_t replicates = 200;
    std::uint64_t seed = 0;
    double cap = 0.05;
    OptimizerConfig opt;
};

inline ThetaVector optimal_theta(const PotentialOutcomeTable& table, double lambda,
                                 const OptimizerConfig& opt = {}) {
    return maximize(CellObjective::from_table(
                        table, {EstimatorKind::true_q, VarianceVariant::plugin, lambda}),
                    table.K, opt)
        .theta_hat;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(d2);
}

// |theta_hat_n - theta*| for each replicate, theta_hat_n maximizing the
// adaptive objective.
inline std::vector<double> adaptive_theta_errors(const ConsistencySetup& setup, std::size_t n,
                                                 const ThetaVector& theta_star) {
    SimConfig cfg{setup.assignment ? *setup.assignment : AssignmentDist::uniform(setup.table.K),
                  setup.family, setup.table, n, setup.replicates, stream_seed(setup.seed, n)};
    const ObjectiveSpec spec{EstimatorKind::adaptive, VarianceVariant::plugin, setup.lambda};
    OptimizerConfig opt = setup.opt;
    return parallel_map(setup.replicates, [&](std::size_t r) {
        const auto obj = make_objective(spec, generate(cfg, r));
        const auto fit = maximize(obj, cfg.K(), opt);
        return euclidean_distance(fit.theta_hat.values(), theta_star.values());
    });
}

inline double median(std::vector<double> xs) {
    require(!xs.empty(), "median of an empty sample");
    const std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    const double hi = xs[mid];
    if (xs.size() % 2 == 1) return hi;
    const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

// Median |theta_hat_n - theta*| must strictly decrease along the n grid and
// end below the cap.
inline std::vector<ValidationReport> validate_consistency(const ConsistencySetup& setup) {
    detail::Stopwatch sw;
    require(setup.ns.size() >= 2, "consistency needs at least two sample sizes");
    const ThetaVector theta_star = optimal_theta(setup.table, setup.lambda, setup.opt);
    std::vector<double> medians;
    for (std::size_t n : setup.ns) medians.push_back(median(adaptive_theta_errors(setup, n, theta_star)));
    double worst_ratio = 0.0;
    for (std::size_t i = 1; i < medians.size(); ++i)
        worst_ratio = std::max(worst_ratio, medians[i - 1] > 0.0 ? medians[i] / medians[i - 1]
                                                                  : std::numeric_limits<double>::infinity());
    auto mono = ValidationReport::bounded("consistency.decreasing", "max_median_ratio", worst_ratio, 0.0,
                                          std::nextafter(1.0, 0.0), 0.0);
    auto final = ValidationReport::bounded("consistency.final", "median_error", medians.back(), 0.0,
                                           setup.cap, 0.0);
    for (auto* r : {&mono, &final}) {
        for (std::size_t i = 0; i < medians.size(); ++i)
            r->details.emplace_back("median_n" + std::to_string(setup.ns[i]), medians[i]);
        r->details.emplace_back("lambda", setup.lambda);
    }
    return {detail::stamp(mono, setup.seed, sw), detail::stamp(final, setup.seed, sw)};
}

// Two-sided 95% coverage of (Q~ - Q) / sd_MC and the skewness of Q~ across
// replicates. `negative_control` marks a regime expected to fail.
inline std::vector<ValidationReport> validate_clt(const SimConfig& cfg, const ThetaVector& theta,
                                                  bool negative_control = false,
                                                  double coverage_halfwidth = 0.015,
                                                  double skew_tolerance = 0.15) {
    detail::Stopwatch sw;
    cfg.validate();
    const auto values = parallel_map(cfg.replicates, [&](std::size_t r) {
        return q_ipw(generate(cfg, r), theta, 0.0);
    });
    const McStats st = mc_stats(values);
    const double q = q_true(cfg.table, theta, 0.0);
    const double sd = std::sqrt(st.variance);
    std::vector<ValidationReport> out;
    if (!(sd > 1e-14 * std::max(1.0, std::abs(q)))) {
        auto r = ValidationReport::two_sided("clt.coverage", "coverage",
                                             std::numeric_limits<double>::quiet_NaN(), 0.95, coverage_halfwidth);
        r.pass = false;
        r.degenerate = true;
        r.negative_control = negative_control;
        r.note = "zero Monte Carlo variance; standardized statistic undefined";
        out.push_back(detail::stamp(r, cfg.seed, sw));
        return out;
    }
    std::size_t inside = 0;
    for (double v : values)
        if (std::abs((v - q) / sd) <= 1.959963984540054) ++inside;
    const double coverage = static_cast<double>(inside) / static_cast<double>(values.size());
    auto cov = ValidationReport::two_sided("clt.coverage", "coverage", coverage, 0.95, coverage_halfwidth,
                                           std::sqrt(0.95 * 0.05 / static_cast<double>(values.size())));
    auto skew = ValidationReport::two_sided("clt.skewness", "skewness", st.skewness, 0.0, skew_tolerance,
                                            std::sqrt(6.0 / static_cast<double>(values.size())));
    for (auto* r : {&cov, &skew}) {
        r->negative_control = negative_control;
        r->details = {{"K", cfg.K()},
                      {"n", static_cast<double>(cfg.n)},
                      {"cells_over_n", static_cast<double>(cell_count(cfg.K())) / static_cast<double>(cfg.n)},
                      {"mc_mean", st.mean},
                      {"q_true", q}};
        if (negative_control) r->note = "negative control: |T|/n regime where normality is not expected";
    }
    out.push_back(detail::stamp(cov, cfg.seed, sw));
    out.push_back(detail::stamp(skew, cfg.seed, sw));
    return out;
}

struct CurseReport {
    int K = 0;
    std::size_t n = 0;
    double exact = 0.0;   // (1 - 2/|T|)^n
    double approx = 0.0;  // exp(-2n/|T|)
    double mc_frequency = std::numeric_limits<double>::quiet_NaN();
    double mc_se = 0.0;
    std::size_t replicates = 0;
    ValidationReport report;
};

// Probability that the two cells t1 = 0^K and t2 = (1, 0^{K-1}) are both
// empty under uniform assignment, exactly, approximately, and by simulation.
inline CurseReport curse_diagnostic(int K, std::size_t n, std::size_t replicates = 0, std::uint64_t seed = 0) {
    detail::Stopwatch sw;
    const double cells = static_cast<double>(cell_count(K));
    CurseReport out;
    out.K = K;
    out.n = n;
    out.exact = std::pow(1.0 - 2.0 / cells, static_cast<double>(n));
    out.approx = std::exp(-2.0 * static_cast<double>(n) / cells);
    out.replicates = replicates;
    if (replicates == 0) {
        out.report = ValidationReport::two_sided("curse.empty_pair", "exact", out.exact, out.exact, 0.0);
        out.report.note = "no simulation requested";
        out.report = detail::stamp(out.report, seed, sw);
        return out;
    }
    const auto hits = parallel_map(replicates, [&](std::size_t r) {
        Engine eng = make_engine(seed, r);
        for (std::size_t i = 0; i < n; ++i) {
            const auto t = static_cast<CellIndex>(eng() >> (64 - K));
            if (t == 0 || t == 1) return 0.0;
        }
        return 1.0;
    });
    double freq = 0.0;
    for (double h : hits) freq += h;
    freq /= static_cast<double>(replicates);
    out.mc_frequency = freq;
    out.mc_se = std::sqrt(out.exact * (1.0 - out.exact) / static_cast<double>(replicates));
    auto rep = ValidationReport::two_sided("curse.empty_pair", "mc_frequency", freq, out.exact,
                                           3.0 * out.mc_se, out.mc_se);
    if (out.mc_se == 0.0) rep.pass = freq == out.exact;
    rep.details = {{"K", K}, {"n", static_cast<double>(n)}, {"exp_approx", out.approx}};
    out.report = detail::stamp(rep, seed, sw);
    return out;
}

// MC mean of the corrected variance estimator against Var_theta[c_t], with
// the known table variances plugged into the corrections.
inline ValidationReport validate_variance_correction(const SimConfig& cfg, const ThetaVector& theta,
                                                     VarianceVariant variant, double slack) {
    detail::Stopwatch sw;
    cfg.validate();
    const auto s2 = cfg.table.variances();
    const auto values = parallel_map(cfg.replicates, [&](std::size_t r) {
        return var_hat_corrected(generate(cfg, r), theta, variant, std::span<const double>(s2));
    });
    const McStats st = mc_stats(values);
    const double target = var_theta_of_c(cfg.table.c, theta);
    auto rep = ValidationReport::two_sided(std::string("variance_correction.") + to_string(variant), "mc_mean",
                                           st.mean, target, 3.0 * st.se + slack, st.se);
    rep.details = {{"slack", slack}, {"n", static_cast<double>(cfg.n)}};
    return detail::stamp(rep, cfg.seed, sw);
}

struct SplitSetup {
    SimConfig sim;
    double lambda = 0.05;
    double split_fraction = 0.5;
    EstimatorKind fit_estimator = EstimatorKind::adaptive;
    SplitOptions options;
    double lower_slack = 0.02;
    OptimizerConfig opt;
};

// MC mean of Q^(2)(theta^(1)) inside [Q(theta*) - slack, Q(theta*) + 3 SE].
inline ValidationReport validate_split(const SplitSetup& setup) {
    detail::Stopwatch sw;
    setup.sim.validate();
    const ObjectiveSpec spec{setup.fit_estimator, VarianceVariant::plugin, setup.lambda};
    const auto values = parallel_map(setup.sim.replicates, [&](std::size_t r) {
        return split_estimate(generate(setup.sim, r), setup.split_fraction, spec, setup.opt,
                              stream_seed(setup.sim.seed ^ 0xA5A5, r), setup.options)
            .q_hat;
    });
    const McStats st = mc_stats(values);
    const auto obj = CellObjective::from_table(
        setup.sim.table,
        {EstimatorKind::true_q, VarianceVariant::plugin, setup.options.include_penalty ? setup.lambda : 0.0});
    const ThetaVector theta_star = optimal_theta(setup.sim.table, setup.lambda, setup.opt);
    const double q_star = obj.value(theta_star);
    auto rep = ValidationReport::bounded("split_inference", "mc_mean", st.mean, q_star - setup.lower_slack,
                                         q_star + 3.0 * st.se, q_star, st.se);
    rep.details = {{"q_star", q_star}, {"n", static_cast<double>(setup.sim.n)}};
    return detail::stamp(rep, setup.sim.seed, sw);
}

}  // namespace factint
