// mixture.hpp
//
// Clustering of cell-level estimates for the |T| >> n regime: a k-component
// mixture fitted by k-means++ seeding, Lloyd refinement and EM, then a
// product policy read off the highest-mean cluster.
#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "design.hpp"
#include "estimators.hpp"
#include "random.hpp"

namespace factint {

enum class MixtureFamily { gaussian, bernoulli };

struct EmConfig {
    int max_iters = 500;
    double tol = 1e-8;  // stop once the log-likelihood gain falls below tol
    double sigma_floor = 1e-4;
    int lloyd_iters = 100;
    int restarts = 1;  // best final log-likelihood wins, ties to the lower restart
    std::uint64_t seed = 0;
};

struct MixtureFit {
    MixtureFamily family = MixtureFamily::gaussian;
    std::vector<double> pi;
    std::vector<double> d;
    std::vector<double> sigma;  // gaussian only
    std::vector<std::vector<double>> responsibilities;  // [value][component]
    std::vector<double> loglik_trace;
    std::vector<int> assignments;  // argmax responsibility, ties to the lower component
    int iterations = 0;
    bool converged = false;

    int k() const { return static_cast<int>(pi.size()); }
    double loglik() const { return loglik_trace.empty() ? -std::numeric_limits<double>::infinity()
                                                        : loglik_trace.back(); }

    std::vector<std::size_t> members(int component) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == component) out.push_back(i);
        return out;
    }
};

namespace detail {

constexpr double kBernoulliClamp = 1e-6;

// k-means++ seeding followed by Lloyd iterations on the line.
inline std::vector<double> kmeans_centers(std::span<const double> x, int k, int lloyd_iters, Engine& eng) {
    const std::size_t n = x.size();
    std::vector<double> centers;
    centers.push_back(x[static_cast<std::size_t>(uniform01(eng) * static_cast<double>(n))]);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = x[i] - centers.back();
            d2[i] = std::min(d2[i], diff * diff);
            total += d2[i];
        }
        std::size_t pick = n - 1;
        if (total > 0.0) {
            double u = uniform01(eng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                u -= d2[i];
                if (u < 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(uniform01(eng) * static_cast<double>(n));
        }
        centers.push_back(x[pick]);
    }
    std::sort(centers.begin(), centers.end());

    std::vector<double> sum(k);
    std::vector<std::size_t> count(k);
    for (int it = 0; it < lloyd_iters; ++it) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(count.begin(), count.end(), 0);
        for (double v : x) {
            int best = 0;
            for (int j = 1; j < k; ++j)
                if (std::abs(v - centers[j]) < std::abs(v - centers[best])) best = j;
            sum[best] += v;
            ++count[best];
        }
        bool moved = false;
        for (int j = 0; j < k; ++j) {
            if (count[j] == 0) continue;
            const double c = sum[j] / static_cast<double>(count[j]);
            moved = moved || c != centers[j];
            centers[j] = c;
        }
        if (!moved) break;
    }
    return centers;
}

inline double component_logpdf(MixtureFamily family, double x, double d, double sigma) {
    if (family == MixtureFamily::bernoulli) return x > 0.5 ? std::log(d) : std::log1p(-d);
    const double z = (x - d) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// E-step: fills responsibilities, returns the log-likelihood.
inline double e_step(const MixtureFit& fit, std::span<const double> x, std::vector<std::vector<double>>& resp) {
    const int k = fit.k();
    double ll = 0.0;
    std::vector<double> lp(k);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            lp[j] = fit.pi[j] > 0.0 ? std::log(fit.pi[j]) +
                                          component_logpdf(fit.family, x[i], fit.d[j],
                                                           fit.family == MixtureFamily::gaussian ? fit.sigma[j] : 1.0)
                                    : -std::numeric_limits<double>::infinity();
            mx = std::max(mx, lp[j]);
        }
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += std::exp(lp[j] - mx);
        ll += mx + std::log(s);
        for (int j = 0; j < k; ++j) resp[i][j] = std::exp(lp[j] - mx) / s;
    }
    return ll;
}

inline void m_step(MixtureFit& fit, std::span<const double> x, const std::vector<std::vector<double>>& resp,
                   double sigma_floor) {
    const int k = fit.k();
    const double n = static_cast<double>(x.size());
    for (int j = 0; j < k; ++j) {
        double w = 0.0, m = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            w += resp[i][j];
            m += resp[i][j] * x[i];
        }
        fit.pi[j] = w / n;
        if (w <= 0.0) continue;
        m /= w;
        if (fit.family == MixtureFamily::bernoulli) {
            fit.d[j] = std::clamp(m, kBernoulliClamp, 1.0 - kBernoulliClamp);
            continue;
        }
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) v += resp[i][j] * (x[i] - m) * (x[i] - m);
        fit.d[j] = m;
        fit.sigma[j] = std::max(std::sqrt(v / w), sigma_floor);
    }
}

inline MixtureFit fit_once(std::span<const double> x, int k, MixtureFamily family, const EmConfig& cfg,
                           Engine& eng) {
    MixtureFit fit;
    fit.family = family;
    fit.d = kmeans_centers(x, k, cfg.lloyd_iters, eng);
    fit.pi.assign(k, 0.0);
    fit.sigma.assign(k, cfg.sigma_floor);
    // Start EM from the hard k-means partition.
    std::vector<double> sum(k, 0.0), sum2(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (double v : x) {
        int best = 0;
        for (int j = 1; j < k; ++j)
            if (std::abs(v - fit.d[j]) < std::abs(v - fit.d[best])) best = j;
        ++count[best];
        sum[best] += v;
        sum2[best] += v * v;
    }
    for (int j = 0; j < k; ++j) {
        fit.pi[j] = std::max(static_cast<double>(count[j]), 0.5) / static_cast<double>(x.size());
        if (count[j] > 0) {
            const double m = sum[j] / static_cast<double>(count[j]);
            fit.sigma[j] = std::max(std::sqrt(std::max(0.0, sum2[j] / static_cast<double>(count[j]) - m * m)),
                                    cfg.sigma_floor);
        }
        if (family == MixtureFamily::bernoulli)
            fit.d[j] = std::clamp(fit.d[j], detail::kBernoulliClamp, 1.0 - detail::kBernoulliClamp);
    }
    double total = 0.0;
    for (double p : fit.pi) total += p;
    for (double& p : fit.pi) p /= total;

    fit.responsibilities.assign(x.size(), std::vector<double>(k, 0.0));
    double ll = e_step(fit, x, fit.responsibilities);
    fit.loglik_trace.push_back(ll);
    for (fit.iterations = 0; fit.iterations < cfg.max_iters;) {
        m_step(fit, x, fit.responsibilities, cfg.sigma_floor);
        ++fit.iterations;
        const double next = e_step(fit, x, fit.responsibilities);
        fit.loglik_trace.push_back(next);
        const double gain = next - ll;
        ll = next;
        if (gain < cfg.tol) {
            fit.converged = true;
            break;
        }
    }
    fit.assignments.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& r = fit.responsibilities[i];
        fit.assignments[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    if (family == MixtureFamily::bernoulli) fit.sigma.clear();
    return fit;
}

}  // namespace detail

// Gaussian family: values are cell-mean estimates. Bernoulli family: values
// are raw 0/1 outcomes and d holds the component success probabilities.
inline MixtureFit fit_mixture(std::span<const double> values, int k, MixtureFamily family,
                              const EmConfig& cfg = {}) {
    require(k >= 1, "number of components k must be >= 1");
    require(!values.empty(), "mixture input is empty");
    require(cfg.max_iters >= 1 && cfg.restarts >= 1 && cfg.lloyd_iters >= 0, "invalid EM configuration");
    require(cfg.sigma_floor > 0.0, "sigma floor must be positive");
    for (double v : values) {
        require(std::isfinite(v), "mixture input contains a non-finite value");
        if (family == MixtureFamily::bernoulli) require(v == 0.0 || v == 1.0, "bernoulli mixture needs 0/1 values");
    }
    MixtureFit best;
    for (int r = 0; r < cfg.restarts; ++r) {
        Engine eng = make_engine(cfg.seed, static_cast<std::uint64_t>(r));
        MixtureFit fit = detail::fit_once(values, k, family, cfg, eng);
        if (r == 0 || fit.loglik() > best.loglik()) best = std::move(fit);
    }
    return best;
}

struct TopCluster {
    int j_hat = 0;
    ThetaVector theta;
    std::size_t members = 0;
};

// Component with the largest mean (ties to the lower index) and the bit means
// of the cells hard-assigned to it, clamped to the box.
inline TopCluster top_cluster_policy(const MixtureFit& fit, std::span<const CellIndex> combos, int K,
                                     double eps = kDefaultBoxEps) {
    cell_count(K);
    require(combos.size() == fit.assignments.size(), "combos must align with the fitted values");
    int j = 0;
    for (int i = 1; i < fit.k(); ++i)
        if (fit.d[i] > fit.d[j]) j = i;
    std::vector<double> bits(K, 0.0);
    std::size_t m = 0;
    for (std::size_t i = 0; i < combos.size(); ++i) {
        if (fit.assignments[i] != j) continue;
        ++m;
        for (int b = 0; b < K; ++b) bits[b] += static_cast<double>((combos[i] >> b) & 1u);
    }
    if (m == 0) throw numerical_error("top cluster has no members");
    for (double& v : bits) v /= static_cast<double>(m);
    return TopCluster{j, ThetaVector::clamped(bits, eps), m};
}

struct MixturePolicy {
    MixtureFit fit;
    TopCluster top;
    std::vector<CellIndex> cells;  // nonempty cells that were clustered
};

// Clusters the adaptive means of the nonempty cells and returns the
// top-cluster policy. Cells enter unweighted, whatever their n_t.
inline MixturePolicy mixture_policy(const CellSummary& s, int k, const EmConfig& cfg = {},
                                    double eps = kDefaultBoxEps) {
    std::vector<CellIndex> cells;
    std::vector<double> values;
    for (std::size_t t = 0; t < s.cells(); ++t) {
        if (s.empty[t]) continue;
        cells.push_back(static_cast<CellIndex>(t));
        values.push_back(s.c_hat[t]);
    }
    require(!values.empty(), "no nonempty cells to cluster");
    MixtureFit fit = fit_mixture(values, k, MixtureFamily::gaussian, cfg);
    TopCluster top = top_cluster_policy(fit, cells, s.K, eps);
    return MixturePolicy{std::move(fit), std::move(top), std::move(cells)};
}

}  // namespace factint
