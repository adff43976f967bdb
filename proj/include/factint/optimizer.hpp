// optimizer.hpp
//
// Multi-start projected gradient ascent over an axis-aligned box inside
// (0,1)^K. Each start runs a monotone spectral (Barzilai-Borwein) step with
// Armijo backtracking along the projection arc. The first start is always the
// box point closest to (0.5, ..., 0.5); the others come from a Halton sequence
// shifted by the seed.
#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "design.hpp"
#include "random.hpp"

namespace factint {

struct Evaluation {
    double value = 0.0;
    std::vector<double> gradient;
};

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    static Box unit(int K, double eps = kDefaultBoxEps) {
        cell_count(K);
        return Box{std::vector<double>(K, eps), std::vector<double>(K, 1.0 - eps)};
    }

    static Box symmetric(int K, double nu) {
        cell_count(K);
        return Box{std::vector<double>(K, 1.0 - nu), std::vector<double>(K, nu)};
    }

    int factors() const { return static_cast<int>(lo.size()); }

    void validate(double eps) const {
        require(lo.size() == hi.size() && !lo.empty(), "box bounds must have equal length K >= 1");
        for (std::size_t k = 0; k < lo.size(); ++k)
            require(lo[k] >= eps && hi[k] <= 1.0 - eps && lo[k] < hi[k],
                    "box axis " + std::to_string(k) + " must satisfy eps <= lo < hi <= 1-eps");
    }

    void project(std::span<double> x) const {
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
    }
};

struct OptimizerConfig {
    int starts = 16;
    int max_iters = 2000;
    double shrink = 0.5;
    double slope = 1e-4;
    double grad_tol = 1e-8;
    double box_eps = kDefaultBoxEps;
    std::optional<Box> box;  // defaults to [box_eps, 1 - box_eps]^K
    std::uint64_t seed = 0;

    Box resolved_box(int K) const {
        Box b = box ? *box : Box::unit(K, box_eps);
        require(b.factors() == K, "optimizer box dimension does not match K");
        b.validate(box_eps);
        return b;
    }

    void validate() const {
        require(starts >= 1, "optimizer needs at least one start");
        require(max_iters >= 1, "optimizer needs max_iters >= 1");
        require(shrink > 0.0 && shrink < 1.0, "line-search shrink must be in (0,1)");
        require(slope > 0.0 && slope < 1.0, "line-search slope constant must be in (0,1)");
        require(grad_tol > 0.0, "gradient tolerance must be positive");
    }
};

struct OptimResult {
    ThetaVector theta_hat;
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
    int start_index = 0;
    std::vector<double> all_start_values;
    std::vector<double> value_trace;  // accepted values of the winning start

    // Spread between the best and worst start, a cheap signal of multiple
    // local optima.
    double start_spread() const {
        const auto [lo, hi] = std::minmax_element(all_start_values.begin(), all_start_values.end());
        return *hi - *lo;
    }
};

namespace detail {

inline constexpr std::array<int, kMaxFactors> kHaltonBases = {
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

inline double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

inline std::vector<double> start_point(const Box& box, int index, std::uint64_t seed) {
    const int K = box.factors();
    std::vector<double> x(K);
    if (index == 0) {
        for (int k = 0; k < K; ++k) x[k] = 0.5;
        box.project(x);
        return x;
    }
    Engine shift_eng = make_engine(seed, 0x5A17);
    for (int k = 0; k < K; ++k) {
        const double shift = uniform01(shift_eng);
        double u = radical_inverse(static_cast<std::uint64_t>(index), kHaltonBases[k]) + shift;
        u -= std::floor(u);
        x[k] = box.lo[k] + u * (box.hi[k] - box.lo[k]);
    }
    return x;
}

struct StartOutcome {
    std::vector<double> x;
    double value = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    std::vector<double> trace;
};

template <class F>
Evaluation checked_eval(F& objective, const std::vector<double>& x, double eps) {
    Evaluation e = objective(ThetaVector(x, eps));
    if (!std::isfinite(e.value)) throw numerical_error("objective value is not finite");
    if (e.gradient.size() != x.size())
        throw numerical_error("objective gradient has wrong dimension");
    for (double g : e.gradient)
        if (!std::isfinite(g)) throw numerical_error("objective gradient is not finite");
    return e;
}

template <class F>
StartOutcome ascend(F& objective, const Box& box, std::vector<double> x,
                    const OptimizerConfig& cfg) {
    const std::size_t K = x.size();
    StartOutcome out;
    Evaluation cur = checked_eval(objective, x, cfg.box_eps);
    out.trace.push_back(cur.value);
    double step = 1.0;
    std::vector<double> xn(K), d(K);
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        // Projected-gradient stationarity measure.
        double pg = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            pg = std::max(pg, std::abs(std::clamp(x[k] + cur.gradient[k], box.lo[k], box.hi[k]) - x[k]));
        if (pg <= cfg.grad_tol) {
            out.converged = true;
            break;
        }
        bool accepted = false;
        Evaluation next;
        double t = step;
        for (int bt = 0; bt < 200; ++bt) {
            double dir = 0.0, moved = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                xn[k] = std::clamp(x[k] + t * cur.gradient[k], box.lo[k], box.hi[k]);
                d[k] = xn[k] - x[k];
                dir += cur.gradient[k] * d[k];
                moved = std::max(moved, std::abs(d[k]));
            }
            if (moved == 0.0) break;
            next = checked_eval(objective, xn, cfg.box_eps);
            if (next.value >= cur.value + cfg.slope * dir) {
                accepted = true;
                break;
            }
            t *= cfg.shrink;
        }
        if (!accepted) {
            // No representable ascent step left: x is stationary to working
            // precision.
            out.converged = true;
            break;
        }
        double sy = 0.0, ss = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double y = next.gradient[k] - cur.gradient[k];
            sy += d[k] * y;
            ss += d[k] * d[k];
        }
        step = sy < 0.0 ? ss / -sy : 1e6;
        step = std::clamp(step, 1e-12, 1e12);
        x = xn;
        cur = std::move(next);
        out.trace.push_back(cur.value);
    }
    out.iterations = it;
    out.x = std::move(x);
    out.value = cur.value;
    return out;
}

}  // namespace detail

// Maximizes `objective` (ThetaVector -> Evaluation) over the configured box.
// The winner is the start with the largest final value; ties go to the lower
// start index. Results are identical for identical (seed, config).
template <class F>
OptimResult maximize(F&& objective, int K, const OptimizerConfig& cfg = {}) {
    cfg.validate();
    const Box box = cfg.resolved_box(K);
    auto outcomes = parallel_map(static_cast<std::size_t>(cfg.starts), [&](std::size_t s) {
        return detail::ascend(objective, box, detail::start_point(box, static_cast<int>(s), cfg.seed),
                              cfg);
    });
    std::size_t best = 0;
    std::vector<double> values(outcomes.size());
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        values[s] = outcomes[s].value;
        if (outcomes[s].value > outcomes[best].value) best = s;
    }
    auto& w = outcomes[best];
    return OptimResult{ThetaVector(w.x, cfg.box_eps), w.value,  w.converged, w.iterations,
                       static_cast<int>(best),       std::move(values), std::move(w.trace)};
}

// Symmetric box [1 - nu, nu]^K around (0.5, ..., 0.5) with nu chosen so that
// (2^K / n) nu^K <= C.
inline Box highdim_box(int K, std::size_t n, double C, double eps = kDefaultBoxEps) {
    require(C > 0.0 && std::isfinite(C), "box constant C must be positive");
    require(n >= 1, "sample size n must be positive");
    const double cells = static_cast<double>(cell_count(K));
    const double raw = std::pow(C * static_cast<double>(n) / cells, 1.0 / K);
    const double floor_nu = 0.5 + 1e-9;
    require(raw > floor_nu,
            "empty interior: (C n / 2^K)^(1/K) = " + std::to_string(raw) +
                " leaves no room above 0.5; increase C or n");
    return Box::symmetric(K, std::min(raw, 1.0 - eps));
}

}  // namespace factint
