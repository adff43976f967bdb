// estimators.hpp
//
// Per-cell statistics and the point estimators built from them: adaptive cell
// means, inverse-probability weighted cell totals, importance weights, and the
// bias-corrected estimators of Var_theta[c_t] used by the mean-variance
// objective.
#pragma once
#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "dataset.hpp"
#include "design.hpp"

namespace factint {

struct CellSummary {
    int K = 0;
    std::size_t n = 0;
    std::vector<std::size_t> n_t;
    std::vector<double> sum_y;
    std::vector<double> sum_y2;
    std::vector<double> c_hat;    // sum_y / n_t, 0 for empty cells
    std::vector<double> c_tilde;  // sum_y / (n P(T = t))
    std::vector<bool> empty;
    std::vector<double> assign_p;

    std::size_t cells() const { return n_t.size(); }

    std::size_t empty_count() const {
        return static_cast<std::size_t>(std::count(empty.begin(), empty.end(), true));
    }

    // Unbiased within-cell variance; 0 when the cell has fewer than two units.
    std::vector<double> within_cell_variance() const {
        std::vector<double> v(cells(), 0.0);
        for (std::size_t t = 0; t < cells(); ++t) {
            if (n_t[t] < 2) continue;
            const double m = sum_y[t] / static_cast<double>(n_t[t]);
            const double ss = sum_y2[t] - static_cast<double>(n_t[t]) * m * m;
            v[t] = std::max(0.0, ss / static_cast<double>(n_t[t] - 1));
        }
        return v;
    }
};

inline CellSummary summarize_cells(const FactorialDataset& data) {
    CellSummary s;
    s.K = data.K();
    s.n = data.n();
    const std::size_t cells = cell_count(s.K);
    s.n_t.assign(cells, 0);
    s.sum_y.assign(cells, 0.0);
    s.sum_y2.assign(cells, 0.0);
    for (const Unit& u : data.rows()) {
        ++s.n_t[u.combo];
        s.sum_y[u.combo] += u.y;
        s.sum_y2[u.combo] += u.y * u.y;
    }
    s.assign_p = data.dist().cell_probabilities();
    s.c_hat.assign(cells, 0.0);
    s.c_tilde.assign(cells, 0.0);
    s.empty.assign(cells, false);
    const double n = static_cast<double>(s.n);
    for (std::size_t t = 0; t < cells; ++t) {
        s.empty[t] = s.n_t[t] == 0;
        if (!s.empty[t]) s.c_hat[t] = s.sum_y[t] / static_cast<double>(s.n_t[t]);
        s.c_tilde[t] = s.sum_y[t] / (n * s.assign_p[t]);
    }
    return s;
}

// Ratio P_theta(T_i) / P(T_i) for one assigned cell, factor by factor.
inline double importance_weight(const AssignmentDist& dist, std::span<const double> theta,
                                CellIndex t) {
    double w = 1.0;
    for (int k = 0; k < dist.factors(); ++k) {
        const int bit = static_cast<int>((t >> k) & 1u);
        const double denom = dist.factor_prob(k, bit);
        if (!(denom > 0.0)) throw numerical_error("zero assignment probability violates positivity");
        w *= (bit ? theta[k] : 1.0 - theta[k]) / denom;
    }
    return w;
}

inline std::vector<double> hajek_weights(const FactorialDataset& data, const ThetaVector& theta) {
    require(theta.factors() == data.K(), "theta dimension does not match dataset K");
    std::vector<double> w(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        w[i] = importance_weight(data.dist(), theta.values(), data.rows()[i].combo);
        if (!std::isfinite(w[i]) || w[i] <= 0.0)
            throw numerical_error("importance weight is not positive and finite");
    }
    return w;
}

// Var over t ~ P_theta of a cell-indexed value map.
inline double var_theta_of_c(std::span<const double> values, const ThetaVector& theta) {
    require(values.size() == cell_count(theta.factors()),
            "value map must cover all 2^K cells");
    const auto p = cell_probabilities(theta);
    double mean = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) mean += p[t] * values[t];
    double var = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) var += p[t] * (values[t] - mean) * (values[t] - mean);
    return var;
}

enum class VarianceVariant { plugin, u1, u2 };

inline const char* to_string(VarianceVariant v) {
    switch (v) {
        case VarianceVariant::plugin: return "plugin";
        case VarianceVariant::u1: return "u1";
        case VarianceVariant::u2: return "u2";
    }
    return "?";
}

// Bias-corrected estimate of Var_theta[c_t] from the weighted cell totals.
//
//   plugin: E_theta[c~^2] - E_theta[c~]^2                   - Delta
//   u1:     E_theta[c~^2] - U                               - E_theta[s^2 / (n P)]
//   u2:     (1/n) sum_i Y_i^2 W_i - U                       - E_theta[s^2]
//
// U is the pairwise statistic (1/(n(n-1))) sum_{i != j} Y_i W_i Y_j W_j,
// computed in O(n) as ((sum a)^2 - sum a^2) / (n(n-1)). Delta is
// sum_t s_t^2 (P_theta(t) - P_theta(t)^2) / (n P(t)). Cell variances s_t^2
// come from `sigma2` when given, otherwise from the within-cell sample
// variance.
inline double var_hat_corrected(const FactorialDataset& data, const ThetaVector& theta,
                                VarianceVariant variant,
                                std::optional<std::span<const double>> sigma2 = std::nullopt) {
    require(theta.factors() == data.K(), "theta dimension does not match dataset K");
    const std::size_t N = data.n();
    if (variant != VarianceVariant::plugin)
        require(N >= 2, "pairwise variance estimators need n >= 2");
    const CellSummary s = summarize_cells(data);
    std::vector<double> s2;
    if (sigma2) {
        require(sigma2->size() == s.cells(), "sigma^2 table must cover all 2^K cells");
        s2.assign(sigma2->begin(), sigma2->end());
    } else {
        s2 = s.within_cell_variance();
    }
    const auto p = cell_probabilities(theta);
    const double n = static_cast<double>(N);

    double mean = 0.0, second = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        mean += p[t] * s.c_tilde[t];
        second += p[t] * s.c_tilde[t] * s.c_tilde[t];
    }

    if (variant == VarianceVariant::plugin) {
        double centered = 0.0, delta = 0.0;
        for (std::size_t t = 0; t < p.size(); ++t) {
            centered += p[t] * (s.c_tilde[t] - mean) * (s.c_tilde[t] - mean);
            delta += s2[t] * (p[t] - p[t] * p[t]) / (n * s.assign_p[t]);
        }
        return centered - delta;
    }

    double sum_a = 0.0, sum_a2 = 0.0, sum_y2w = 0.0;
    for (const Unit& u : data.rows()) {
        const double w = importance_weight(data.dist(), theta.values(), u.combo);
        const double a = u.y * w;
        sum_a += a;
        sum_a2 += a * a;
        sum_y2w += u.y * u.y * w;
    }
    const double pairwise = (sum_a * sum_a - sum_a2) / (n * (n - 1.0));

    double delta = 0.0;
    if (variant == VarianceVariant::u1) {
        for (std::size_t t = 0; t < p.size(); ++t) delta += p[t] * s2[t] / (n * s.assign_p[t]);
        return second - pairwise - delta;
    }
    for (std::size_t t = 0; t < p.size(); ++t) delta += p[t] * s2[t];
    return sum_y2w / n - pairwise - delta;
}

}  // namespace factint
