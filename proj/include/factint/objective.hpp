// objective.hpp
//
// Objectives Q(theta) over the policy parameter and their analytic gradients.
//
// Every estimator here is a combination of two primitive forms over the cells,
//   L(theta) = sum_t v_t P_theta(t)      and      S(theta) = sum_t w_t P_theta(t)^2,
// whose gradients follow from the score identity
//   dP_theta(t)/dtheta_k = P_theta(t) (t_k - theta_k) / (theta_k (1 - theta_k)).
#pragma once
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "design.hpp"
#include "estimators.hpp"
#include "optimizer.hpp"

namespace factint {

enum class EstimatorKind { true_q, adaptive, ipw, hajek, mean_variance };
enum class PenaltyKind { entropy, none };

inline const char* to_string(EstimatorKind e) {
    switch (e) {
        case EstimatorKind::true_q: return "true_q";
        case EstimatorKind::adaptive: return "adaptive";
        case EstimatorKind::ipw: return "ipw";
        case EstimatorKind::hajek: return "hajek";
        case EstimatorKind::mean_variance: return "mean_variance";
    }
    return "?";
}

// `lambda` weights the entropy bonus for every estimator except
// mean_variance, where it weights the variance penalty instead.
struct ObjectiveSpec {
    EstimatorKind estimator = EstimatorKind::adaptive;
    VarianceVariant variant = VarianceVariant::plugin;
    double lambda = 0.0;
    PenaltyKind penalty = PenaltyKind::entropy;

    void validate() const {
        require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    }

    double entropy_weight() const {
        if (estimator == EstimatorKind::mean_variance || penalty == PenaltyKind::none) return 0.0;
        return lambda;
    }
};

// Linear and squared cell forms evaluated over a sparse support of cells.
class CellForms {
public:
    CellForms() = default;

    // Keeps only cells where some coefficient is nonzero.
    CellForms(int K, std::vector<std::vector<double>> linear,
              std::vector<std::vector<double>> squared)
        : K_(K) {
        const std::size_t cells = cell_count(K);
        for (const auto& v : linear) require(v.size() == cells, "linear form must cover all cells");
        for (const auto& v : squared) require(v.size() == cells, "squared form must cover all cells");
        for (std::size_t t = 0; t < cells; ++t) {
            bool used = false;
            for (const auto& v : linear) used = used || v[t] != 0.0;
            for (const auto& v : squared) used = used || v[t] != 0.0;
            if (used) support_.push_back(static_cast<CellIndex>(t));
        }
        auto compress = [&](const std::vector<double>& v) {
            std::vector<double> out(support_.size());
            for (std::size_t j = 0; j < support_.size(); ++j) out[j] = v[support_[j]];
            return out;
        };
        for (const auto& v : linear) linear_.push_back(compress(v));
        for (const auto& v : squared) squared_.push_back(compress(v));
    }

    struct Values {
        std::vector<double> linear, squared;
        std::vector<std::vector<double>> linear_grad, squared_grad;
    };

    int factors() const { return K_; }
    std::size_t support_size() const { return support_.size(); }

    Values evaluate(std::span<const double> theta, bool with_gradient) const {
        require(static_cast<int>(theta.size()) == K_, "theta dimension does not match objective K");
        const std::size_t K = theta.size();
        Values out;
        out.linear.assign(linear_.size(), 0.0);
        out.squared.assign(squared_.size(), 0.0);
        if (with_gradient) {
            out.linear_grad.assign(linear_.size(), std::vector<double>(K, 0.0));
            out.squared_grad.assign(squared_.size(), std::vector<double>(K, 0.0));
        }
        std::vector<double> up(K), down(K);
        for (std::size_t k = 0; k < K; ++k) {
            up[k] = 1.0 / theta[k];
            down[k] = -1.0 / (1.0 - theta[k]);
        }
        for (std::size_t j = 0; j < support_.size(); ++j) {
            const CellIndex t = support_[j];
            double p = 1.0;
            for (std::size_t k = 0; k < K; ++k) p *= ((t >> k) & 1u) ? theta[k] : 1.0 - theta[k];
            for (std::size_t f = 0; f < linear_.size(); ++f) {
                const double a = linear_[f][j] * p;
                out.linear[f] += a;
                if (with_gradient && a != 0.0)
                    for (std::size_t k = 0; k < K; ++k)
                        out.linear_grad[f][k] += a * (((t >> k) & 1u) ? up[k] : down[k]);
            }
            for (std::size_t f = 0; f < squared_.size(); ++f) {
                const double a = squared_[f][j] * p * p;
                out.squared[f] += a;
                if (with_gradient && a != 0.0)
                    for (std::size_t k = 0; k < K; ++k)
                        out.squared_grad[f][k] += 2.0 * a * (((t >> k) & 1u) ? up[k] : down[k]);
            }
        }
        return out;
    }

private:
    int K_ = 0;
    std::vector<CellIndex> support_;
    std::vector<std::vector<double>> linear_;
    std::vector<std::vector<double>> squared_;
};

// A fully assembled objective: callable on a ThetaVector, returning the value
// and the gradient. Safe to call concurrently.
class CellObjective {
public:
    // Q(theta) from the known outcome table.
    static CellObjective from_table(const PotentialOutcomeTable& table, const ObjectiveSpec& spec) {
        spec.validate();
        require(spec.estimator == EstimatorKind::true_q,
                "only the true_q estimator is built from an outcome table");
        CellObjective obj(table.K, spec);
        obj.forms_ = CellForms(table.K, {table.c}, {});
        return obj;
    }

    // Any data-driven estimator. `sigma2` supplies known cell variances for the
    // mean-variance corrections; without it the within-cell sample variance
    // is used.
    static CellObjective from_summary(const CellSummary& s, const ObjectiveSpec& spec,
                                      std::optional<std::span<const double>> sigma2 = std::nullopt) {
        spec.validate();
        CellObjective obj(s.K, spec);
        const std::size_t cells = s.cells();
        const double n = static_cast<double>(s.n);
        switch (spec.estimator) {
            case EstimatorKind::true_q:
                throw std::invalid_argument("true_q needs an outcome table, not data");
            case EstimatorKind::adaptive:
                obj.forms_ = CellForms(s.K, {s.c_hat}, {});
                break;
            case EstimatorKind::ipw:
                obj.forms_ = CellForms(s.K, {s.c_tilde}, {});
                break;
            case EstimatorKind::hajek: {
                std::vector<double> num(cells), den(cells);
                for (std::size_t t = 0; t < cells; ++t) {
                    num[t] = s.sum_y[t] / s.assign_p[t];
                    den[t] = static_cast<double>(s.n_t[t]) / s.assign_p[t];
                }
                obj.forms_ = CellForms(s.K, {num, den}, {});
                break;
            }
            case EstimatorKind::mean_variance: {
                if (spec.variant != VarianceVariant::plugin)
                    require(s.n >= 2, "pairwise variance estimators need n >= 2");
                std::vector<double> s2;
                if (sigma2) {
                    require(sigma2->size() == cells, "sigma^2 table must cover all 2^K cells");
                    s2.assign(sigma2->begin(), sigma2->end());
                } else {
                    s2 = s.within_cell_variance();
                }
                // Q = m - lambda (L - alpha m^2 + S); see var_hat_corrected.
                std::vector<double> lin(cells), sq(cells);
                for (std::size_t t = 0; t < cells; ++t) {
                    const double a = s.assign_p[t];
                    switch (spec.variant) {
                        case VarianceVariant::plugin:
                            lin[t] = s.c_tilde[t] * s.c_tilde[t] - s2[t] / (n * a);
                            sq[t] = s2[t] / (n * a);
                            break;
                        case VarianceVariant::u1:
                            lin[t] = s.c_tilde[t] * s.c_tilde[t] - s2[t] / (n * a);
                            sq[t] = s.sum_y2[t] / (a * a * n * (n - 1.0));
                            break;
                        case VarianceVariant::u2:
                            lin[t] = s.sum_y2[t] / (n * a) - s2[t];
                            sq[t] = s.sum_y2[t] / (a * a * n * (n - 1.0));
                            break;
                    }
                }
                obj.mv_alpha_ = spec.variant == VarianceVariant::plugin ? 1.0 : n / (n - 1.0);
                obj.forms_ = CellForms(s.K, {s.c_tilde, lin}, {sq});
                break;
            }
        }
        return obj;
    }

    int factors() const { return K_; }
    const ObjectiveSpec& spec() const { return spec_; }

    Evaluation operator()(const ThetaVector& theta) const { return evaluate(theta, true); }

    double value(const ThetaVector& theta) const { return evaluate(theta, false).value; }

    Evaluation evaluate(const ThetaVector& theta, bool with_gradient) const {
        require(theta.factors() == K_, "theta dimension does not match objective K");
        const auto th = theta.values();
        const auto f = forms_.evaluate(th, with_gradient);
        Evaluation e;
        if (with_gradient) e.gradient.assign(K_, 0.0);
        switch (spec_.estimator) {
            case EstimatorKind::true_q:
            case EstimatorKind::adaptive:
            case EstimatorKind::ipw:
                e.value = f.linear[0];
                if (with_gradient) e.gradient = f.linear_grad[0];
                break;
            case EstimatorKind::hajek: {
                const double a = f.linear[0], b = f.linear[1];
                if (!(b > 0.0)) throw numerical_error("Hajek normalizer is not positive");
                e.value = a / b;
                if (with_gradient)
                    for (int k = 0; k < K_; ++k)
                        e.gradient[k] = (f.linear_grad[0][k] * b - a * f.linear_grad[1][k]) / (b * b);
                break;
            }
            case EstimatorKind::mean_variance: {
                const double m = f.linear[0];
                const double lambda = spec_.lambda;
                e.value = m - lambda * (f.linear[1] - mv_alpha_ * m * m + f.squared[0]);
                if (with_gradient)
                    for (int k = 0; k < K_; ++k) {
                        const double dm = f.linear_grad[0][k];
                        e.gradient[k] = dm - lambda * (f.linear_grad[1][k] - 2.0 * mv_alpha_ * m * dm +
                                                       f.squared_grad[0][k]);
                    }
                break;
            }
        }
        const double lam = spec_.entropy_weight();
        if (lam > 0.0) {
            e.value += lam * entropy(th);
            if (with_gradient)
                for (int k = 0; k < K_; ++k) e.gradient[k] += lam * std::log((1.0 - th[k]) / th[k]);
        }
        return e;
    }

private:
    CellObjective(int K, ObjectiveSpec spec) : K_(K), spec_(spec) {}

    int K_ = 0;
    ObjectiveSpec spec_;
    CellForms forms_;
    double mv_alpha_ = 1.0;
};

// sum_t c_t P_theta(t) + lambda f(theta)
inline double q_true(const PotentialOutcomeTable& table, const ThetaVector& theta, double lambda) {
    return CellObjective::from_table(table, {EstimatorKind::true_q, VarianceVariant::plugin, lambda})
        .value(theta);
}

// Plug-in of the adaptive cell means; empty cells contribute 0.
inline double q_adaptive(const CellSummary& s, const ThetaVector& theta, double lambda) {
    return CellObjective::from_summary(s, {EstimatorKind::adaptive, VarianceVariant::plugin, lambda})
        .value(theta);
}

// (1/n) sum_i Y_i W_i + lambda f(theta), summed over units.
inline double q_ipw(const FactorialDataset& data, const ThetaVector& theta, double lambda) {
    require(theta.factors() == data.K(), "theta dimension does not match dataset K");
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    double total = 0.0;
    for (const Unit& u : data.rows()) total += u.y * importance_weight(data.dist(), theta.values(), u.combo);
    if (!std::isfinite(total)) throw numerical_error("weighted outcome sum is not finite");
    return total / static_cast<double>(data.n()) + lambda * entropy(theta);
}

// sum_t c~_t P_theta(t) + lambda f(theta), the cell-sum form of q_ipw.
inline double q_ipw_cells(const CellSummary& s, const ThetaVector& theta, double lambda) {
    return CellObjective::from_summary(s, {EstimatorKind::ipw, VarianceVariant::plugin, lambda})
        .value(theta);
}

// Self-normalized weighting estimator sum_i Y_i W_i / sum_i W_i.
inline double q_hajek(const FactorialDataset& data, const ThetaVector& theta) {
    const auto w = hajek_weights(data, theta);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        num += data.rows()[i].y * w[i];
        den += w[i];
    }
    if (!(den > 0.0) || !std::isfinite(num / den)) throw numerical_error("degenerate Hajek weights");
    return num / den;
}

// E_theta[c~] - lambda (corrected variance estimate) for the chosen variant.
inline double q_mean_variance(const FactorialDataset& data,
                              std::optional<std::span<const double>> sigma2,
                              const ThetaVector& theta, double lambda, VarianceVariant variant) {
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    const CellSummary s = summarize_cells(data);
    double mean = 0.0;
    const auto p = cell_probabilities(theta);
    for (std::size_t t = 0; t < p.size(); ++t) mean += p[t] * s.c_tilde[t];
    if (lambda == 0.0) return mean;
    return mean - lambda * var_hat_corrected(data, theta, variant, sigma2);
}

// Builds the objective for `spec` from whichever inputs it needs.
inline CellObjective make_objective(const ObjectiveSpec& spec, const FactorialDataset& data,
                                    std::optional<std::span<const double>> sigma2 = std::nullopt) {
    return CellObjective::from_summary(summarize_cells(data), spec, sigma2);
}

inline Evaluation grad_q(const CellObjective& objective, const ThetaVector& theta) {
    return objective(theta);
}

// Scale sqrt(|T| log|T| / n) below which the separation gap eta cannot be
// resolved by the adaptive estimator at sample size n.
inline double consistency_eta_scale(int K, std::size_t n) {
    const double cells = static_cast<double>(cell_count(K));
    return std::sqrt(cells * std::log(cells) / static_cast<double>(n));
}

struct SeparationRadius {
    double radius = 0.0;
    std::vector<double> theta_star;
    double q_star = 0.0;
    double q_range = 0.0;       // sup Q - inf Q over the grid
    std::size_t grid_points = 0;
    double grid_step = 0.0;
};

// Grid approximation of
//   eps_lambda = inf { eps : inf_{|theta - theta*| > eps} |Q(theta) - Q(theta*)| > eta },
// i.e. the largest Euclidean distance from theta* of a grid point whose value
// is within eta of Q(theta*).
inline SeparationRadius separation_radius(const PotentialOutcomeTable& table, double lambda,
                                          double eta, double grid_step = 1.0 / 200.0,
                                          const OptimizerConfig& opt = {},
                                          std::size_t max_grid_points = 50'000'000) {
    require(eta > 0.0 && std::isfinite(eta), "eta must be positive");
    require(grid_step > 0.0 && grid_step <= 0.5, "grid step must be in (0, 0.5]");
    const int K = table.K;
    const auto obj =
        CellObjective::from_table(table, {EstimatorKind::true_q, VarianceVariant::plugin, lambda});
    const OptimResult best = maximize(obj, K, opt);

    const auto per_axis = static_cast<std::size_t>(std::llround(1.0 / grid_step)) + 1;
    double total = 1.0;
    for (int k = 0; k < K; ++k) total *= static_cast<double>(per_axis);
    require(total <= static_cast<double>(max_grid_points),
            "separation grid of " + std::to_string(total) + " points exceeds the cap; coarsen the grid");
    const Box box = opt.resolved_box(K);
    std::vector<std::vector<double>> axis(K);
    for (int k = 0; k < K; ++k)
        for (std::size_t j = 0; j < per_axis; ++j)
            axis[k].push_back(std::clamp(static_cast<double>(j) / static_cast<double>(per_axis - 1),
                                         box.lo[k], box.hi[k]));

    SeparationRadius out;
    out.theta_star = best.theta_hat.vec();
    out.q_star = best.value;
    out.grid_step = grid_step;
    double q_min = best.value, q_max = best.value, radius = 0.0;
    std::vector<std::size_t> idx(K, 0);
    std::vector<double> point(K);
    for (;;) {
        for (int k = 0; k < K; ++k) point[k] = axis[k][idx[k]];
        const double q = obj.value(ThetaVector(point, opt.box_eps));
        q_min = std::min(q_min, q);
        q_max = std::max(q_max, q);
        if (std::abs(q - best.value) <= eta) {
            double d2 = 0.0;
            for (int k = 0; k < K; ++k) d2 += (point[k] - out.theta_star[k]) * (point[k] - out.theta_star[k]);
            radius = std::max(radius, std::sqrt(d2));
        }
        ++out.grid_points;
        int k = 0;
        while (k < K && ++idx[k] == per_axis) idx[k++] = 0;
        if (k == K) break;
    }
    out.q_range = q_max - q_min;
    require(eta < out.q_range, "eta = " + std::to_string(eta) + " exceeds the objective range " +
                                   std::to_string(out.q_range) + "; the radius is undefined");
    out.radius = radius;
    return out;
}

}  // namespace factint
