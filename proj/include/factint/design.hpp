// design.hpp
//
// Treatment cells of a 2^K binary factorial design, the product-Bernoulli
// intervention policy over those cells, the assignment distribution used by
// the experiment, and the entropy penalty on the policy.
#pragma once
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace factint {

inline constexpr int kMaxFactors = 24;
inline constexpr double kDefaultBoxEps = 1e-6;

using CellIndex = std::uint32_t;

inline std::size_t cell_count(int K) {
    require(K >= 1 && K <= kMaxFactors,
            "factor count K must be in [1, " + std::to_string(kMaxFactors) + "], got " +
                std::to_string(K));
    return std::size_t{1} << K;
}

// One cell t in {0,1}^K. Factor k (zero based) is bit k of the index, so
// factor 1 is the least significant bit.
class TreatmentCombo {
public:
    TreatmentCombo(int K, CellIndex index) : K_(K), index_(index) {
        require(index < cell_count(K), "combo index " + std::to_string(index) +
                                           " out of range for K=" + std::to_string(K));
    }

    static TreatmentCombo from_bits(std::span<const int> bits) {
        const int K = static_cast<int>(bits.size());
        cell_count(K);
        CellIndex index = 0;
        for (int k = 0; k < K; ++k) {
            require(bits[k] == 0 || bits[k] == 1, "treatment bits must be 0 or 1");
            index |= static_cast<CellIndex>(bits[k]) << k;
        }
        return TreatmentCombo(K, index);
    }

    int factors() const { return K_; }
    CellIndex index() const { return index_; }
    int bit(int k) const { return static_cast<int>((index_ >> k) & 1u); }

    std::vector<int> bits() const {
        std::vector<int> out(K_);
        for (int k = 0; k < K_; ++k) out[k] = bit(k);
        return out;
    }

    int popcount() const { return std::popcount(index_); }

    friend bool operator==(const TreatmentCombo&, const TreatmentCombo&) = default;

private:
    int K_;
    CellIndex index_;
};

// Policy parameter theta in the clamped box [eps, 1 - eps]^K.
class ThetaVector {
public:
    explicit ThetaVector(std::vector<double> values, double eps = kDefaultBoxEps)
        : values_(std::move(values)) {
        cell_count(static_cast<int>(values_.size()));
        require(eps > 0.0 && eps < 0.5, "box eps must be in (0, 0.5)");
        for (double v : values_) {
            require(std::isfinite(v) && v >= eps && v <= 1.0 - eps,
                    "theta coordinate " + std::to_string(v) + " outside [" + std::to_string(eps) +
                        ", 1-" + std::to_string(eps) + "]");
        }
    }

    static ThetaVector uniform(int K, double value = 0.5) {
        return ThetaVector(std::vector<double>(static_cast<std::size_t>(K), value));
    }

    // Clips each coordinate into [eps, 1 - eps] instead of rejecting it.
    static ThetaVector clamped(std::vector<double> values, double eps = kDefaultBoxEps) {
        for (double& v : values) v = std::clamp(v, eps, 1.0 - eps);
        return ThetaVector(std::move(values), eps);
    }

    int factors() const { return static_cast<int>(values_.size()); }
    double operator[](std::size_t k) const { return values_[k]; }
    std::span<const double> values() const { return values_; }
    const std::vector<double>& vec() const { return values_; }

    friend bool operator==(const ThetaVector&, const ThetaVector&) = default;

private:
    std::vector<double> values_;
};

inline double prob_of_combo(const ThetaVector& theta, const TreatmentCombo& t) {
    require(theta.factors() == t.factors(), "theta has " + std::to_string(theta.factors()) +
                                                " factors but combo has " +
                                                std::to_string(t.factors()));
    double p = 1.0;
    for (int k = 0; k < theta.factors(); ++k) p *= t.bit(k) ? theta[k] : 1.0 - theta[k];
    return p;
}

// P_theta over all 2^K cells, built by doubling one factor at a time.
inline std::vector<double> cell_probabilities(std::span<const double> theta) {
    const int K = static_cast<int>(theta.size());
    std::vector<double> p(cell_count(K), 0.0);
    p[0] = 1.0;
    for (int k = 0; k < K; ++k) {
        const std::size_t half = std::size_t{1} << k;
        for (std::size_t j = 0; j < half; ++j) {
            p[j | half] = p[j] * theta[k];
            p[j] *= 1.0 - theta[k];
        }
    }
    return p;
}

inline std::vector<double> cell_probabilities(const ThetaVector& theta) {
    return cell_probabilities(theta.values());
}

// Natural-log entropy of the K independent coins.
inline double entropy(std::span<const double> theta) {
    double h = 0.0;
    for (double v : theta) {
        require(v > 0.0 && v < 1.0, "entropy needs theta strictly inside (0,1)");
        h -= v * std::log(v) + (1.0 - v) * std::log1p(-v);
    }
    return h;
}

inline double entropy(const ThetaVector& theta) { return entropy(theta.values()); }

class AssignmentDist {
public:
    enum class Kind { uniform, product_bernoulli };

    static AssignmentDist uniform(int K) {
        cell_count(K);
        return AssignmentDist(Kind::uniform, std::vector<double>(static_cast<std::size_t>(K), 0.5));
    }

    static AssignmentDist product(std::vector<double> pi) {
        cell_count(static_cast<int>(pi.size()));
        for (double v : pi)
            require(std::isfinite(v) && v > 0.0 && v < 1.0,
                    "assignment probabilities must lie in (0,1) for positivity");
        return AssignmentDist(Kind::product_bernoulli, std::move(pi));
    }

    Kind kind() const { return kind_; }
    int factors() const { return static_cast<int>(pi_.size()); }
    std::span<const double> pi() const { return pi_; }

    // P(T_k = bit) for a single factor.
    double factor_prob(int k, int bit) const { return bit ? pi_[k] : 1.0 - pi_[k]; }

    double prob(CellIndex t) const {
        if (kind_ == Kind::uniform) return std::ldexp(1.0, -factors());
        double p = 1.0;
        for (int k = 0; k < factors(); ++k) p *= factor_prob(k, static_cast<int>((t >> k) & 1u));
        return p;
    }

    std::vector<double> cell_probabilities() const {
        if (kind_ == Kind::uniform)
            return std::vector<double>(cell_count(factors()), std::ldexp(1.0, -factors()));
        return factint::cell_probabilities(std::span<const double>(pi_));
    }

    friend bool operator==(const AssignmentDist&, const AssignmentDist&) = default;

private:
    AssignmentDist(Kind kind, std::vector<double> pi) : kind_(kind), pi_(std::move(pi)) {}

    Kind kind_;
    std::vector<double> pi_;
};

inline double assignment_prob(const AssignmentDist& dist, const TreatmentCombo& t) {
    require(dist.factors() == t.factors(), "assignment distribution has " +
                                               std::to_string(dist.factors()) +
                                               " factors but combo has " +
                                               std::to_string(t.factors()));
    return dist.prob(t.index());
}

// Mean c_t and standard deviation sigma_t of the potential outcome of every
// cell.
struct PotentialOutcomeTable {
    int K = 0;
    std::vector<double> c;
    std::vector<double> sigma;

    static PotentialOutcomeTable bernoulli(std::vector<double> c) {
        const int K = std::countr_zero(c.size());
        require(c.size() >= 2 && std::has_single_bit(c.size()),
                "table size must be 2^K with K >= 1");
        cell_count(K);
        std::vector<double> sigma(c.size());
        for (std::size_t t = 0; t < c.size(); ++t) {
            require(c[t] > 0.0 && c[t] < 1.0, "bernoulli cell means must lie in (0,1)");
            sigma[t] = std::sqrt(c[t] * (1.0 - c[t]));
        }
        return PotentialOutcomeTable{K, std::move(c), std::move(sigma)};
    }

    static PotentialOutcomeTable gaussian(std::vector<double> c, std::vector<double> sigma) {
        require(c.size() >= 2 && std::has_single_bit(c.size()),
                "table size must be 2^K with K >= 1");
        require(sigma.size() == c.size(), "sigma table must match the mean table");
        for (std::size_t t = 0; t < c.size(); ++t)
            require(std::isfinite(c[t]) && std::isfinite(sigma[t]) && sigma[t] >= 0.0,
                    "gaussian table needs finite means and nonnegative sigmas");
        const int K = std::countr_zero(c.size());
        cell_count(K);
        return PotentialOutcomeTable{K, std::move(c), std::move(sigma)};
    }

    std::vector<double> variances() const {
        std::vector<double> v(sigma.size());
        for (std::size_t t = 0; t < sigma.size(); ++t) v[t] = sigma[t] * sigma[t];
        return v;
    }
};

}  // namespace factint
