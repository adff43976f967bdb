// basis.hpp
//
// Basis selection for regression on [0,1]^d: unbiased U-statistic estimates
// of the squared coefficients c_q = <b, phi_q>^2, a bit-encoded sampling
// distribution alpha_theta over the p = 2^l basis indices, and i.i.d. draws
// from the fitted distribution.
//
// Index j in [0, p) is read as bits b_1 .. b_l with b_1 the most significant;
// coin m decides bit b_m.
#pragma once
#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <istream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "design.hpp"
#include "objective.hpp"
#include "optimizer.hpp"
#include "random.hpp"

namespace factint {

struct Observation {
    std::vector<double> x;
    double y = 0.0;
};

class RegressionSample {
public:
    RegressionSample(int d, std::vector<Observation> rows) : d_(d), rows_(std::move(rows)) {
        require(d_ >= 1, "covariate dimension must be >= 1");
        require(rows_.size() >= 2, "regression sample needs n >= 2");
        for (const auto& r : rows_) {
            require(static_cast<int>(r.x.size()) == d_, "covariate vector has the wrong dimension");
            for (double v : r.x) require(v >= 0.0 && v <= 1.0, "covariates must lie in [0,1]");
            require(std::isfinite(r.y), "responses must be finite");
        }
    }

    int d() const { return d_; }
    std::size_t n() const { return rows_.size(); }
    const std::vector<Observation>& rows() const { return rows_; }

private:
    int d_;
    std::vector<Observation> rows_;
};

// Reads the `x1,...,xd,y` text format.
inline RegressionSample read_regression(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    require(line_no > 0 && !line.empty(), "regression file is empty (missing header)");
    const auto header = detail::split_fields(line);
    const int d = static_cast<int>(header.size()) - 1;
    require(d >= 1, "line " + std::to_string(line_no) + ": header needs x1..xd,y columns");
    for (int k = 0; k < d; ++k)
        require(header[k] == "x" + std::to_string(k + 1),
                "line " + std::to_string(line_no) + ": expected column x" + std::to_string(k + 1));
    require(header[d] == "y", "line " + std::to_string(line_no) + ": last column must be y");
    std::vector<Observation> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = detail::split_fields(line);
        const std::string where = "line " + std::to_string(line_no) + ": ";
        require(fields.size() == header.size(), where + "expected " + std::to_string(header.size()) + " fields");
        Observation o;
        o.x.resize(d);
        for (int k = 0; k < d; ++k)
            require(detail::parse_double(fields[k], o.x[k]) && o.x[k] >= 0.0 && o.x[k] <= 1.0,
                    where + "x" + std::to_string(k + 1) + " must be a number in [0,1]");
        require(detail::parse_double(fields[d], o.y), where + "y is not a finite number");
        rows.push_back(std::move(o));
    }
    return RegressionSample(d, std::move(rows));
}

// A family of p = 2^l functions on [0,1]^d. Indices at or above `active()`
// are zero padding.
class BasisFamily {
public:
    enum class Kind { indicator_partition, custom };
    using Fn = std::function<double(std::size_t, std::span<const double>)>;

    // Equal-volume boxes scaled by sqrt(count), so the family is orthonormal
    // under the uniform density. `count` is split into per-axis counts as
    // evenly as its prime factors allow.
    static BasisFamily indicator(std::size_t count, int d) {
        require(count >= 1 && d >= 1, "indicator basis needs count >= 1 and d >= 1");
        BasisFamily b;
        b.kind_ = Kind::indicator_partition;
        b.d_ = d;
        b.active_ = count;
        b.p_ = std::bit_ceil(count);
        require(std::countr_zero(b.p_) <= kMaxFactors, "basis count too large");
        b.per_axis_.assign(d, 1);
        std::vector<std::size_t> primes;
        std::size_t m = count;
        for (std::size_t f = 2; f * f <= m; ++f)
            while (m % f == 0) {
                primes.push_back(f);
                m /= f;
            }
        if (m > 1) primes.push_back(m);
        std::sort(primes.rbegin(), primes.rend());
        for (std::size_t f : primes) *std::min_element(b.per_axis_.begin(), b.per_axis_.end()) *= f;
        b.scale_ = std::sqrt(static_cast<double>(count));
        return b;
    }

    // `fn(j, x)` for j < count; padded to the next power of two.
    static BasisFamily custom(std::size_t count, int d, Fn fn) {
        require(count >= 1 && d >= 1 && fn, "custom basis needs count >= 1, d >= 1 and a function");
        BasisFamily b;
        b.kind_ = Kind::custom;
        b.d_ = d;
        b.active_ = count;
        b.p_ = std::bit_ceil(count);
        require(std::countr_zero(b.p_) <= kMaxFactors, "basis count too large");
        b.fn_ = std::move(fn);
        return b;
    }

    Kind kind() const { return kind_; }
    std::size_t p() const { return p_; }
    std::size_t active() const { return active_; }
    std::size_t padded() const { return p_ - active_; }
    int bits() const { return std::countr_zero(p_); }
    int d() const { return d_; }
    const std::vector<std::size_t>& per_axis() const { return per_axis_; }

    double evaluate(std::size_t j, std::span<const double> x) const {
        if (j >= active_) return 0.0;
        if (kind_ == Kind::custom) return fn_(j, x);
        return cell_of(x) == j ? scale_ : 0.0;
    }

    // Nonzero (index, value) pairs at x.
    std::vector<std::pair<std::size_t, double>> nonzeros(std::span<const double> x) const {
        std::vector<std::pair<std::size_t, double>> out;
        if (kind_ == Kind::indicator_partition) {
            out.emplace_back(cell_of(x), scale_);
            return out;
        }
        for (std::size_t j = 0; j < active_; ++j) {
            const double v = fn_(j, x);
            if (v != 0.0) out.emplace_back(j, v);
        }
        return out;
    }

    // Index of the box containing x; axis 0 varies fastest.
    std::size_t cell_of(std::span<const double> x) const {
        std::size_t j = 0, stride = 1;
        for (int k = 0; k < d_; ++k) {
            const std::size_t m = per_axis_[k];
            const auto c = std::min(static_cast<std::size_t>(x[k] * static_cast<double>(m)), m - 1);
            j += c * stride;
            stride *= m;
        }
        return j;
    }

private:
    Kind kind_ = Kind::indicator_partition;
    int d_ = 1;
    std::size_t p_ = 1;
    std::size_t active_ = 1;
    std::vector<std::size_t> per_axis_;
    double scale_ = 1.0;
    Fn fn_;
};

// Max |<phi_i, phi_j> - delta_ij| over the active indices by the midpoint
// rule with `resolution` points per axis (per-axis box counts for the
// indicator kind, where the rule is exact).
inline double gram_deviation(const BasisFamily& family, std::size_t resolution = 0) {
    const int d = family.d();
    std::vector<std::size_t> pts(d, resolution);
    if (family.kind() == BasisFamily::Kind::indicator_partition && resolution == 0) pts = family.per_axis();
    for (std::size_t r : pts) require(r >= 1, "quadrature resolution must be positive");
    const std::size_t q = family.active();
    std::vector<double> gram(q * q, 0.0);
    double weight = 1.0;
    for (std::size_t r : pts) weight /= static_cast<double>(r);
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    for (;;) {
        for (int k = 0; k < d; ++k) x[k] = (static_cast<double>(idx[k]) + 0.5) / static_cast<double>(pts[k]);
        const auto nz = family.nonzeros(x);
        for (const auto& [i, vi] : nz)
            for (const auto& [j, vj] : nz) gram[i * q + j] += weight * vi * vj;
        int k = 0;
        while (k < d && ++idx[k] == pts[k]) idx[k++] = 0;
        if (k == d) break;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < q; ++j) worst = std::max(worst, std::abs(gram[i * q + j] - (i == j ? 1.0 : 0.0)));
    return worst;
}

// Y = sum_j beta phi_j(X) + noise N(0,1) with X uniform on [0,1]^d, the
// planted signal having c_j = beta^2 on `support` and 0 elsewhere.
inline RegressionSample planted_regression(const BasisFamily& family, std::span<const std::size_t> support,
                                           double beta, double noise, std::size_t n, std::uint64_t seed,
                                           std::uint64_t index = 0) {
    for (std::size_t j : support) require(j < family.active(), "planted index outside the active basis");
    require(noise >= 0.0 && std::isfinite(noise) && std::isfinite(beta), "invalid planted model parameters");
    Engine eng = make_engine(seed, index);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Observation> rows(n);
    for (auto& r : rows) {
        r.x.resize(family.d());
        for (double& v : r.x) v = uniform01(eng);
        r.y = 0.0;
        for (std::size_t j : support) r.y += beta * family.evaluate(j, r.x);
        r.y += noise * normal(eng);
    }
    return RegressionSample(family.d(), std::move(rows));
}

struct CoefficientOptions {
    bool clamp_at_zero = false;
};

// c^_q = (S_q^2 - T_q) / (n (n-1)) with S_q = sum_i Y_i phi_q(X_i) and
// T_q = sum_i (Y_i phi_q(X_i))^2, i.e. the pairwise sum over i != j.
inline std::vector<double> u_stat_coefficients(const RegressionSample& sample, const BasisFamily& family,
                                               const CoefficientOptions& options = {}) {
    require(sample.d() == family.d(), "basis dimension does not match the sample");
    const double n = static_cast<double>(sample.n());
    std::vector<double> S(family.p(), 0.0), T(family.p(), 0.0);
    for (const auto& row : sample.rows())
        for (const auto& [j, v] : family.nonzeros(row.x)) {
            const double a = row.y * v;
            S[j] += a;
            T[j] += a * a;
        }
    std::vector<double> c(family.p());
    for (std::size_t j = 0; j < c.size(); ++j) {
        c[j] = (S[j] * S[j] - T[j]) / (n * (n - 1.0));
        if (options.clamp_at_zero) c[j] = std::max(c[j], 0.0);
    }
    return c;
}

struct BitPolicy {
    std::vector<double> theta;  // theta[m] is the success probability of coin m + 1

    int bits() const { return static_cast<int>(theta.size()); }
    std::size_t p() const { return std::size_t{1} << theta.size(); }
};

namespace detail {

inline std::size_t reverse_bits(std::size_t j, int l) {
    std::size_t r = 0;
    for (int b = 0; b < l; ++b) r |= ((j >> b) & 1u) << (l - 1 - b);
    return r;
}

}  // namespace detail

inline std::vector<double> alpha_from_theta(const BitPolicy& policy) {
    const int l = policy.bits();
    require(l >= 1 && l <= kMaxFactors, "bit policy needs 1..24 coins");
    // Coin m sets bit l-1-m, so alpha is the factorial cell distribution with
    // its index bits reversed.
    const auto cells = cell_probabilities(std::span<const double>(policy.theta));
    std::vector<double> alpha(cells.size());
    for (std::size_t t = 0; t < cells.size(); ++t) alpha[detail::reverse_bits(t, l)] = cells[t];
    return alpha;
}

struct PolicyFit {
    BitPolicy policy;
    OptimResult result;
};

// Maximizes sum_j c_j alpha_theta(j) + lambda entropy(theta) as the factorial
// objective whose cell t carries c at the bit-reversed index.
inline PolicyFit optimize_policy(std::span<const double> c_hat, double lambda, const OptimizerConfig& opt = {}) {
    require(c_hat.size() >= 2 && std::has_single_bit(c_hat.size()), "coefficient count must be 2^l with l >= 1");
    const int l = std::countr_zero(c_hat.size());
    cell_count(l);
    std::vector<double> cells(c_hat.size());
    for (std::size_t t = 0; t < cells.size(); ++t) cells[t] = c_hat[detail::reverse_bits(t, l)];
    const auto table = PotentialOutcomeTable::gaussian(std::move(cells), std::vector<double>(c_hat.size(), 0.0));
    const auto obj = CellObjective::from_table(table, {EstimatorKind::true_q, VarianceVariant::plugin, lambda});
    OptimResult result = maximize(obj, l, opt);
    BitPolicy policy{result.theta_hat.vec()};
    return PolicyFit{std::move(policy), std::move(result)};
}

// k i.i.d. indices from alpha_theta, l coin flips per draw, most significant
// bit first. With `dedup` repeated indices are dropped, keeping first
// appearances, so fewer than k may be returned.
inline std::vector<std::size_t> sample_bases(const BitPolicy& policy, std::size_t k, std::uint64_t seed,
                                             bool dedup = false) {
    require(k >= 1, "need at least one draw");
    require(policy.bits() >= 1, "bit policy needs at least one coin");
    Engine eng = make_engine(seed, 0xBA5E);
    std::vector<std::size_t> out;
    out.reserve(k);
    std::vector<bool> seen(dedup ? policy.p() : 0, false);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = 0;
        for (double th : policy.theta) j = (j << 1) | (uniform01(eng) < th ? 1u : 0u);
        if (dedup) {
            if (seen[j]) continue;
            seen[j] = true;
        }
        out.push_back(j);
    }
    return out;
}

// The `count` most frequent drawn indices, ties to the lower index. Indices
// never drawn are left out, so fewer than `count` may come back.
inline std::vector<std::size_t> most_frequent(std::span<const std::size_t> draws, std::size_t p, std::size_t count) {
    std::vector<std::size_t> freq(p, 0);
    for (std::size_t j : draws) {
        require(j < p, "draw outside the index range");
        ++freq[j];
    }
    std::vector<std::size_t> order(p);
    for (std::size_t j = 0; j < p; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return freq[a] > freq[b]; });
    order.resize(std::min(count, p));
    std::erase_if(order, [&](std::size_t j) { return freq[j] == 0; });
    return order;
}

}  // namespace factint
