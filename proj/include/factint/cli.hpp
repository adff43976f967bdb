// cli.hpp
//
// The factint command line. run() parses arguments, merges an optional JSON
// config file with flags (flags win), executes one subcommand and writes a
// report. Exit codes: 0 ok, 2 configuration error, 3 numerical failure.
#pragma once
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "basis.hpp"
#include "dataset.hpp"
#include "design.hpp"
#include "estimators.hpp"
#include "inference.hpp"
#include "mixture.hpp"
#include "objective.hpp"
#include "optimizer.hpp"
#include "sim.hpp"

namespace factint::cli {

using json = nlohmann::json;

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalError = 3 };

class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Keys accepted at the top level or inside one of the named blocks.
inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "seed",     "format",      "out",        "input",     "K",          "n",           "lambda",
        "estimator", "variant",    "replicates", "split",     "k_clusters", "p",           "select_k",
        "C_box",    "family",      "c",          "sigma",     "theta",      "assign_pi",   "n_grid",
        "K_grid",   "starts",      "max_iters",  "grad_tol",  "box_eps",    "support",     "beta",
        "noise",    "d",           "dedup",      "clamp_zero", "include_penalty", "eval_estimator",
        "cap",      "slack",       "em_restarts", "negative_control"};
    return keys;
}

inline const std::set<std::string>& block_names() {
    static const std::set<std::string> blocks = {"sim", "objective", "optimizer", "mixture", "basis", "split",
                                                 "validate"};
    return blocks;
}

// Flattens the recognized blocks into one object, rejecting unknown keys.
inline json flatten_config(const json& doc) {
    if (!doc.is_object()) throw config_error("config file must hold a JSON object");
    json flat = json::object();
    for (const auto& [key, value] : doc.items()) {
        if (block_names().count(key)) {
            if (!value.is_object()) throw config_error("config block '" + key + "' must be an object");
            for (const auto& [k2, v2] : value.items()) {
                if (!known_keys().count(k2)) throw config_error("unknown config key '" + key + "." + k2 + "'");
                flat[k2] = v2;
            }
        } else if (known_keys().count(key)) {
            flat[key] = value;
        } else {
            throw config_error("unknown config key '" + key + "'");
        }
    }
    return flat;
}

// Resolved settings: every lookup names its own default.
class Settings {
public:
    Settings(json values, std::string command, std::vector<std::string> args)
        : values_(std::move(values)), command_(std::move(command)), args_(std::move(args)) {}

    bool has(const std::string& key) const { return values_.contains(key); }

    template <class T>
    T get(const std::string& key, T fallback) const {
        if (!values_.contains(key)) return fallback;
        try {
            return values_.at(key).get<T>();
        } catch (const json::exception&) {
            throw config_error("config key '" + key + "' has the wrong type");
        }
    }

    template <class T>
    std::optional<T> opt(const std::string& key) const {
        if (!values_.contains(key)) return std::nullopt;
        return get<T>(key, T{});
    }

    const json& values() const { return values_; }
    const std::string& command() const { return command_; }
    const std::vector<std::string>& args() const { return args_; }

    std::uint64_t seed() const { return get<std::uint64_t>("seed", 0); }

    // Hash of everything that can influence results; output routing excluded.
    std::string config_hash() const {
        json h = values_;
        h.erase("out");
        h.erase("format");
        h["command"] = command_;
        h["args"] = args_;
        return hex64(fnv1a(h.dump()));
    }

private:
    json values_;
    std::string command_;
    std::vector<std::string> args_;
};

namespace detail {

inline double positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw config_error(std::string(what) + " must be positive");
    return v;
}

inline int factors(const Settings& s) {
    const int K = s.get<int>("K", 2);
    if (K < 1 || K > kMaxFactors) throw config_error("K must be in 1..24");
    return K;
}

inline std::vector<double> default_theta(int K) {
    std::vector<double> th(K);
    for (int k = 0; k < K; ++k) th[k] = K == 1 ? 0.3 : 0.3 + 0.4 * k / (K - 1);
    return th;
}

inline ThetaVector theta_of(const Settings& s, int K) {
    const auto th = s.get<std::vector<double>>("theta", default_theta(K));
    if (static_cast<int>(th.size()) != K) throw config_error("theta must have K entries");
    return ThetaVector(th, s.get<double>("box_eps", kDefaultBoxEps));
}

inline AssignmentDist assignment_of(const Settings& s, int K) {
    if (!s.has("assign_pi")) return AssignmentDist::uniform(K);
    const auto pi = s.get<std::vector<double>>("assign_pi", {});
    if (static_cast<int>(pi.size()) != K) throw config_error("assign_pi must have K entries");
    return AssignmentDist::product(pi);
}

inline OutcomeFamily family_of(const Settings& s) {
    const auto f = s.get<std::string>("family", "bernoulli");
    if (f == "bernoulli") return OutcomeFamily::bernoulli;
    if (f == "gaussian") return OutcomeFamily::gaussian;
    throw config_error("family must be bernoulli or gaussian");
}

// Default means c_t = 0.2 + 0.6 popcount(t) / K, so K=1 gives (0.2, 0.8).
inline PotentialOutcomeTable table_of(const Settings& s, int K) {
    std::vector<double> c;
    if (s.has("c")) {
        c = s.get<std::vector<double>>("c", {});
        if (c.size() != cell_count(K)) throw config_error("c must have 2^K entries");
    } else {
        c.resize(cell_count(K));
        for (std::size_t t = 0; t < c.size(); ++t)
            c[t] = 0.2 + 0.6 * std::popcount(static_cast<unsigned>(t)) / K;
    }
    if (family_of(s) == OutcomeFamily::bernoulli) {
        if (s.has("sigma")) throw config_error("sigma is implied by c for bernoulli outcomes");
        return PotentialOutcomeTable::bernoulli(c);
    }
    std::vector<double> sigma(c.size(), 1.0);
    if (s.has("sigma")) {
        sigma = s.get<std::vector<double>>("sigma", {});
        if (sigma.size() == 1) sigma.assign(c.size(), sigma[0]);
    }
    return PotentialOutcomeTable::gaussian(c, sigma);
}

inline SimConfig sim_of(const Settings& s) {
    const int K = factors(s);
    SimConfig cfg{assignment_of(s, K), family_of(s), table_of(s, K),
                  s.get<std::size_t>("n", 1000), s.get<std::size_t>("replicates", 1000), s.seed()};
    if (cfg.n < 1) throw config_error("n must be positive");
    if (cfg.replicates < 1) throw config_error("replicates must be positive");
    return cfg;
}

inline OptimizerConfig optimizer_of(const Settings& s, int K, std::size_t n) {
    OptimizerConfig o;
    o.starts = s.get<int>("starts", o.starts);
    o.max_iters = s.get<int>("max_iters", o.max_iters);
    o.grad_tol = s.get<double>("grad_tol", o.grad_tol);
    o.box_eps = s.get<double>("box_eps", o.box_eps);
    o.seed = s.seed();
    if (s.has("C_box")) o.box = highdim_box(K, n, positive(s.get<double>("C_box", 0.0), "C_box"), o.box_eps);
    o.validate();
    return o;
}

inline EstimatorKind estimator_of(const std::string& name) {
    if (name == "adaptive") return EstimatorKind::adaptive;
    if (name == "ipw") return EstimatorKind::ipw;
    if (name == "hajek") return EstimatorKind::hajek;
    if (name == "mean_variance" || name == "mean-variance") return EstimatorKind::mean_variance;
    throw config_error("unknown estimator '" + name + "' (adaptive, ipw, hajek, mean_variance)");
}

inline VarianceVariant variant_of(const Settings& s) {
    const auto v = s.get<std::string>("variant", "plugin");
    if (v == "plugin") return VarianceVariant::plugin;
    if (v == "u1") return VarianceVariant::u1;
    if (v == "u2") return VarianceVariant::u2;
    throw config_error("variant must be plugin, u1 or u2");
}

inline ObjectiveSpec spec_of(const Settings& s, const char* fallback = "adaptive") {
    ObjectiveSpec spec{estimator_of(s.get<std::string>("estimator", fallback)), variant_of(s),
                       s.get<double>("lambda", 0.0)};
    if (!std::isfinite(spec.lambda) || spec.lambda < 0.0) throw config_error("lambda must be >= 0");
    return spec;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The dataset named by `input`, else one simulated replicate.
inline FactorialDataset dataset_of(const Settings& s) {
    if (!s.has("input")) return generate(sim_of(s), 0);
    const std::string text = read_file(s.get<std::string>("input", ""));
    std::istringstream peek(text);
    std::string header;
    while (std::getline(peek, header) && header.find_first_not_of(" \t\r") == std::string::npos) {
    }
    const int K = static_cast<int>(factint::detail::split_fields(header).size()) - 1;
    if (K < 1 || K > kMaxFactors) throw config_error("dataset header must have t1..tK,y with 1 <= K <= 24");
    std::istringstream in(text);
    return read_dataset(in, assignment_of(s, K));
}

inline json to_json(const ValidationReport& r) {
    json j = {{"claim", r.claim},
              {"statistic_kind", r.statistic_kind},
              {"statistic", r.statistic},
              {"target", r.target},
              {"se", r.se},
              {"tolerance", r.tolerance},
              {"lower", r.lower},
              {"upper", r.upper},
              {"pass", r.pass},
              {"degenerate", r.degenerate},
              {"negative_control", r.negative_control},
              {"seed", r.seed},
              {"runtime", r.runtime_seconds}};
    json d = json::object();
    for (const auto& [k, v] : r.details) d[k] = v;
    j["details"] = d;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

struct Outcome {
    json statistic = nullptr;
    json target = nullptr;
    json se = nullptr;
    bool pass = true;
    json result = json::object();
    std::optional<std::string> payload;  // text written to --out instead of the report
};

inline Outcome cmd_simulate(const Settings& s) {
    const auto data = detail::dataset_of(s);
    std::ostringstream ss;
    write_dataset(ss, data);
    double mean = 0.0;
    for (const Unit& u : data.rows()) mean += u.y;
    mean /= static_cast<double>(data.n());
    Outcome o;
    o.statistic = mean;
    o.result = {{"K", data.K()}, {"n", data.n()}, {"mean_y", mean}};
    o.payload = ss.str();
    return o;
}

inline Outcome cmd_estimate(const Settings& s) {
    const auto data = detail::dataset_of(s);
    const CellSummary cs = summarize_cells(data);
    json cells = json::array();
    for (std::size_t t = 0; t < cs.cells(); ++t) {
        std::string bits;
        for (int k = 0; k < cs.K; ++k) bits += ((t >> k) & 1u) ? '1' : '0';
        cells.push_back({{"index", t},
                         {"t", bits},
                         {"n_t", cs.n_t[t]},
                         {"sum_y", cs.sum_y[t]},
                         {"c_hat", cs.c_hat[t]},
                         {"c_tilde", cs.c_tilde[t]},
                         {"empty", static_cast<bool>(cs.empty[t])}});
    }
    Outcome o;
    o.statistic = static_cast<double>(cs.empty_count());
    o.result = {{"K", cs.K}, {"n", cs.n}, {"empty_cells", cs.empty_count()}, {"cells", cells}};
    if (s.has("theta")) {
        const auto theta = detail::theta_of(s, cs.K);
        const double lambda = s.get<double>("lambda", 0.0);
        o.result["q_adaptive"] = q_adaptive(cs, theta, lambda);
        o.result["q_ipw"] = q_ipw(data, theta, lambda);
        o.result["q_hajek"] = q_hajek(data, theta);
    }
    return o;
}

inline Outcome cmd_optimize(const Settings& s) {
    const auto data = detail::dataset_of(s);
    const auto spec = detail::spec_of(s);
    const auto opt = detail::optimizer_of(s, data.K(), data.n());
    const auto fit = maximize(make_objective(spec, data), data.K(), opt);
    Outcome o;
    o.statistic = fit.value;
    o.result = {{"theta_hat", fit.theta_hat.vec()},
                {"value", fit.value},
                {"converged", fit.converged},
                {"iterations", fit.iterations},
                {"start_index", fit.start_index},
                {"start_spread", fit.start_spread()},
                {"estimator", to_string(spec.estimator)},
                {"lambda", spec.lambda},
                {"n", data.n()},
                {"K", data.K()}};
    if (opt.box) o.result["box"] = {{"lo", opt.box->lo}, {"hi", opt.box->hi}};
    o.pass = fit.converged;
    return o;
}

inline Outcome cmd_split(const Settings& s) {
    const auto data = detail::dataset_of(s);
    const auto spec = detail::spec_of(s);
    SplitOptions options;
    options.eval_estimator = detail::estimator_of(s.get<std::string>("eval_estimator", "ipw"));
    options.include_penalty = s.get<bool>("include_penalty", true);
    const auto opt = detail::optimizer_of(s, data.K(), data.n());
    const auto r = split_estimate(data, s.get<double>("split", 0.5), spec, opt, s.seed(), options);
    Outcome o;
    o.statistic = r.q_hat;
    o.result = {{"q_hat", r.q_hat}, {"theta_1", r.theta_1.vec()}, {"n1", r.n1}, {"n2", r.n2}};
    return o;
}

inline Outcome from_reports(const std::vector<ValidationReport>& reports) {
    Outcome o;
    json checks = json::array();
    bool all = true;
    for (const auto& r : reports) {
        checks.push_back(detail::to_json(r));
        all = all && r.pass;
    }
    const auto& first = reports.front();
    o.statistic = detail::finite_or_null(first.statistic);
    o.target = detail::finite_or_null(first.target);
    o.se = first.se;
    o.pass = all;
    o.result = {{"checks", checks}};
    return o;
}

inline Outcome cmd_validate(const Settings& s) {
    if (s.args().size() != 1) throw config_error("validate takes exactly one claim id");
    const std::string claim = s.args()[0];
    if (claim == "unbiasedness") {
        const auto cfg = detail::sim_of(s);
        return from_reports({validate_unbiasedness(cfg, detail::theta_of(s, cfg.K()))});
    }
    if (claim == "variance-scaling") {
        VarianceScalingSetup setup;
        for (int K : s.get<std::vector<int>>("K_grid", {2, 4})) {
            json v = s.values();
            v["K"] = K;
            v.erase("c");
            v.erase("theta");
            Settings sk(v, s.command(), s.args());
            SimConfig cfg = detail::sim_of(sk);
            cfg.seed = stream_seed(s.seed(), static_cast<std::uint64_t>(K));
            setup.configs.push_back(cfg);
            setup.thetas.push_back(ThetaVector::uniform(K, 0.5));
        }
        setup.ns = s.get<std::vector<std::size_t>>("n_grid", {250, 500, 1000, 2000});
        setup.replicates = s.get<std::size_t>("replicates", 5000);
        return from_reports(validate_variance_scaling(setup));
    }
    if (claim == "adaptive-bias") {
        const auto cfg = detail::sim_of(s);
        return from_reports(validate_adaptive_bias(cfg, detail::theta_of(s, cfg.K())));
    }
    if (claim == "consistency") {
        ConsistencySetup setup;
        const int K = detail::factors(s);
        setup.table = detail::table_of(s, K);
        setup.family = detail::family_of(s);
        setup.assignment = detail::assignment_of(s, K);
        setup.lambda = s.get<double>("lambda", 0.05);
        setup.ns = s.get<std::vector<std::size_t>>("n_grid", {500, 2000, 8000});
        setup.replicates = s.get<std::size_t>("replicates", 200);
        setup.seed = s.seed();
        setup.cap = s.get<double>("cap", 0.05);
        setup.opt = detail::optimizer_of(s, K, setup.ns.back());
        return from_reports(validate_consistency(setup));
    }
    if (claim == "clt") {
        const auto cfg = detail::sim_of(s);
        return from_reports(validate_clt(cfg, detail::theta_of(s, cfg.K()), s.get<bool>("negative_control", false)));
    }
    if (claim == "curse") {
        const auto r = curse_diagnostic(detail::factors(s), s.get<std::size_t>("n", 100),
                                        s.get<std::size_t>("replicates", 10000), s.seed());
        Outcome o = from_reports({r.report});
        o.result["exact"] = r.exact;
        o.result["approx"] = r.approx;
        o.result["mc_frequency"] = detail::finite_or_null(r.mc_frequency);
        return o;
    }
    if (claim == "variance-correction") {
        const auto cfg = detail::sim_of(s);
        return from_reports({validate_variance_correction(cfg, detail::theta_of(s, cfg.K()), detail::variant_of(s),
                                                          s.get<double>("slack", 0.005))});
    }
    if (claim == "split") {
        SplitSetup setup;
        setup.sim = detail::sim_of(s);
        setup.lambda = s.get<double>("lambda", 0.05);
        setup.split_fraction = s.get<double>("split", 0.5);
        setup.fit_estimator = detail::estimator_of(s.get<std::string>("estimator", "adaptive"));
        setup.options.eval_estimator = detail::estimator_of(s.get<std::string>("eval_estimator", "ipw"));
        setup.options.include_penalty = s.get<bool>("include_penalty", true);
        setup.opt = detail::optimizer_of(s, setup.sim.K(), setup.sim.n);
        return from_reports({validate_split(setup)});
    }
    throw config_error("unknown claim '" + claim +
                       "' (unbiasedness, variance-scaling, adaptive-bias, consistency, clt, curse, "
                       "variance-correction, split)");
}

inline Outcome cmd_mixture(const Settings& s) {
    const auto data = detail::dataset_of(s);
    EmConfig em;
    em.seed = s.seed();
    em.restarts = s.get<int>("em_restarts", 1);
    const auto m = mixture_policy(summarize_cells(data), s.get<int>("k_clusters", 2), em,
                                  s.get<double>("box_eps", kDefaultBoxEps));
    Outcome o;
    o.statistic = m.fit.d[m.top.j_hat];
    o.result = {{"pi", m.fit.pi},
                {"d", m.fit.d},
                {"sigma", m.fit.sigma},
                {"loglik", m.fit.loglik()},
                {"em_iterations", m.fit.iterations},
                {"converged", m.fit.converged},
                {"j_hat", m.top.j_hat},
                {"theta_hat", m.top.theta.vec()},
                {"top_members", m.top.members},
                {"clustered_cells", m.cells.size()}};
    return o;
}

inline Outcome cmd_basis(const Settings& s) {
    const std::size_t p = s.get<std::size_t>("p", 256);
    const int d = s.get<int>("d", 1);
    if (p < 2 || d < 1) throw config_error("basis-select needs p >= 2 and d >= 1");
    const auto family = BasisFamily::indicator(p, d);
    std::optional<RegressionSample> sample;
    if (s.has("input")) {
        std::istringstream in(detail::read_file(s.get<std::string>("input", "")));
        sample.emplace(read_regression(in));
        if (sample->d() != d) throw config_error("input dimension does not match d");
    } else {
        const auto support =
            s.get<std::vector<std::size_t>>("support", {p / 8, p / 2, (7 * p) / 8});
        sample.emplace(planted_regression(family, support, s.get<double>("beta", 3.0),
                                          s.get<double>("noise", 0.1), s.get<std::size_t>("n", 2000), s.seed()));
    }
    CoefficientOptions co;
    co.clamp_at_zero = s.get<bool>("clamp_zero", false);
    const auto c = u_stat_coefficients(*sample, family, co);
    auto opt = detail::optimizer_of(s, family.bits(), sample->n());
    const auto fit = optimize_policy(c, s.get<double>("lambda", 0.01), opt);
    const std::size_t k = s.get<std::size_t>("select_k", 1000);
    if (k < 1) throw config_error("select_k must be >= 1");
    const auto draws = sample_bases(fit.policy, k, s.seed(), s.get<bool>("dedup", false));
    Outcome o;
    o.statistic = fit.result.value;
    o.result = {{"p", family.p()},
                {"padded", family.padded()},
                {"c_hat", c},
                {"theta_hat", fit.policy.theta},
                {"objective", fit.result.value},
                {"draws", draws},
                {"top3", most_frequent(draws, family.p(), 3)}};
    return o;
}

inline void write_human(std::ostream& out, const json& report) {
    for (const auto& [k, v] : report.items()) {
        if (k == "result") continue;
        out << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
    for (const auto& [k, v] : report.at("result").items()) {
        if (k == "checks") {
            for (const auto& c : v)
                out << "check " << c.at("claim").get<std::string>() << ": " << (c.at("pass").get<bool>() ? "PASS" : "FAIL")
                    << " statistic=" << c.at("statistic").dump() << " interval=[" << c.at("lower").dump() << ", "
                    << c.at("upper").dump() << "]\n";
            continue;
        }
        out << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
}

// Entry point. args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"factint: policy learning for factorial experiments"};
    std::string command;
    std::vector<std::string> positional;
    std::string config_path, format_flag, out_path, input_path, estimator, variant, family;
    std::uint64_t seed = 0;
    int K = 0, k_clusters = 0, starts = 0;
    std::size_t n = 0, replicates = 0, p = 0, select_k = 0;
    double lambda = 0.0, split = 0.0, c_box = 0.0;
    std::vector<double> c, sigma, theta, assign_pi;

    app.add_option("command", command, "simulate | estimate | optimize | split-infer | validate | mixture | basis-select")
        ->required();
    app.add_option("args", positional, "claim id for validate");
    auto* o_config = app.add_option("--config", config_path, "JSON config file");
    auto* o_seed = app.add_option("--seed", seed, "master seed");
    auto* o_out = app.add_option("--out", out_path, "output file");
    auto* o_format = app.add_option("--format", format_flag, "human or structured")
                         ->check(CLI::IsMember({"human", "structured"}));
    auto* o_input = app.add_option("--input", input_path, "dataset file (t1..tK,y or x1..xd,y)");
    auto* o_K = app.add_option("--K", K, "number of factors");
    auto* o_n = app.add_option("--n", n, "sample size");
    auto* o_lambda = app.add_option("--lambda", lambda, "penalty weight");
    auto* o_est = app.add_option("--estimator", estimator, "adaptive | ipw | hajek | mean_variance");
    auto* o_var = app.add_option("--variant", variant, "plugin | u1 | u2");
    auto* o_R = app.add_option("--replicates,--R", replicates, "Monte Carlo replicates");
    auto* o_split = app.add_option("--split", split, "fold-1 fraction");
    auto* o_kc = app.add_option("--k-clusters", k_clusters, "mixture components");
    auto* o_p = app.add_option("--p", p, "basis count");
    auto* o_sk = app.add_option("--select-k", select_k, "number of basis draws");
    auto* o_cbox = app.add_option("--C-box", c_box, "high-dimensional box constant C");
    auto* o_family = app.add_option("--family", family, "bernoulli | gaussian");
    auto* o_c = app.add_option("--c", c, "cell means, comma separated")->delimiter(',');
    auto* o_sigma = app.add_option("--sigma", sigma, "cell sds (gaussian)")->delimiter(',');
    auto* o_theta = app.add_option("--theta", theta, "policy parameter")->delimiter(',');
    auto* o_pi = app.add_option("--assign-pi", assign_pi, "product assignment probabilities")->delimiter(',');
    auto* o_starts = app.add_option("--starts", starts, "optimizer starts");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        static const std::set<std::string> commands = {"simulate", "estimate",     "optimize",    "split-infer",
                                                       "validate", "mixture",      "basis-select"};
        if (!commands.count(command)) throw config_error("unknown command '" + command + "'");
        if (command != "validate" && !positional.empty())
            throw config_error("unexpected argument '" + positional.front() + "'");

        json values = json::object();
        if (o_config->count()) {
            json doc;
            try {
                doc = json::parse(detail::read_file(config_path));
            } catch (const json::parse_error& e) {
                throw config_error(std::string("config file is not valid JSON: ") + e.what());
            }
            values = flatten_config(doc);
        }
        auto set = [&](CLI::Option* opt, const char* key, const auto& v) {
            if (opt->count()) values[key] = v;
        };
        set(o_seed, "seed", seed);
        set(o_out, "out", out_path);
        set(o_format, "format", format_flag);
        set(o_input, "input", input_path);
        set(o_K, "K", K);
        set(o_n, "n", n);
        set(o_lambda, "lambda", lambda);
        set(o_est, "estimator", estimator);
        set(o_var, "variant", variant);
        set(o_R, "replicates", replicates);
        set(o_split, "split", split);
        set(o_kc, "k_clusters", k_clusters);
        set(o_p, "p", p);
        set(o_sk, "select_k", select_k);
        set(o_cbox, "C_box", c_box);
        set(o_family, "family", family);
        set(o_c, "c", c);
        set(o_sigma, "sigma", sigma);
        set(o_theta, "theta", theta);
        set(o_pi, "assign_pi", assign_pi);
        set(o_starts, "starts", starts);

        const Settings s(values, command, positional);
        const std::string format = s.get<std::string>("format", "human");
        if (format != "human" && format != "structured") throw config_error("format must be human or structured");

        Outcome o;
        if (command == "simulate") o = cmd_simulate(s);
        else if (command == "estimate") o = cmd_estimate(s);
        else if (command == "optimize") o = cmd_optimize(s);
        else if (command == "split-infer") o = cmd_split(s);
        else if (command == "validate") o = cmd_validate(s);
        else if (command == "mixture") o = cmd_mixture(s);
        else o = cmd_basis(s);

        json report = {{"claim", command == "validate" ? positional[0] : command},
                       {"statistic", o.statistic},
                       {"target", o.target},
                       {"se", o.se},
                       {"pass", o.pass},
                       {"seed", s.seed()},
                       {"config_hash", s.config_hash()},
                       {"result", o.result}};
        json hashed = report;
        if (hashed["result"].contains("checks"))
            for (auto& c : hashed["result"]["checks"]) c.erase("runtime");
        report["result_hash"] = hex64(fnv1a(hashed.dump() + o.payload.value_or("")));
        report["runtime"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::ostringstream text;
        if (format == "structured")
            text << report.dump(2) << '\n';
        else
            write_human(text, report);

        if (o.payload) {
            if (s.has("out")) {
                std::ofstream f(s.get<std::string>("out", ""), std::ios::binary);
                if (!f) throw config_error("cannot write '" + s.get<std::string>("out", "") + "'");
                f << *o.payload;
                out << text.str();
            } else {
                out << *o.payload;
            }
        } else if (s.has("out")) {
            std::ofstream f(s.get<std::string>("out", ""), std::ios::binary);
            if (!f) throw config_error("cannot write '" + s.get<std::string>("out", "") + "'");
            f << text.str();
        } else {
            out << text.str();
        }
        return kOk;
    } catch (const numerical_error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    }
}

}  // namespace factint::cli
