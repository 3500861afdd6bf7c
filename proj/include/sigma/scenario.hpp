#pragma once
// Scenario layer: JSON-described experiments tying a model, an optional
// stopping rule, and a target law into one reproducible verification run.
//
// A scenario document is one JSON object:
//
//   {
//     "name":    "embed_exp",
//     "model":   {"variant": "reflected_bm", "dt": 1e-3, "u_cap": 18.0},
//     "rule":    {"kind": "embedding", "target": {"type": "exponential",
//                                                 "rate": 1.0}},
//     "observable": "X",
//     "law":     {"op": "exponential_survival", "params": {"rate": 1.0}},
//     "n_paths": 20000,
//     "seed":    101,
//     "alpha":   0.01,
//     "slack":   0.005,
//     "outputs": {"survival_csv": "embed_exp_survival.csv",
//                 "summary_json": "embed_exp_summary.json"}
//   }
//
// Functions (model coefficients, barriers, law parameters) are tagged
// objects: {"type":"constant","c":..}, {"type":"power","c":..,"p":..},
// {"type":"exp","c":..,"a":..}, {"type":"affine","a":..,"b":..},
// {"type":"tabulated","x":[..],"y":[..]}, {"type":"tabulated_csv","path":..}
// -- each optionally with a "floor". Parsing is strict: unknown fields,
// unknown operations, and unknown parameter names are config errors naming
// the offending field. The seed is mandatory; nothing defaults to the clock.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "func.hpp"
#include "lawlib.hpp"
#include "measure.hpp"
#include "pathsim.hpp"
#include "rng.hpp"
#include "scale.hpp"
#include "stoprule.hpp"
#include "verify.hpp"

namespace sigma {

using nlohmann::json;

namespace detail {

inline std::string json_type_name(const json& j) { return j.type_name(); }

inline const json& need_field(const json& j, const char* key,
                              const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end())
        throw config_error(where + ": missing required field '" + key + "'");
    return *it;
}

inline double need_number(const json& j, const char* key,
                          const std::string& where) {
    const json& v = need_field(j, key, where);
    if (!v.is_number())
        throw config_error(where + "." + key + ": expected a number, got " +
                           json_type_name(v));
    return v.get<double>();
}

inline std::string need_string(const json& j, const char* key,
                               const std::string& where) {
    const json& v = need_field(j, key, where);
    if (!v.is_string())
        throw config_error(where + "." + key + ": expected a string, got " +
                           json_type_name(v));
    return v.get<std::string>();
}

inline void need_object(const json& j, const std::string& where) {
    if (!j.is_object())
        throw config_error(where + ": expected an object, got " +
                           json_type_name(j));
}

// Strict parsing: any field outside `allowed` is a config error, named.
inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw config_error(where + ": unknown field '" + key + "'");
    }
}

inline std::string join_path(const std::string& dir, const std::string& leaf) {
    if (dir.empty()) return leaf;
    return (std::filesystem::path(dir) / leaf).string();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Function specification
// ---------------------------------------------------------------------------

struct FnSpec {
    json raw;  // validated tagged object; serialization returns it verbatim

    bool operator==(const FnSpec& other) const { return raw == other.raw; }

    static FnSpec parse(const json& j, const std::string& where,
                        const std::string& base_dir) {
        detail::need_object(j, where);
        const std::string type = detail::need_string(j, "type", where);
        FnSpec spec;
        spec.raw = j;
        if (type == "constant") {
            detail::reject_unknown(j, {"type", "c"}, where);
            detail::need_number(j, "c", where);
        } else if (type == "power") {
            detail::reject_unknown(j, {"type", "c", "p", "floor"}, where);
            detail::need_number(j, "c", where);
            detail::need_number(j, "p", where);
        } else if (type == "exp") {
            detail::reject_unknown(j, {"type", "c", "a", "floor"}, where);
            detail::need_number(j, "c", where);
            detail::need_number(j, "a", where);
        } else if (type == "affine") {
            detail::reject_unknown(j, {"type", "a", "b", "floor"}, where);
            detail::need_number(j, "a", where);
            detail::need_number(j, "b", where);
        } else if (type == "tabulated") {
            detail::reject_unknown(j, {"type", "x", "y"}, where);
            const json& xs = detail::need_field(j, "x", where);
            const json& ys = detail::need_field(j, "y", where);
            if (!xs.is_array() || !ys.is_array() || xs.size() != ys.size() ||
                xs.size() < 2)
                throw config_error(where +
                                   ": tabulated needs equal-length x/y arrays "
                                   "with at least two points");
        } else if (type == "tabulated_csv") {
            detail::reject_unknown(j, {"type", "path"}, where);
            const std::string rel = detail::need_string(j, "path", where);
            spec.raw["path"] = detail::join_path(base_dir, rel);
        } else {
            throw config_error(where + ".type: unknown function type '" + type +
                               "'");
        }
        return spec;
    }

    ScalarFn build() const {
        const std::string type = raw.at("type").get<std::string>();
        const double floor = raw.contains("floor")
                                 ? raw.at("floor").get<double>()
                                 : ScalarFn::no_floor();
        if (type == "constant") return ScalarFn::constant(raw.at("c").get<double>());
        if (type == "power")
            return ScalarFn::power(raw.at("c").get<double>(),
                                   raw.at("p").get<double>(), floor);
        if (type == "exp")
            return ScalarFn::exponential(raw.at("c").get<double>(),
                                         raw.at("a").get<double>(), floor);
        if (type == "affine")
            return ScalarFn::affine(raw.at("a").get<double>(),
                                    raw.at("b").get<double>(), floor);
        if (type == "tabulated")
            return ScalarFn::tabulated(raw.at("x").get<std::vector<double>>(),
                                       raw.at("y").get<std::vector<double>>());
        // tabulated_csv: two numeric columns, optional header line.
        std::ifstream in(raw.at("path").get<std::string>());
        if (!in)
            throw config_error("function: cannot open tabulated_csv file '" +
                               raw.at("path").get<std::string>() + "'");
        std::vector<double> xs, ys;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            double x = 0.0, y = 0.0;
            if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) == 2) {
                xs.push_back(x);
                ys.push_back(y);
            } else if (!xs.empty()) {
                throw config_error("function: malformed row in tabulated_csv: " +
                                   line);
            }
        }
        if (xs.size() < 2)
            throw config_error("function: tabulated_csv needs at least two rows");
        return ScalarFn::tabulated(std::move(xs), std::move(ys));
    }
};

// ---------------------------------------------------------------------------
// Measure specification (embedding targets)
// ---------------------------------------------------------------------------

struct MeasureSpec {
    json raw;

    bool operator==(const MeasureSpec& other) const { return raw == other.raw; }

    static MeasureSpec parse(const json& j, const std::string& where,
                             const std::string& base_dir) {
        detail::need_object(j, where);
        const std::string type = detail::need_string(j, "type", where);
        MeasureSpec spec;
        spec.raw = j;
        if (type == "exponential") {
            detail::reject_unknown(j, {"type", "rate"}, where);
            if (!(detail::need_number(j, "rate", where) > 0.0))
                throw config_error(where + ".rate: must be > 0");
        } else if (type == "uniform") {
            detail::reject_unknown(j, {"type", "b"}, where);
            if (!(detail::need_number(j, "b", where) > 0.0))
                throw config_error(where + ".b: must be > 0");
        } else if (type == "tabulated_csv") {
            detail::reject_unknown(j, {"type", "path"}, where);
            const std::string rel = detail::need_string(j, "path", where);
            spec.raw["path"] = detail::join_path(base_dir, rel);
        } else {
            throw config_error(where + ".type: unknown measure type '" + type +
                               "'");
        }
        return spec;
    }

    MeasureOnHalfLine build() const {
        const std::string type = raw.at("type").get<std::string>();
        if (type == "exponential")
            return MeasureOnHalfLine::exponential(raw.at("rate").get<double>());
        if (type == "uniform")
            return MeasureOnHalfLine::uniform(raw.at("b").get<double>());
        return MeasureOnHalfLine::tabulated_from_csv(
            raw.at("path").get<std::string>());
    }
};

// ---------------------------------------------------------------------------
// Model configuration
// ---------------------------------------------------------------------------

struct ModelConfig {
    std::string variant;
    double dt = 1e-3;
    std::optional<double> horizon;
    std::optional<double> u_cap;
    std::optional<double> mu;
    std::optional<double> x0;
    std::optional<FnSpec> drift;
    std::optional<FnSpec> diffusion;
    bool exact_pair_max = false;
    bool exact_ou = false;
    std::optional<double> head_refine;

    bool operator==(const ModelConfig&) const = default;

    static ModelVariant variant_from_name(const std::string& name,
                                          const std::string& where) {
        if (name == "reflected_bm") return ModelVariant::reflected_bm;
        if (name == "sup_minus_martingale") return ModelVariant::sup_minus_martingale;
        if (name == "exponential_martingale") return ModelVariant::exponential_martingale;
        if (name == "bessel_power") return ModelVariant::bessel_power;
        if (name == "age_process") return ModelVariant::age_process;
        if (name == "reflected_sde") return ModelVariant::reflected_sde;
        if (name == "diffusion_with_max") return ModelVariant::diffusion_with_max;
        throw config_error(where + ".variant: unknown model variant '" + name + "'");
    }

    static ModelConfig parse(const json& j, const std::string& where,
                             const std::string& base_dir) {
        detail::need_object(j, where);
        detail::reject_unknown(
            j,
            {"variant", "dt", "horizon", "u_cap", "mu", "x0", "drift",
             "diffusion", "exact_pair_max", "exact_ou", "head_refine"},
            where);
        ModelConfig m;
        m.variant = detail::need_string(j, "variant", where);
        variant_from_name(m.variant, where);  // validate now, build later
        m.dt = detail::need_number(j, "dt", where);
        if (!(m.dt > 0.0)) throw config_error(where + ".dt: must be > 0");
        if (j.contains("horizon")) m.horizon = j.at("horizon").get<double>();
        if (j.contains("u_cap")) m.u_cap = j.at("u_cap").get<double>();
        if (j.contains("mu")) m.mu = j.at("mu").get<double>();
        if (j.contains("x0")) m.x0 = j.at("x0").get<double>();
        if (j.contains("drift"))
            m.drift = FnSpec::parse(j.at("drift"), where + ".drift", base_dir);
        if (j.contains("diffusion"))
            m.diffusion =
                FnSpec::parse(j.at("diffusion"), where + ".diffusion", base_dir);
        if (j.contains("exact_pair_max"))
            m.exact_pair_max = j.at("exact_pair_max").get<bool>();
        if (j.contains("exact_ou")) m.exact_ou = j.at("exact_ou").get<bool>();
        if (j.contains("head_refine"))
            m.head_refine = j.at("head_refine").get<double>();
        return m;
    }

    json to_json() const {
        json j;
        j["variant"] = variant;
        j["dt"] = dt;
        if (horizon) j["horizon"] = *horizon;
        if (u_cap) j["u_cap"] = *u_cap;
        if (mu) j["mu"] = *mu;
        if (x0) j["x0"] = *x0;
        if (drift) j["drift"] = drift->raw;
        if (diffusion) j["diffusion"] = diffusion->raw;
        if (exact_pair_max) j["exact_pair_max"] = true;
        if (exact_ou) j["exact_ou"] = true;
        if (head_refine) j["head_refine"] = *head_refine;
        return j;
    }

    ModelSpec build() const {
        ModelSpec s;
        s.variant = variant_from_name(variant, "model");
        s.dt = dt;
        if (horizon) s.horizon = *horizon;
        if (u_cap) s.u_cap = *u_cap;
        if (mu) s.mu = *mu;
        if (x0) s.x0 = *x0;
        if (drift) s.drift = drift->build();
        if (diffusion) s.diffusion = diffusion->build();
        s.exact_pair_max = exact_pair_max;
        s.exact_ou = exact_ou;
        return s;
    }
};

// ---------------------------------------------------------------------------
// Rule configuration
// ---------------------------------------------------------------------------

struct RuleConfig {
    std::string kind;
    std::optional<FnSpec> fn;          // phi / psi / theta
    std::optional<double> level;       // a / u
    std::optional<MeasureSpec> target; // embedding kinds

    bool operator==(const RuleConfig&) const = default;

    static RuleConfig parse(const json& j, const std::string& where,
                            const std::string& base_dir) {
        detail::need_object(j, where);
        RuleConfig r;
        r.kind = detail::need_string(j, "kind", where);
        if (r.kind == "reciprocal_barrier" || r.kind == "function_barrier" ||
            r.kind == "drawdown") {
            const char* pname = r.kind == "reciprocal_barrier" ? "phi"
                                : r.kind == "function_barrier" ? "psi"
                                                               : "theta";
            detail::reject_unknown(j, {"kind", pname}, where);
            r.fn = FnSpec::parse(detail::need_field(j, pname, where),
                                 where + "." + pname, base_dir);
        } else if (r.kind == "hitting_level") {
            detail::reject_unknown(j, {"kind", "level"}, where);
            r.level = detail::need_number(j, "level", where);
        } else if (r.kind == "inverse_A") {
            detail::reject_unknown(j, {"kind", "u"}, where);
            r.level = detail::need_number(j, "u", where);
        } else if (r.kind == "embedding" || r.kind == "embedding_bar") {
            detail::reject_unknown(j, {"kind", "target"}, where);
            r.target = MeasureSpec::parse(detail::need_field(j, "target", where),
                                          where + ".target", base_dir);
        } else {
            throw config_error(where + ".kind: unknown rule kind '" + r.kind + "'");
        }
        return r;
    }

    json to_json() const {
        json j;
        j["kind"] = kind;
        if (fn) {
            const char* pname = kind == "reciprocal_barrier" ? "phi"
                                : kind == "function_barrier" ? "psi"
                                                             : "theta";
            j[pname] = fn->raw;
        }
        if (level) j[kind == "inverse_A" ? "u" : "level"] = *level;
        if (target) j["target"] = target->raw;
        return j;
    }

    StoppingRule build() const {
        if (kind == "reciprocal_barrier")
            return StoppingRule::reciprocal_barrier(fn->build());
        if (kind == "function_barrier")
            return StoppingRule::function_barrier(fn->build());
        if (kind == "drawdown") return StoppingRule::drawdown(fn->build());
        if (kind == "hitting_level") return StoppingRule::hitting_level(*level);
        if (kind == "inverse_A") return StoppingRule::inverse_A(*level);
        if (kind == "embedding") return embed_rule(target->build());
        return embed_rule_bar(target->build());
    }
};

// ---------------------------------------------------------------------------
// Law configuration and registry
// ---------------------------------------------------------------------------

struct LawConfig {
    std::string op;
    json params;  // validated object of named parameters

    bool operator==(const LawConfig& other) const {
        return op == other.op && params == other.params;
    }

    // name -> (fn-valued parameter names, number-valued parameter names,
    //          optional number-valued parameter names)
    struct OpSignature {
        std::set<std::string> fns;
        std::set<std::string> nums;
        std::set<std::string> optional_nums;
    };

    static const std::map<std::string, OpSignature>& registry() {
        static const std::map<std::string, OpSignature> table = {
            {"law_A_infty_survival", {{"lambda"}, {}, {}}},
            {"law_max_martingale_survival", {{"alpha"}, {}, {}}},
            {"law_A_T_survival", {{"phi"}, {}, {}}},
            {"law_A_T_psi_survival", {{"psi"}, {}, {}}},
            {"lehoczky_survival", {{"drift", "diffusion", "theta"}, {}, {"build_radius"}}},
            {"reflected_sde_lt_survival",
             {{"drift", "diffusion", "theta"}, {}, {"build_radius"}}},
            {"law_spq_survival", {{}, {"p", "q"}, {}}},
            {"law_sphi_survival", {{"phi"}, {}, {}}},
            {"doob_maximal_survival", {{}, {"x0"}, {}}},
            {"exponential_survival", {{}, {"rate"}, {}}},
            {"uniform_survival", {{}, {"b"}, {}}},
        };
        return table;
    }

    static LawConfig parse(const json& j, const std::string& where,
                           const std::string& base_dir) {
        detail::need_object(j, where);
        detail::reject_unknown(j, {"op", "params"}, where);
        LawConfig law;
        law.op = detail::need_string(j, "op", where);
        const auto it = registry().find(law.op);
        if (it == registry().end())
            throw config_error(where + ".op: unknown law operation '" + law.op +
                               "'");
        const OpSignature& sig = it->second;
        const json& params = detail::need_field(j, "params", where);
        detail::need_object(params, where + ".params");
        law.params = json::object();
        for (const auto& [key, value] : params.items()) {
            const std::string pwhere = where + ".params." + key;
            if (sig.fns.count(key)) {
                law.params[key] = FnSpec::parse(value, pwhere, base_dir).raw;
            } else if (sig.nums.count(key) || sig.optional_nums.count(key)) {
                if (!value.is_number())
                    throw config_error(pwhere + ": expected a number, got " +
                                       detail::json_type_name(value));
                law.params[key] = value;
            } else {
                throw config_error(where + ".params: operation '" + law.op +
                                   "' does not take parameter '" + key + "'");
            }
        }
        for (const auto& name : sig.fns)
            if (!law.params.contains(name))
                throw config_error(where + ".params: operation '" + law.op +
                                   "' requires parameter '" + name + "'");
        for (const auto& name : sig.nums)
            if (!law.params.contains(name))
                throw config_error(where + ".params: operation '" + law.op +
                                   "' requires parameter '" + name + "'");
        return law;
    }

    json to_json() const { return json{{"op", op}, {"params", params}}; }

    ScalarFn fn_param(const char* name) const {
        FnSpec spec;
        spec.raw = params.at(name);
        return spec.build();
    }
    double num_param(const char* name) const {
        return params.at(name).get<double>();
    }

    SurvivalFn build() const {
        if (op == "law_A_infty_survival") {
            auto lam = std::make_shared<ConditionalMean>(ConditionalMean{fn_param("lambda")});
            return [lam](double x) { return law_A_infty_survival(*lam, x); };
        }
        if (op == "law_max_martingale_survival") {
            auto alpha = std::make_shared<ScalarFn>(fn_param("alpha"));
            return [alpha](double x) {
                return law_max_martingale_survival(*alpha, x);
            };
        }
        if (op == "law_A_T_survival") {
            auto phi = std::make_shared<BarrierFunction>(BarrierFunction{fn_param("phi")});
            return [phi](double x) { return law_A_T_survival(*phi, x); };
        }
        if (op == "law_A_T_psi_survival") {
            auto psi = std::make_shared<BarrierFunction>(BarrierFunction{fn_param("psi")});
            return [psi](double x) { return law_A_T_psi_survival(*psi, x); };
        }
        if (op == "lehoczky_survival" || op == "reflected_sde_lt_survival") {
            const double radius = params.contains("build_radius")
                                      ? num_param("build_radius")
                                      : 8.0;
            auto sf = std::make_shared<ScaleFunction>(
                fn_param("drift"), fn_param("diffusion"), radius);
            auto theta = std::make_shared<BarrierFunction>(BarrierFunction{fn_param("theta")});
            if (op == "lehoczky_survival")
                return [sf, theta](double x) {
                    return lehoczky_survival(*sf, *theta, x);
                };
            return [sf, theta](double x) {
                return reflected_sde_LT_survival(*sf, *theta, x);
            };
        }
        if (op == "law_spq_survival") {
            const double p = num_param("p"), q = num_param("q");
            return [p, q](double x) { return law_spq_survival(p, q, x); };
        }
        if (op == "law_sphi_survival") {
            auto phi = std::make_shared<BarrierFunction>(BarrierFunction{fn_param("phi")});
            return [phi](double x) { return law_sphi_survival(*phi, x); };
        }
        if (op == "doob_maximal_survival") {
            const double x0 = num_param("x0");
            return [x0](double a) { return doob_maximal_survival(x0, a); };
        }
        if (op == "exponential_survival") {
            const double rate = num_param("rate");
            if (!(rate > 0.0))
                throw config_error("law.params.rate: must be > 0");
            return [rate](double x) {
                return x <= 0.0 ? 1.0 : std::exp(-rate * x);
            };
        }
        // uniform_survival
        const double b = num_param("b");
        if (!(b > 0.0)) throw config_error("law.params.b: must be > 0");
        return [b](double x) {
            if (x <= 0.0) return 1.0;
            return x >= b ? 0.0 : 1.0 - x / b;
        };
    }
};

// Tabulate one law operation on a grid. Survival operations produce one
// `(x, value)` row per grid point; the value operation `spq_constant`
// ignores the grid and produces the single row `(0, c_{p,q})`.
inline std::vector<std::pair<double, double>> laws_table(
    const std::string& op, const json& params, const std::vector<double>& grid,
    const std::string& base_dir = "") {
    if (op == "spq_constant") {
        json normalized = json::object();
        for (const auto& [key, value] : params.items()) {
            if (key != "p" && key != "q")
                throw config_error(
                    "law.params: operation 'spq_constant' does not take "
                    "parameter '" +
                    key + "'");
            if (!value.is_number())
                throw config_error("law.params." + key + ": expected a number");
            normalized[key] = value;
        }
        if (!normalized.contains("p") || !normalized.contains("q"))
            throw config_error(
                "law.params: operation 'spq_constant' requires 'p' and 'q'");
        return {{0.0, spq_constant(normalized.at("p").get<double>(),
                                   normalized.at("q").get<double>())}};
    }
    LawConfig law =
        LawConfig::parse(json{{"op", op}, {"params", params}}, "law", base_dir);
    const SurvivalFn fn = law.build();
    std::vector<std::pair<double, double>> rows;
    rows.reserve(grid.size());
    for (double x : grid) rows.emplace_back(x, fn(x));
    return rows;
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct OutputSpec {
    std::optional<std::string> survival_csv;
    std::optional<std::string> summary_json;
    std::optional<std::string> path_dump;

    bool operator==(const OutputSpec&) const = default;

    static OutputSpec parse(const json& j, const std::string& where) {
        detail::need_object(j, where);
        detail::reject_unknown(j, {"survival_csv", "summary_json", "path_dump"},
                               where);
        OutputSpec o;
        if (j.contains("survival_csv"))
            o.survival_csv = j.at("survival_csv").get<std::string>();
        if (j.contains("summary_json"))
            o.summary_json = j.at("summary_json").get<std::string>();
        if (j.contains("path_dump"))
            o.path_dump = j.at("path_dump").get<std::string>();
        return o;
    }

    json to_json() const {
        json j = json::object();
        if (survival_csv) j["survival_csv"] = *survival_csv;
        if (summary_json) j["summary_json"] = *summary_json;
        if (path_dump) j["path_dump"] = *path_dump;
        return j;
    }
};

struct Scenario {
    std::string name;
    ModelConfig model;
    std::optional<RuleConfig> rule;
    std::string observable = "X";  // which stopped coordinate feeds the sample
    LawConfig law;
    std::uint64_t n_paths = 0;
    std::uint64_t seed = 0;
    double alpha = 0.01;
    double slack = 0.0;
    bool allow_excess_censoring = false;
    OutputSpec outputs;

    bool operator==(const Scenario&) const = default;

    static Scenario parse(const json& j, const std::string& base_dir = "") {
        detail::need_object(j, "scenario");
        detail::reject_unknown(
            j,
            {"name", "model", "rule", "observable", "law", "n_paths", "seed",
             "alpha", "slack", "allow_excess_censoring", "outputs"},
            "scenario");
        Scenario sc;
        sc.name = detail::need_string(j, "name", "scenario");
        if (sc.name.empty())
            throw config_error("scenario.name: must be nonempty");
        sc.model = ModelConfig::parse(detail::need_field(j, "model", "scenario"),
                                      "scenario.model", base_dir);
        if (j.contains("rule") && !j.at("rule").is_null())
            sc.rule = RuleConfig::parse(j.at("rule"), "scenario.rule", base_dir);
        if (j.contains("observable")) {
            sc.observable = j.at("observable").get<std::string>();
            if (sc.observable != "X" && sc.observable != "A" &&
                sc.observable != "companion")
                throw config_error(
                    "scenario.observable: must be 'X', 'A', or 'companion'");
        }
        sc.law = LawConfig::parse(detail::need_field(j, "law", "scenario"),
                                  "scenario.law", base_dir);
        {
            const json& np = detail::need_field(j, "n_paths", "scenario");
            if (!np.is_number_unsigned() || np.get<std::uint64_t>() == 0)
                throw config_error("scenario.n_paths: must be a positive integer");
            sc.n_paths = np.get<std::uint64_t>();
        }
        {
            // The seed is mandatory: reproducibility is part of the contract,
            // so nothing here ever falls back to the clock.
            const json& sd = detail::need_field(j, "seed", "scenario");
            if (!sd.is_number_unsigned())
                throw config_error("scenario.seed: must be a nonnegative integer");
            sc.seed = sd.get<std::uint64_t>();
        }
        sc.alpha = detail::need_number(j, "alpha", "scenario");
        if (!(sc.alpha > 0.0 && sc.alpha < 1.0))
            throw config_error("scenario.alpha: must lie in (0,1)");
        if (j.contains("slack")) {
            sc.slack = j.at("slack").get<double>();
            if (!(sc.slack >= 0.0))
                throw config_error("scenario.slack: must be >= 0");
        }
        if (j.contains("allow_excess_censoring"))
            sc.allow_excess_censoring = j.at("allow_excess_censoring").get<bool>();
        if (j.contains("outputs"))
            sc.outputs = OutputSpec::parse(j.at("outputs"), "scenario.outputs");

        // A scenario must terminate: either a horizon bounds the run, or a
        // rule is in play and the u_cap bounds how long it may refuse to fire.
        if (!sc.model.horizon && !sc.model.u_cap)
            throw config_error(
                "scenario.model: either horizon or u_cap must bound the run");
        if (!sc.rule && !sc.model.horizon)
            throw config_error(
                "scenario: a rule-free scenario needs model.horizon");
        return sc;
    }

    json to_json() const {
        json j;
        j["name"] = name;
        j["model"] = model.to_json();
        if (rule) j["rule"] = rule->to_json();
        j["observable"] = observable;
        j["law"] = law.to_json();
        j["n_paths"] = n_paths;
        j["seed"] = seed;
        j["alpha"] = alpha;
        j["slack"] = slack;
        if (allow_excess_censoring) j["allow_excess_censoring"] = true;
        j["outputs"] = outputs.to_json();
        return j;
    }
};

inline Scenario parse_scenario_text(const std::string& text,
                                    const std::string& base_dir = "") {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("scenario: invalid JSON: ") + e.what());
    }
    return Scenario::parse(j, base_dir);
}

inline Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("scenario: cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(),
                               std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Scenario execution
// ---------------------------------------------------------------------------

struct ScenarioRunResult {
    SurvivalComparison comparison;
    EmpiricalSample sample;
    bool pass = false;
};

namespace detail {

// Streaming executor for one path: advance until the rule fires, the horizon
// is exhausted, or the A-cap is exceeded. Checking the rule every step keeps
// the cost proportional to the stopping time instead of the cap.
struct StreamOutcome {
    bool fired = false;
    double T = 0.0, X = 0.0, A = 0.0, companion = 0.0;
};

template <typename OnPoint>
StreamOutcome stream_path(const ModelSpec& spec, const StoppingRule* rule,
                          RngStream stream, OnPoint&& on_point) {
    static constexpr std::uint64_t kMaxSteps = 50'000'000;
    const bool has_h = spec.horizon >= 0.0;
    const bool has_u = spec.u_cap > 0.0;
    const std::uint64_t n_steps =
        has_h ? static_cast<std::uint64_t>(std::llround(spec.horizon / spec.dt))
              : kMaxSteps;
    Xoshiro256pp rng(stream);
    auto st = make_stepper(spec);
    StreamOutcome out;
    for (std::uint64_t k = 0;; ++k) {
        on_point(st->t, st->X, st->A);
        if (rule && rule_fires(*rule, st->X, st->A)) {
            out.fired = true;
            break;
        }
        if (has_h && k >= n_steps) break;
        if (has_u && st->A > spec.u_cap) break;
        if (k >= kMaxSteps)
            throw unstable_step(
                "scenario: path exceeded the hard step cap without stopping");
        st->advance(rng);
    }
    out.T = st->t;
    out.X = st->X;
    out.A = st->A;
    out.companion = st->companion;
    return out;
}

inline void write_survival_csv(const std::string& path,
                               const SurvivalComparison& c) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw config_error("output: cannot open '" + path + "' for writing");
    std::fprintf(f, "x,empirical,theoretical,abs_diff\n");
    for (std::size_t i = 0; i < c.grid.size(); ++i)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", c.grid[i], c.empirical[i],
                     c.theoretical[i],
                     std::fabs(c.empirical[i] - c.theoretical[i]));
    std::fclose(f);
}

inline void write_summary_json(const std::string& path, const std::string& name,
                               const SurvivalComparison& c) {
    json j;
    j["scenario"] = name;
    j["n"] = c.n;
    j["censored"] = c.censored;
    j["ks"] = c.ks;
    j["dkw_eps"] = c.dkw_eps;
    j["slack"] = c.slack;
    j["pass"] = c.pass;
    std::ofstream out(path);
    if (!out) throw config_error("output: cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

}  // namespace detail

// Run a scenario end to end: simulate, compare, and (when requested) write
// the survival CSV, the summary JSON, and a dump of the first few paths into
// `out_dir`. File emission is skipped for output fields left unset.
inline ScenarioRunResult run_scenario(const Scenario& sc,
                                      const std::string& out_dir = ".",
                                      std::size_t dump_paths = 10) {
    const ModelSpec spec = sc.model.build();
    std::optional<StoppingRule> rule;
    if (sc.rule) rule = sc.rule->build();
    const SurvivalFn law = sc.law.build();

    std::FILE* dump = nullptr;
    if (sc.outputs.path_dump) {
        std::filesystem::create_directories(out_dir);
        const std::string path = detail::join_path(out_dir, *sc.outputs.path_dump);
        dump = std::fopen(path.c_str(), "w");
        if (!dump)
            throw config_error("output: cannot open '" + path + "' for writing");
        std::fprintf(dump, "path,t,x,a\n");
    }

    EmpiricalSample sample;
    sample.n = sc.n_paths;
    sample.values.reserve(sc.n_paths);
    for (std::uint64_t i = 0; i < sc.n_paths; ++i) {
        const bool dump_this = dump && i < dump_paths;
        const auto outcome = detail::stream_path(
            spec, rule ? &*rule : nullptr, RngStream{sc.seed, i},
            [&](double t, double x, double a) {
                if (dump_this)
                    std::fprintf(dump, "%llu,%.17g,%.17g,%.17g\n",
                                 static_cast<unsigned long long>(i), t, x, a);
            });
        const bool observed = sc.rule ? outcome.fired : true;
        if (!observed) {
            ++sample.censored;
            continue;
        }
        sample.values.push_back(sc.observable == "X"   ? outcome.X
                                : sc.observable == "A" ? outcome.A
                                                       : outcome.companion);
    }
    if (dump) std::fclose(dump);

    ScenarioRunResult result;
    result.comparison = ks_against(sample, law, sc.alpha, sc.slack,
                                   sc.allow_excess_censoring);
    result.sample = std::move(sample);
    result.pass = result.comparison.pass;

    if (sc.outputs.survival_csv) {
        std::filesystem::create_directories(out_dir);
        detail::write_survival_csv(
            detail::join_path(out_dir, *sc.outputs.survival_csv),
            result.comparison);
    }
    if (sc.outputs.summary_json) {
        std::filesystem::create_directories(out_dir);
        detail::write_summary_json(
            detail::join_path(out_dir, *sc.outputs.summary_json), sc.name,
            result.comparison);
    }
    return result;
}

}  // namespace sigma
