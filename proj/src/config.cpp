#include "liquidtop/config.hpp"

#include "liquidtop/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <string>

namespace liquidtop {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
        }
    }
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing '" + key + "' in " + where);
    if (!obj[key].is_number()) throw ConfigError("'" + key + "' in " + where + " must be a number");
    return obj[key].get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError("'" + key + "' must be a number");
    return obj[key].get<double>();
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");
    reject_unknown_keys(j, {"params", "basis", "integrate", "seed", "threshold", "stability",
                            "instability", "converge", "simulate"},
                        "config root");

    RunConfig cfg;

    if (!j.contains("params") || !j["params"].is_object()) {
        throw ConfigError("config needs a 'params' object");
    }
    const json& jp = j["params"];
    reject_unknown_keys(jp, {"A", "B", "C", "beta2", "rho", "nu", "lambda"}, "params");
    RawParams raw;
    raw.A = require_number(jp, "A", "params");
    raw.B = require_number(jp, "B", "params");
    raw.C = require_number(jp, "C", "params");
    raw.beta2 = require_number(jp, "beta2", "params");
    raw.rho = require_number(jp, "rho", "params");
    raw.nu = require_number(jp, "nu", "params");
    raw.lambda = require_number(jp, "lambda", "params");

    if (!j.contains("basis") || !j["basis"].is_object()) {
        throw ConfigError("config needs a 'basis' object");
    }
    const json& jb = j["basis"];
    reject_unknown_keys(jb, {"h", "degree", "table_file"}, "basis");
    raw.cavity_scale = require_number(jb, "h", "basis");
    if (!jb.contains("degree") || !jb["degree"].is_number_integer()) {
        throw ConfigError("basis.degree must be an integer");
    }
    cfg.degree = jb["degree"].get<int>();
    if (cfg.degree < 0) throw ConfigError("basis.degree must be >= 0");
    if (jb.contains("table_file")) {
        if (!jb["table_file"].is_string()) throw ConfigError("basis.table_file must be a string");
        cfg.table_file = jb["table_file"].get<std::string>();
    }

    try {
        cfg.params = make_params(raw);
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid params: ") + e.what());
    }

    if (j.contains("integrate")) {
        const json& ji = j["integrate"];
        reject_unknown_keys(ji, {"horizon", "rtol", "atol", "samples", "alpha"}, "integrate");
        cfg.horizon = number_or(ji, "horizon", cfg.horizon);
        cfg.rtol = number_or(ji, "rtol", cfg.rtol);
        cfg.atol = number_or(ji, "atol", cfg.atol);
        cfg.alpha = number_or(ji, "alpha", cfg.alpha);
        cfg.samples = static_cast<int>(number_or(ji, "samples", cfg.samples));
    }

    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
            throw ConfigError("seed must be an integer");
        }
        cfg.seed = j["seed"].get<std::uint64_t>();
    }

    if (j.contains("threshold")) {
        const json& jt = j["threshold"];
        reject_unknown_keys(jt, {"lambda2_min", "lambda2_max", "rel_bracket"}, "threshold");
        cfg.threshold_lambda2_min = require_number(jt, "lambda2_min", "threshold");
        cfg.threshold_lambda2_max = require_number(jt, "lambda2_max", "threshold");
        cfg.threshold_rel_bracket = number_or(jt, "rel_bracket", cfg.threshold_rel_bracket);
    }

    if (j.contains("stability")) {
        const json& js = j["stability"];
        reject_unknown_keys(js, {"deltas", "sup_factor", "rate_factor", "terminal_tol",
                                 "z_fraction"},
                            "stability");
        StabilityRunSettings s;
        if (js.contains("deltas")) {
            if (!js["deltas"].is_array()) throw ConfigError("stability.deltas must be an array");
            s.deltas = js["deltas"].get<std::vector<double>>();
        }
        s.sup_factor = number_or(js, "sup_factor", s.sup_factor);
        s.rate_factor = number_or(js, "rate_factor", s.rate_factor);
        s.terminal_tol = number_or(js, "terminal_tol", s.terminal_tol);
        s.z_fraction = number_or(js, "z_fraction", s.z_fraction);
        s.alpha = cfg.alpha;
        s.horizon = cfg.horizon;
        s.rtol = cfg.rtol;
        s.atol = cfg.atol;
        s.samples = cfg.samples;
        s.seed = cfg.seed;
        cfg.stability = s;
    }

    if (j.contains("instability")) {
        const json& js = j["instability"];
        reject_unknown_keys(js, {"deltas", "escape_level", "scaling_slack"}, "instability");
        InstabilityRunSettings s;
        if (js.contains("deltas")) {
            if (!js["deltas"].is_array()) throw ConfigError("instability.deltas must be an array");
            s.deltas = js["deltas"].get<std::vector<double>>();
        }
        s.escape_level = number_or(js, "escape_level", s.escape_level);
        s.scaling_slack = number_or(js, "scaling_slack", s.scaling_slack);
        s.alpha = cfg.alpha;
        s.horizon = cfg.horizon;
        s.rtol = cfg.rtol;
        s.atol = cfg.atol;
        s.samples = cfg.samples;
        cfg.instability = s;
    }

    if (j.contains("converge")) {
        const json& jc = j["converge"];
        reject_unknown_keys(jc, {"degrees"}, "converge");
        if (!jc.contains("degrees") || !jc["degrees"].is_array()) {
            throw ConfigError("converge.degrees must be an array of integers");
        }
        cfg.converge_degrees = jc["degrees"].get<std::vector<int>>();
    }

    if (j.contains("simulate")) {
        const json& js = j["simulate"];
        reject_unknown_keys(js, {"u0_kind", "magnitude", "z_fraction", "linear_only"}, "simulate");
        SimulateSettings s;
        if (js.contains("u0_kind")) {
            if (!js["u0_kind"].is_string()) throw ConfigError("simulate.u0_kind must be a string");
            s.u0_kind = js["u0_kind"].get<std::string>();
            if (s.u0_kind != "zero" && s.u0_kind != "kernel" && s.u0_kind != "random" &&
                s.u0_kind != "eigenvector") {
                throw ConfigError("simulate.u0_kind must be zero|kernel|random|eigenvector");
            }
        }
        s.magnitude = number_or(js, "magnitude", s.magnitude);
        s.z_fraction = number_or(js, "z_fraction", s.z_fraction);
        if (js.contains("linear_only")) {
            if (!js["linear_only"].is_boolean()) {
                throw ConfigError("simulate.linear_only must be a boolean");
            }
            s.linear_only = js["linear_only"].get<bool>();
        }
        s.horizon = cfg.horizon;
        cfg.simulate = s;
    }

    return cfg;
}

}  // namespace liquidtop
