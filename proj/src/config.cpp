#include "mda/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace mda {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::GlmMcar: return "glm-mcar";
        case Scenario::GlmMarginalMechanism: return "glm-marginal-mechanism";
        case Scenario::YDepM: return "y-dep-m";
    }
    return "unknown";
}

std::string to_string(Conditioning c) { return c == Conditioning::Size ? "size" : "pattern"; }

MethodSpec parse_method(const std::string& id, std::size_t d) {
    MethodSpec m;
    m.id = id;
    if (id == "qr") {
        m.kind = MethodKind::Qr;
    } else if (id == "cqr") {
        m.kind = MethodKind::Cqr;
    } else if (id == "mda_exact") {
        m.kind = MethodKind::MdaExact;
    } else if (id == "mda_nested") {
        m.kind = MethodKind::MdaNested;
    } else {
        const std::string head = "mda_nested_star(";
        if (id.rfind(head, 0) != 0 || id.back() != ')') throw ConfigError("unknown method '" + id + "'");
        const std::string arg = id.substr(head.size(), id.size() - head.size() - 1);
        m.kind = MethodKind::MdaNestedStar;
        if (arg == "full") {
            m.strategy = FullStrategy{};
        } else if (arg == "exact") {
            m.strategy = ExactStrategy{};
        } else if (arg == "mixture") {
            m.strategy = MixtureStrategy{};
        } else if (arg.rfind("superset=", 0) == 0) {
            const Mask sup = Mask::parse(arg.substr(9));
            if (sup.dim() != d) throw ConfigError("superset mask in '" + id + "' has the wrong length");
            m.strategy = SupersetOf{sup};
        } else if (!arg.empty() && std::all_of(arg.begin(), arg.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            m.strategy = BoundedExtra{static_cast<std::size_t>(std::stoul(arg))};
        } else {
            throw ConfigError("unknown subsampling argument in '" + id + "'");
        }
    }
    return m;
}

Eigen::VectorXd default_beta() {
    Eigen::VectorXd b(10);
    b << 1, 2, -1, 3, -0.5, -1, 0.3, 1.7, 0.4, -0.3;
    return b;
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.beta = default_beta();
    c.mechanism.kind = Mcar{0.2};
    for (const char* id : {"cqr", "mda_exact", "mda_nested", "mda_nested_star(2)"}) c.methods.push_back(parse_method(id, c.d));
    return c;
}

void ExperimentConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (reps < 1) throw ConfigError("reps must be at least 1");
    if (d < 1 || d > Mask::kMaxDim) throw ConfigError("d must lie in [1, 64]");
    if (static_cast<std::size_t>(beta.size()) != d) throw ConfigError("beta must have d entries");
    if (!(phi >= 0.0 && phi < 1.0)) throw ConfigError("phi must lie in [0,1)");
    if (!(noise_var > 0.0)) throw ConfigError("noise_var must be positive");
    if (n_train < 1 || n_cal < 1) throw ConfigError("n_train and n_cal must be positive");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (scenario == Scenario::YDepM && d != 3) throw ConfigError("the y-dep-m scenario needs d = 3");
    if (scenario == Scenario::GlmMcar && !std::holds_alternative<Mcar>(mechanism.kind)) {
        throw ConfigError("glm-mcar needs an mcar mechanism");
    }
    if (scenario == Scenario::YDepM && !std::holds_alternative<Mcar>(mechanism.kind)) {
        throw ConfigError("y-dep-m draws independent Bernoulli masks; use an mcar mechanism");
    }
    if (conditioning == Conditioning::Pattern) {
        const std::size_t free = mechanism.missing_cols.empty() ? d : mechanism.missing_cols.size();
        if (free > 16) throw ConfigError("pattern conditioning over more than 2^16 patterns");
    }
    if (regressor.kind != "mlp" && regressor.kind != "linear") throw ConfigError("regressor.kind must be mlp or linear");
    if (methods.empty()) throw ConfigError("no methods configured");
}

namespace {

template <class T>
T get_or(const YAML::Node& node, const char* key, T fallback) {
    const YAML::Node v = node[key];
    if (!v) return fallback;
    try {
        return v.as<T>();
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

std::vector<std::size_t> one_based_cols(const YAML::Node& node, std::size_t d) {
    std::vector<std::size_t> out;
    for (const auto& v : node) {
        const long c = v.as<long>();
        if (c < 1 || static_cast<std::size_t>(c) > d) throw ConfigError("column index out of 1..d");
        out.push_back(static_cast<std::size_t>(c - 1));
    }
    return out;
}

void check_keys(const YAML::Node& node, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("cannot parse config: ") + e.what());
    }
    if (!root.IsMap()) throw ConfigError("config must be a mapping");
    check_keys(root,
               {"scenario", "d", "n_train", "n_cal", "n_test_marginal", "n_per_pattern", "conditioning", "alpha", "phi",
                "beta", "noise_var", "mechanism", "imputer", "regressor", "methods", "reps", "seed", "workers",
                "sampling_pool"},
               "config");

    ExperimentConfig c = default_config();
    const auto scen = get_or<std::string>(root, "scenario", "glm-mcar");
    if (scen == "glm-mcar") {
        c.scenario = Scenario::GlmMcar;
    } else if (scen == "glm-marginal-mechanism") {
        c.scenario = Scenario::GlmMarginalMechanism;
    } else if (scen == "y-dep-m") {
        c.scenario = Scenario::YDepM;
        c.d = 3;
        c.conditioning = Conditioning::Pattern;
    } else {
        throw ConfigError("unknown scenario '" + scen + "'");
    }
    c.d = get_or<std::size_t>(root, "d", c.d);
    c.n_train = get_or<std::size_t>(root, "n_train", c.n_train);
    c.n_cal = get_or<std::size_t>(root, "n_cal", c.n_cal);
    c.n_test_marginal = get_or<std::size_t>(root, "n_test_marginal", c.n_test_marginal);
    c.n_per_pattern = get_or<std::size_t>(root, "n_per_pattern", c.n_per_pattern);
    const auto cond = get_or<std::string>(root, "conditioning", to_string(c.conditioning));
    if (cond == "size") {
        c.conditioning = Conditioning::Size;
    } else if (cond == "pattern") {
        c.conditioning = Conditioning::Pattern;
    } else {
        throw ConfigError("conditioning must be size or pattern");
    }
    c.alpha = get_or<double>(root, "alpha", c.alpha);
    c.phi = get_or<double>(root, "phi", c.phi);
    c.noise_var = get_or<double>(root, "noise_var", c.noise_var);
    if (root["beta"]) {
        const auto b = root["beta"].as<std::vector<double>>();
        c.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    } else if (c.scenario == Scenario::YDepM) {
        c.beta = Eigen::VectorXd::Zero(3);  // unused: the response has its own formula
    } else if (c.d != 10) {
        throw ConfigError("beta is required when d != 10");
    }

    c.mechanism = MechanismSpec{};
    double target = 0.2;
    if (const YAML::Node mech = root["mechanism"]) {
        check_keys(mech, {"kind", "q", "target_prop", "missing_cols", "observed_cols", "seed_offset", "weights"},
                   "mechanism");
        target = get_or<double>(mech, "target_prop", target);
        c.mechanism_setting = get_or<std::uint64_t>(mech, "seed_offset", c.mechanism_setting);
        if (mech["missing_cols"]) c.mechanism.missing_cols = one_based_cols(mech["missing_cols"], c.d);
        if (mech["observed_cols"]) c.mechanism.observed_cols = one_based_cols(mech["observed_cols"], c.d);
        const auto kind = get_or<std::string>(mech, "kind", "mcar");
        std::vector<double> weights;
        if (mech["weights"]) weights = mech["weights"].as<std::vector<double>>();
        if (kind == "mcar") {
            c.mechanism.kind = Mcar{target};
        } else if (kind == "mar_logistic") {
            if (c.mechanism.observed_cols.empty()) {
                // Observed inputs default to every column that cannot be missing.
                for (std::size_t j = 0; j < c.d; ++j)
                    if (std::find(c.mechanism.missing_cols.begin(), c.mechanism.missing_cols.end(), j) ==
                        c.mechanism.missing_cols.end())
                        c.mechanism.observed_cols.push_back(j);
            }
            if (weights.empty()) weights = default_logistic_weights(c.mechanism.observed_cols.size(), c.mechanism_setting);
            c.mechanism.kind = MarLogistic{weights, target};
        } else if (kind == "mnar_self_masked") {
            const std::size_t count = c.mechanism.missing_cols.empty() ? c.d : c.mechanism.missing_cols.size();
            if (weights.empty()) weights = default_logistic_weights(count, c.mechanism_setting);
            c.mechanism.kind = MnarSelfMasked{weights, target};
        } else if (kind == "mnar_quantile") {
            c.mechanism.kind = MnarQuantile{get_or<double>(mech, "q", 0.8), target};
        } else {
            throw ConfigError("unknown mechanism kind '" + kind + "'");
        }
    } else {
        c.mechanism.kind = Mcar{target};
    }

    if (const YAML::Node imp = root["imputer"]) {
        check_keys(imp, {"kind", "lambda", "iters", "constants"}, "imputer");
        c.imputer.kind = parse_imputer_kind(get_or<std::string>(imp, "kind", to_string(c.imputer.kind)));
        c.imputer.lambda = get_or<double>(imp, "lambda", c.imputer.lambda);
        c.imputer.iters = get_or<int>(imp, "iters", c.imputer.iters);
        if (imp["constants"]) c.imputer.constants = imp["constants"].as<std::vector<double>>();
    }

    if (const YAML::Node reg = root["regressor"]) {
        check_keys(reg, {"kind", "hidden", "epochs", "step", "momentum", "seed", "concat_mask"}, "regressor");
        c.regressor.kind = get_or<std::string>(reg, "kind", c.regressor.kind);
        if (reg["hidden"]) c.regressor.hidden = reg["hidden"].as<std::vector<int>>();
        c.regressor.epochs = get_or<int>(reg, "epochs", c.regressor.epochs);
        c.regressor.step = get_or<double>(reg, "step", c.regressor.step);
        c.regressor.momentum = get_or<double>(reg, "momentum", c.regressor.momentum);
        c.regressor.seed = get_or<std::uint64_t>(reg, "seed", c.regressor.seed);
        c.regressor.concat_mask = get_or<bool>(reg, "concat_mask", c.regressor.concat_mask);
    }

    if (root["methods"]) {
        c.methods.clear();
        for (const auto& m : root["methods"]) c.methods.push_back(parse_method(m.as<std::string>(), c.d));
    }
    c.reps = get_or<std::size_t>(root, "reps", c.reps);
    c.seed = get_or<std::uint64_t>(root, "seed", c.seed);
    c.workers = get_or<std::size_t>(root, "workers", c.workers);
    c.sampling_pool = get_or<std::size_t>(root, "sampling_pool", c.sampling_pool);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace mda
