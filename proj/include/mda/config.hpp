#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mda/conformal.hpp"
#include "mda/impute.hpp"
#include "mda/missingness.hpp"

namespace mda {

enum class Scenario { GlmMcar, GlmMarginalMechanism, YDepM };
enum class Conditioning { Size, Pattern };

std::string to_string(Scenario s);
std::string to_string(Conditioning c);

struct RegressorSpec {
    std::string kind = "mlp";  // mlp | linear
    std::vector<int> hidden{64, 64};
    int epochs = 1000;
    double step = 0.05;
    double momentum = 0.0;  // heavy-ball coefficient; 0 is plain gradient descent
    std::uint64_t seed = 0;  // mixed into the per-repetition init stream
    bool concat_mask = true;
};

enum class MethodKind { Qr, Cqr, MdaExact, MdaNested, MdaNestedStar };

struct MethodSpec {
    std::string id;  // as written in configs and CSV files
    MethodKind kind = MethodKind::Cqr;
    SubsamplingStrategy strategy = FullStrategy{};  // MdaNestedStar only
};

// Parses qr, cqr, mda_exact, mda_nested, mda_nested_star(k),
// mda_nested_star(full|exact|mixture), mda_nested_star(superset=0101...).
MethodSpec parse_method(const std::string& id, std::size_t d);

struct ExperimentConfig {
    Scenario scenario = Scenario::GlmMcar;
    std::size_t d = 10;
    std::size_t n_train = 500;
    std::size_t n_cal = 250;
    std::size_t n_test_marginal = 2000;
    std::size_t n_per_pattern = 100;
    Conditioning conditioning = Conditioning::Size;
    double alpha = 0.1;
    double phi = 0.8;
    Eigen::VectorXd beta;
    double noise_var = 1.0;
    MechanismSpec mechanism;
    std::uint64_t mechanism_setting = 1;  // seed_offset: picks default logistic weights
    ImputerOptions imputer;
    RegressorSpec regressor;
    std::vector<MethodSpec> methods;
    std::size_t reps = 30;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::size_t sampling_pool = 50000;  // pool for mechanism-aware conditional test sets

    // Throws ConfigError on inconsistent or out-of-range fields.
    void validate() const;
};

// Default regression coefficients for d = 10.
Eigen::VectorXd default_beta();

// Defaults for the MCAR GLM experiment: d=10, p=0.2, phi=0.8.
ExperimentConfig default_config();

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& yaml_text);

}  // namespace mda
