#pragma once

// Mask generators: MCAR, MAR logistic, MNAR self-masked logistic and MNAR
// upper-quantile censorship. Every mechanism draws the bits of a row
// independently given the row's values, so each exposes per-entry
// probabilities as well as samplers.

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mda/core.hpp"

namespace mda {

struct Mcar {
    double p = 0.2;
};

// P(missing) = sigmoid(w . x[observed_cols] + b), one intercept shared by all
// missing_cols.
struct MarLogistic {
    std::vector<double> weights;
    double target_prop = 0.2;
};

// P(x_j missing) = sigmoid(w_j x_j + b_j), one weight per missing column.
struct MnarSelfMasked {
    std::vector<double> weights;
    double target_prop = 0.2;
};

// Entries above the empirical q-quantile of their column are masked with a
// calibrated probability; entries at or below the cut never are.
struct MnarQuantile {
    double q = 0.8;
    double target_prop = 0.2;
};

using MechanismKind = std::variant<Mcar, MarLogistic, MnarSelfMasked, MnarQuantile>;

struct MechanismSpec {
    MechanismKind kind = Mcar{};
    std::vector<std::size_t> missing_cols;   // 0-based; empty means every column
    std::vector<std::size_t> observed_cols;  // 0-based; MAR inputs, never masked
};

// Mechanism with intercepts / cut points calibrated on a feature matrix.
struct FittedMechanism {
    MechanismSpec spec;
    std::size_t dim = 0;
    std::vector<std::size_t> missing_cols;  // resolved, sorted
    double mar_intercept = 0.0;
    std::vector<double> self_intercepts;  // per missing column
    std::vector<double> quantile_cuts;    // per missing column
    double quantile_prob = 0.0;           // p*
};

double sigmoid(double t);

// Unit-norm vector of `count` standard normal draws; `setting` selects the
// stream so settings 1..5 give five fixed weight families.
std::vector<double> default_logistic_weights(std::size_t count, std::uint64_t setting);

// Type-7 empirical quantile (linear interpolation between order statistics).
double empirical_quantile(std::vector<double> values, double q);

// Calibrates against X (complete). Throws ConfigError on invalid
// probabilities, bad column sets or an unreachable target proportion.
FittedMechanism calibrate_mechanism(const Eigen::MatrixXd& x, const MechanismSpec& spec);

// Per-column probability that the entry is missing given the full row.
std::vector<double> missing_probabilities(const FittedMechanism& mech, std::span<const double> row);

std::vector<Mask> apply_mechanism(const FittedMechanism& mech, const Eigen::MatrixXd& x, Rng& rng);

// Expected missing proportion over the mechanism's columns on X.
double expected_missing_proportion(const FittedMechanism& mech, const Eigen::MatrixXd& x);

std::vector<Mask> gen_mcar(std::size_t n, std::size_t d, double p, Rng& rng);
std::vector<Mask> gen_mar_logistic(const Eigen::MatrixXd& x, const MechanismSpec& spec, Rng& rng);
std::vector<Mask> gen_mnar_self_masked(const Eigen::MatrixXd& x, const MechanismSpec& spec, Rng& rng);
std::vector<Mask> gen_mnar_quantile(const Eigen::MatrixXd& x, const MechanismSpec& spec, Rng& rng);

// Calibrate then apply, dispatching on spec.kind.
std::vector<Mask> gen_masks(const Eigen::MatrixXd& x, const MechanismSpec& spec, Rng& rng);

}  // namespace mda
