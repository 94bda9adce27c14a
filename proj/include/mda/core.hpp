#pragma once

// Mask algebra, incomplete datasets, predictive sets and train/calibration
// splitting shared by every other module.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mda/rng.hpp"

namespace mda {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid user-facing configuration (bad probabilities, unreachable targets).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Singular systems, failed factorizations, non-finite results.
class NumericError : public Error {
public:
    using Error::Error;
};

// Raised when code tries to read a value flagged as missing.
class MissingValueError : public Error {
public:
    using Error::Error;
};

// Missingness pattern over d <= 64 features. Bit j set means feature j is
// missing.
class Mask {
public:
    static constexpr std::size_t kMaxDim = 64;

    Mask() = default;
    explicit Mask(std::size_t dim, std::uint64_t bits = 0);

    static Mask none(std::size_t dim) { return Mask(dim, 0); }
    static Mask all(std::size_t dim);
    // {1,0,0} -> first feature missing.
    static Mask from_bits(std::initializer_list<int> bits);
    static Mask from_bits(std::span<const int> bits);
    // "100" -> first feature missing; inverse of to_string().
    static Mask parse(std::string_view text);

    std::size_t dim() const { return dim_; }
    std::uint64_t bits() const { return bits_; }

    bool missing(std::size_t j) const { return (bits_ >> j) & 1u; }
    bool observed(std::size_t j) const { return !missing(j); }
    std::size_t num_missing() const;
    std::size_t num_observed() const { return dim_ - num_missing(); }

    Mask with_missing(std::size_t j) const;

    std::vector<std::size_t> obs_indices() const;
    std::vector<std::size_t> mis_indices() const;

    std::string to_string() const;

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    std::uint64_t bits_ = 0;
    std::uint32_t dim_ = 0;
};

// m is included in m2: every feature missing in m is also missing in m2.
bool mask_subset(const Mask& m, const Mask& m2);

// Componentwise max; the least upper bound of the two patterns.
Mask over_mask(const Mask& m, const Mask& m_test);

// Every mask of dimension d, ordered by bit value.
std::vector<Mask> all_masks(std::size_t d);

// Read-only view of a feature vector with per-entry validity flags.
struct PartialRow {
    std::span<const double> values;
    Mask mask;

    std::size_t dim() const { return values.size(); }
    // Throws MissingValueError when entry j is flagged missing.
    double at(std::size_t j) const;
};

// Observed coordinates in index order.
std::vector<double> obs_values(const PartialRow& x);

// n x d feature matrix with per-entry validity flags, plus the response.
class IncompleteDataset {
public:
    IncompleteDataset() = default;
    // Entries of `values` flagged missing by `masks` are discarded.
    IncompleteDataset(const Eigen::MatrixXd& values, std::vector<Mask> masks, Eigen::VectorXd y);

    static IncompleteDataset complete(const Eigen::MatrixXd& values, Eigen::VectorXd y);

    std::size_t size() const { return masks_.size(); }
    std::size_t dim() const { return dim_; }
    bool empty() const { return masks_.empty(); }

    PartialRow row(std::size_t i) const;
    const Mask& mask(std::size_t i) const { return masks_[i]; }
    const std::vector<Mask>& masks() const { return masks_; }
    double y(std::size_t i) const { return y_[static_cast<Eigen::Index>(i)]; }
    const Eigen::VectorXd& y() const { return y_; }
    // Throws MissingValueError on a missing entry.
    double value(std::size_t i, std::size_t j) const;

    IncompleteDataset subset(std::span<const std::size_t> rows) const;

private:
    std::vector<double> values_;  // row-major, zero where missing
    std::vector<Mask> masks_;
    Eigen::VectorXd y_;
    std::size_t dim_ = 0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    bool contains(double y) const { return lo <= y && y <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

// Either a finite union of closed real intervals (sorted, disjoint) or a
// subset of a finite label space.
class PredictiveSet {
public:
    struct LabelSet {
        std::vector<int> labels;  // sorted, unique
        int num_labels = 0;
    };

    PredictiveSet() = default;

    static PredictiveSet from_intervals(std::vector<Interval> parts);
    static PredictiveSet interval(double lo, double hi);
    static PredictiveSet point(double y) { return interval(y, y); }
    static PredictiveSet real_line();
    static PredictiveSet empty_set() { return from_intervals({}); }
    static PredictiveSet from_labels(std::vector<int> labels, int num_labels);
    static PredictiveSet all_labels(int num_labels);

    bool is_interval_union() const { return std::holds_alternative<std::vector<Interval>>(value_); }
    bool is_label_set() const { return !is_interval_union(); }

    std::span<const Interval> intervals() const;
    std::span<const int> labels() const;
    int num_labels() const;

    // Lebesgue measure for interval unions, cardinality for label sets.
    double length() const;
    bool is_infinite() const;
    bool empty() const;
    bool contains(double y) const;
    bool contains_label(int label) const;
    // Smallest interval containing the union; throws on label sets or empty sets.
    Interval hull() const;
    bool is_subset_of(const PredictiveSet& other) const;

    // Set by calibration code when the effective calibration set was empty.
    bool degenerate() const { return degenerate_; }
    PredictiveSet& flag_degenerate() {
        degenerate_ = true;
        return *this;
    }

private:
    std::variant<std::vector<Interval>, LabelSet> value_ = std::vector<Interval>{};
    bool degenerate_ = false;
};

struct SplitIndices {
    std::vector<std::size_t> train_ids;
    std::vector<std::size_t> cal_ids;
};

// Uniform random partition with |Cal| = round-half-up(rho * n).
SplitIndices split_train_cal(std::size_t n, double rho, Rng& rng);

}  // namespace mda

template <>
struct std::hash<mda::Mask> {
    std::size_t operator()(const mda::Mask& m) const noexcept {
        return std::hash<std::uint64_t>{}(m.bits() * 0x9E3779B97F4A7C15ull ^ m.dim());
    }
};
