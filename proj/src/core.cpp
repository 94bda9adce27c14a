#include "mda/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace mda {

namespace {

void require_same_dim(const Mask& a, const Mask& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("mask dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                             std::to_string(b.dim()));
    }
}

}  // namespace

Mask::Mask(std::size_t dim, std::uint64_t bits) : bits_(bits), dim_(static_cast<std::uint32_t>(dim)) {
    if (dim > kMaxDim) {
        throw DimensionError("masks support at most 64 features, got " + std::to_string(dim));
    }
    if (dim < kMaxDim && (bits >> dim) != 0) {
        throw DimensionError("mask bits set beyond dimension " + std::to_string(dim));
    }
}

Mask Mask::all(std::size_t dim) {
    return Mask(dim, dim == kMaxDim ? ~std::uint64_t{0} : ((std::uint64_t{1} << dim) - 1));
}

Mask Mask::from_bits(std::initializer_list<int> bits) {
    return from_bits(std::span<const int>(bits.begin(), bits.size()));
}

Mask Mask::from_bits(std::span<const int> bits) {
    std::uint64_t packed = 0;
    for (std::size_t j = 0; j < bits.size(); ++j) {
        if (bits[j] != 0 && bits[j] != 1) {
            throw DimensionError("mask entries must be 0 or 1");
        }
        if (bits[j]) packed |= std::uint64_t{1} << j;
    }
    return Mask(bits.size(), packed);
}

Mask Mask::parse(std::string_view text) {
    std::vector<int> bits;
    bits.reserve(text.size());
    for (char c : text) {
        if (c != '0' && c != '1') {
            throw ConfigError("invalid mask string '" + std::string(text) + "'");
        }
        bits.push_back(c - '0');
    }
    return from_bits(std::span<const int>(bits));
}

std::size_t Mask::num_missing() const { return static_cast<std::size_t>(std::popcount(bits_)); }

Mask Mask::with_missing(std::size_t j) const {
    if (j >= dim_) throw DimensionError("feature index out of range");
    return Mask(dim_, bits_ | (std::uint64_t{1} << j));
}

std::vector<std::size_t> Mask::obs_indices() const {
    std::vector<std::size_t> out;
    out.reserve(num_observed());
    for (std::size_t j = 0; j < dim_; ++j)
        if (observed(j)) out.push_back(j);
    return out;
}

std::vector<std::size_t> Mask::mis_indices() const {
    std::vector<std::size_t> out;
    out.reserve(num_missing());
    for (std::size_t j = 0; j < dim_; ++j)
        if (missing(j)) out.push_back(j);
    return out;
}

std::string Mask::to_string() const {
    std::string s(dim_, '0');
    for (std::size_t j = 0; j < dim_; ++j)
        if (missing(j)) s[j] = '1';
    return s;
}

bool mask_subset(const Mask& m, const Mask& m2) {
    require_same_dim(m, m2);
    return (m.bits() & ~m2.bits()) == 0;
}

Mask over_mask(const Mask& m, const Mask& m_test) {
    require_same_dim(m, m_test);
    return Mask(m.dim(), m.bits() | m_test.bits());
}

std::vector<Mask> all_masks(std::size_t d) {
    if (d > 20) throw DimensionError("refusing to enumerate 2^d patterns for d > 20");
    std::vector<Mask> out;
    out.reserve(std::size_t{1} << d);
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << d); ++b) out.emplace_back(d, b);
    return out;
}

double PartialRow::at(std::size_t j) const {
    if (j >= values.size()) throw DimensionError("feature index out of range");
    if (mask.missing(j)) {
        throw MissingValueError("feature " + std::to_string(j) + " is missing");
    }
    return values[j];
}

std::vector<double> obs_values(const PartialRow& x) {
    std::vector<double> out;
    out.reserve(x.mask.num_observed());
    for (std::size_t j = 0; j < x.dim(); ++j)
        if (x.mask.observed(j)) out.push_back(x.values[j]);
    return out;
}

IncompleteDataset::IncompleteDataset(const Eigen::MatrixXd& values, std::vector<Mask> masks,
                                     Eigen::VectorXd y)
    : masks_(std::move(masks)), y_(std::move(y)), dim_(static_cast<std::size_t>(values.cols())) {
    const auto n = static_cast<std::size_t>(values.rows());
    if (masks_.size() != n || static_cast<std::size_t>(y_.size()) != n) {
        throw DimensionError("dataset rows, masks and responses disagree in length");
    }
    values_.assign(n * dim_, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (masks_[i].dim() != dim_) throw DimensionError("mask dimension differs from feature count");
        for (std::size_t j = 0; j < dim_; ++j) {
            if (masks_[i].observed(j)) {
                values_[i * dim_ + j] = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
    }
}

IncompleteDataset IncompleteDataset::complete(const Eigen::MatrixXd& values, Eigen::VectorXd y) {
    std::vector<Mask> masks(static_cast<std::size_t>(values.rows()),
                            Mask::none(static_cast<std::size_t>(values.cols())));
    return IncompleteDataset(values, std::move(masks), std::move(y));
}

PartialRow IncompleteDataset::row(std::size_t i) const {
    return PartialRow{std::span<const double>(values_.data() + i * dim_, dim_), masks_[i]};
}

double IncompleteDataset::value(std::size_t i, std::size_t j) const { return row(i).at(j); }

IncompleteDataset IncompleteDataset::subset(std::span<const std::size_t> rows) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim_));
    std::vector<Mask> masks;
    masks.reserve(rows.size());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t i = rows[r];
        if (i >= size()) throw DimensionError("row index out of range");
        for (std::size_t j = 0; j < dim_; ++j) {
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = values_[i * dim_ + j];
        }
        masks.push_back(masks_[i]);
        y[static_cast<Eigen::Index>(r)] = y_[static_cast<Eigen::Index>(i)];
    }
    return IncompleteDataset(x, std::move(masks), std::move(y));
}

PredictiveSet PredictiveSet::from_intervals(std::vector<Interval> parts) {
    for (const auto& iv : parts) {
        if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi) {
            throw NumericError("invalid interval endpoints");
        }
    }
    std::sort(parts.begin(), parts.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
    std::vector<Interval> merged;
    for (const auto& iv : parts) {
        if (!merged.empty() && iv.lo <= merged.back().hi) {
            merged.back().hi = std::max(merged.back().hi, iv.hi);
        } else {
            merged.push_back(iv);
        }
    }
    PredictiveSet s;
    s.value_ = std::move(merged);
    return s;
}

PredictiveSet PredictiveSet::interval(double lo, double hi) { return from_intervals({Interval{lo, hi}}); }

PredictiveSet PredictiveSet::real_line() {
    const double inf = std::numeric_limits<double>::infinity();
    return interval(-inf, inf);
}

PredictiveSet PredictiveSet::from_labels(std::vector<int> labels, int num_labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    for (int l : labels) {
        if (l < 0 || l >= num_labels) throw DimensionError("label outside label space");
    }
    PredictiveSet s;
    s.value_ = LabelSet{std::move(labels), num_labels};
    return s;
}

PredictiveSet PredictiveSet::all_labels(int num_labels) {
    std::vector<int> labels(static_cast<std::size_t>(num_labels));
    std::iota(labels.begin(), labels.end(), 0);
    return from_labels(std::move(labels), num_labels);
}

std::span<const Interval> PredictiveSet::intervals() const {
    if (!is_interval_union()) throw Error("predictive set holds labels, not intervals");
    return std::get<std::vector<Interval>>(value_);
}

std::span<const int> PredictiveSet::labels() const {
    if (!is_label_set()) throw Error("predictive set holds intervals, not labels");
    return std::get<LabelSet>(value_).labels;
}

int PredictiveSet::num_labels() const {
    if (!is_label_set()) throw Error("predictive set holds intervals, not labels");
    return std::get<LabelSet>(value_).num_labels;
}

double PredictiveSet::length() const {
    if (is_label_set()) return static_cast<double>(labels().size());
    double total = 0.0;
    for (const auto& iv : intervals()) total += iv.length();
    return total;
}

bool PredictiveSet::is_infinite() const {
    if (is_label_set()) return false;
    for (const auto& iv : intervals()) {
        if (std::isinf(iv.lo) || std::isinf(iv.hi)) return true;
    }
    return false;
}

bool PredictiveSet::empty() const {
    return is_label_set() ? labels().empty() : intervals().empty();
}

bool PredictiveSet::contains(double y) const {
    const auto parts = intervals();
    auto it = std::upper_bound(parts.begin(), parts.end(), y,
                               [](double v, const Interval& iv) { return v < iv.lo; });
    if (it == parts.begin()) return false;
    return std::prev(it)->contains(y);
}

bool PredictiveSet::contains_label(int label) const {
    const auto ls = labels();
    return std::binary_search(ls.begin(), ls.end(), label);
}

Interval PredictiveSet::hull() const {
    const auto parts = intervals();
    if (parts.empty()) throw Error("hull of an empty set");
    return Interval{parts.front().lo, parts.back().hi};
}

bool PredictiveSet::is_subset_of(const PredictiveSet& other) const {
    if (is_label_set()) {
        for (int l : labels())
            if (!other.contains_label(l)) return false;
        return true;
    }
    const auto outer = other.intervals();
    for (const auto& iv : intervals()) {
        const bool covered = std::any_of(outer.begin(), outer.end(), [&](const Interval& o) {
            return o.lo <= iv.lo && iv.hi <= o.hi;
        });
        if (!covered) return false;
    }
    return true;
}

SplitIndices split_train_cal(std::size_t n, double rho, Rng& rng) {
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw ConfigError("calibration proportion must lie in (0, 1]");
    }
    const auto n_cal = std::min(n, static_cast<std::size_t>(std::floor(rho * static_cast<double>(n) + 0.5)));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // Fisher-Yates with an explicit draw so the partition does not depend on
    // the standard library's shuffle.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    SplitIndices out;
    out.cal_ids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_cal));
    out.train_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_cal), perm.end());
    std::sort(out.cal_ids.begin(), out.cal_ids.end());
    std::sort(out.train_ids.begin(), out.train_ids.end());
    return out;
}

}  // namespace mda
