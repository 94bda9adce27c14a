#pragma once

// Split conformal prediction and the CP-MDA family: over-masking of the
// calibration set, subsampling strategies, the exact counting-rule set, the
// nested interval, plus the comparison-matrix bound and isotonization by
// over-masking.

#include <functional>
#include <map>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mda/core.hpp"
#include "mda/impute.hpp"
#include "mda/regress.hpp"

namespace mda {

// r = ceil((1 - alpha)(n + 1)), guarded against rounding just above an
// integer. May equal n + 1, meaning the +inf sentinel.
std::size_t conformal_rank(std::size_t n, double alpha);

// r-th smallest of scores plus {+inf}. alpha in (0,1).
double conformal_quantile(std::vector<double> scores, double alpha);

double abs_residual_score(double mu_hat, double y);
// max(lo - y, y - hi)
double cqr_score(double lo, double hi, double y);
// 1 - p[label]
double classification_score(const Eigen::VectorXd& probs, int label);

struct AbsResidualScore {
    const MeanModel* model = nullptr;
};
struct CqrScore {
    const QuantileModel* model = nullptr;
};
// probs(row) must return one probability per label.
struct ClassificationScore {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> probs;
    int num_labels = 0;
};
using ScoreFunction = std::variant<AbsResidualScore, CqrScore, ClassificationScore>;

// Score of (z, y) under any score function; y is a label index for classification.
double score_value(const ScoreFunction& score, const Eigen::VectorXd& z, double y);

// Split CP on calibration rows (cal_z, cal_y) for one test row.
PredictiveSet split_cp_set(const ScoreFunction& score, const Eigen::MatrixXd& cal_z, const Eigen::VectorXd& cal_y,
                           const Eigen::VectorXd& z_test, double alpha);

// Closed forms once the threshold q is known.
PredictiveSet cqr_set(double lo, double hi, double q);
PredictiveSet class_set(const Eigen::VectorXd& probs, double q);

struct ExactStrategy {};
struct FullStrategy {};
struct SupersetOf {
    Mask m;
};
struct BoundedExtra {
    std::size_t k = 0;
};
// Keeps calibration point k independently with probability
// 2^(-|mis(M_k) \ mis(m_test)|).
struct MixtureStrategy {};
using SubsamplingStrategy = std::variant<ExactStrategy, FullStrategy, SupersetOf, BoundedExtra, MixtureStrategy>;

std::size_t extra_missing(const Mask& cal_mask, const Mask& m_test);

// Indices of the kept calibration points, ascending. Reads masks only. The
// rng is consumed by the mixture strategy alone.
std::vector<std::size_t> subsample_cal(const std::vector<Mask>& cal_masks, const Mask& m_test,
                                       const SubsamplingStrategy& strategy, Rng& rng);

// One over-masked calibration point seen from a given test point.
struct CalibrationRecord {
    std::size_t index = 0;
    Mask mask;          // M_k
    Mask aug_mask;      // max(M_k, m_test)
    double score = 0.0;  // s_k, calibration point re-imputed under aug_mask
    double test_lo = 0.0;  // test point re-imputed under aug_mask
    double test_hi = 0.0;

    // y is excluded by this record iff y < lower() or y > upper().
    double lower() const { return test_lo - score; }
    double upper() const { return test_hi + score; }
};

struct ClassCalibrationRecord {
    std::size_t index = 0;
    Mask mask;
    Mask aug_mask;
    double score = 0.0;
    Eigen::VectorXd test_probs;
};

std::vector<CalibrationRecord> select_records(const std::vector<CalibrationRecord>& all,
                                              const std::vector<std::size_t>& keep);

// {y : #{k : s_k < s(test under aug_mask_k, y)} < (1 - alpha)(1 + N)} as an
// exact interval union. Empty record set: the real line, flagged degenerate.
PredictiveSet mda_nested_star_set(const std::vector<CalibrationRecord>& records, double alpha);
PredictiveSet mda_nested_star_set(const std::vector<ClassCalibrationRecord>& records, int num_labels, double alpha);

// [r-th largest lower end, r-th smallest upper end], each sample padded with
// the matching infinity. Contains mda_nested_star_set of the same records.
PredictiveSet mda_nested_interval(const std::vector<CalibrationRecord>& records, double alpha);

// Split CP on the exact-match subsample (records whose M_k is included in
// m_test, so every aug_mask equals m_test). Infinite and flagged when empty.
PredictiveSet mda_exact_set(const std::vector<CalibrationRecord>& records, const Mask& m_test, double alpha);

// Scores of every calibration point re-imputed under max(M_k, m_test).
std::vector<double> overmasked_cal_scores(const ImputationModel& imp, const QuantileModel& model, bool with_mask,
                                          const IncompleteDataset& cal, const Mask& m_test);

// Records for every calibration point; cal_scores as from overmasked_cal_scores.
std::vector<CalibrationRecord> make_cqr_records(const ImputationModel& imp, const QuantileModel& model,
                                                bool with_mask, const IncompleteDataset& cal,
                                                const std::vector<double>& cal_scores, const PartialRow& test);

// Model input for `values` imputed under mask m (observed entries of m must
// be valid in values).
Eigen::VectorXd model_input(const ImputationModel& imp, std::span<const double> values, const Mask& m,
                            bool with_mask);

struct ComparisonBound {
    std::vector<std::size_t> winners;  // W(C)
    bool holds = true;                 // |W| <= 2 alpha (n + 1)
};

// C_ij = 1[S(i,j) > S(j,i)], W = {i : sum_j C_ij >= (1 - alpha)(n + 1)} for
// an (n+1) x (n+1) score matrix; diagonal ignored.
ComparisonBound comparison_matrix_bound(const Eigen::MatrixXd& scores, double alpha);

struct IsotonizedLengths {
    std::unordered_map<Mask, Mask> remap;      // pattern -> pattern whose builder it uses
    std::unordered_map<Mask, double> lengths;  // estimated length after remapping
};

// Processes patterns by decreasing missing count; each pattern keeps its own
// builder unless an immediate super-pattern (one extra missing entry) has a
// smaller already-isotonized length, in which case it inherits that one.
// Throws ConfigError when an immediate super-pattern has no estimate.
IsotonizedLengths isotonize_by_overmasking(const std::unordered_map<Mask, double>& estimates);

template <class Builder>
std::unordered_map<Mask, Builder> remap_builders(const std::unordered_map<Mask, Builder>& builders,
                                                 const IsotonizedLengths& iso) {
    std::unordered_map<Mask, Builder> out;
    for (const auto& [m, target] : iso.remap) out.emplace(m, builders.at(target));
    return out;
}

}  // namespace mda
