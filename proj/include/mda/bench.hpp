#pragma once

// Synthetic data generation, the per-repetition pipeline (split, impute,
// fit, calibrate, evaluate), result rows and their aggregation.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mda/config.hpp"
#include "mda/core.hpp"
#include "mda/impute.hpp"
#include "mda/missingness.hpp"
#include "mda/regress.hpp"

namespace mda {

struct CompleteData {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

// X ~ N(1, phi 11' + (1 - phi) I), y = beta'X + eps, eps ~ N(0, noise_var).
CompleteData gen_glm_dataset(const ExperimentConfig& cfg, std::size_t n, Rng& rng);
CompleteData gen_glm_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

// Draws n feature rows only.
Eigen::MatrixXd gen_glm_features(const ExperimentConfig& cfg, std::size_t n, Rng& rng);

// Response of the y-dep-m scenario for one row.
double ydepm_response(std::span<const double> x, const Mask& m, double eps);

// d = 3 rows with Bernoulli(target_prop) masks and the mask-dependent response.
IncompleteDataset gen_ydepm_dataset(const ExperimentConfig& cfg, std::size_t n, Rng& rng);
IncompleteDataset gen_ydepm_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

// Model 1: X ~ N(0, sigma2), Y = beta X + X xi, xi ~ N(0, tau2), M ~ Bernoulli(rho).
struct Model1Sample {
    Eigen::VectorXd x, y;
    std::vector<int> m;
};
Model1Sample sample_model1(std::size_t n, double sigma2, double tau2, double beta, double rho, Rng& rng);

struct TestGroup {
    std::string key_kind;  // marginal | size | pattern
    std::string key;       // all | s | bit string
    IncompleteDataset data;
};

// Marginal test set drawn like the training data.
TestGroup build_marginal_testset(const ExperimentConfig& cfg, const FittedMechanism& mech, Rng& rng);

// One group per pattern size (size mode) or pattern (pattern mode). MCAR
// scenarios impose the mask on fresh rows; other mechanisms sample rows from
// X | M in its group by importance resampling a pool of fresh rows.
std::vector<TestGroup> build_conditional_testset(const ExperimentConfig& cfg, const FittedMechanism& mech, Rng& rng);

struct RepData {
    IncompleteDataset data;  // train and calibration rows together
    FittedMechanism mechanism;
    SplitIndices split;
};

RepData prepare_rep(const ExperimentConfig& cfg, std::size_t rep);

struct FittedPipeline {
    ImputationModel imputer;
    QuantileModel model;
    bool with_mask = true;
};

// Imputer and regressor fitted on the split's training rows only.
FittedPipeline fit_pipeline(const ExperimentConfig& cfg, const IncompleteDataset& data, const SplitIndices& split,
                            std::size_t rep);

struct ResultRow {
    std::size_t rep = 0;
    std::string method;
    std::string key_kind;
    std::string key;
    double coverage = 0.0;
    double mean_length = 0.0;
    double median_length = 0.0;
    double inf_fraction = 0.0;
};

struct RepResult {
    std::vector<ResultRow> rows;
    std::size_t inclusion_checks = 0;      // test points checked for Nested-star(full) within Nested
    std::size_t inclusion_violations = 0;
    std::optional<std::string> failure;
};

RepResult run_repetition(const ExperimentConfig& cfg, std::size_t rep);

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::size_t inclusion_checks = 0;
    std::size_t inclusion_violations = 0;
    std::size_t failures = 0;
};

// All repetitions, on cfg.workers threads, rows ordered by repetition.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

extern const char* const kResultHeader;

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);
std::vector<ResultRow> read_results_csv(const std::string& path);

// Every seed the run derives, keyed by repetition and stream tag, as JSON.
std::string run_manifest_json(const ExperimentConfig& cfg);

struct SummaryRow {
    std::string method;
    std::string key_kind;
    std::string key;
    std::size_t reps = 0;
    double mean_coverage = 0.0;
    double q10_coverage = 0.0;
    double q90_coverage = 0.0;
    double min_coverage = 0.0;
    double mean_length = 0.0;    // mean over repetitions of per-repetition mean length
    double median_length = 0.0;  // median over repetitions of per-repetition median length
    double inf_fraction = 0.0;
};

// Aggregates per (method, key_kind, key), in first-appearance order. Failure
// rows are skipped.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

const SummaryRow* find_summary(const std::vector<SummaryRow>& rows, const std::string& method,
                               const std::string& key_kind, const std::string& key);

// (median_a - median_b) / median_b on the summarized median lengths.
double relative_improvement(const std::vector<SummaryRow>& rows, const std::string& method_a,
                            const std::string& method_b, const std::string& key_kind = "marginal",
                            const std::string& key = "all");

// Stream tags used by the pipeline.
inline constexpr const char* kStreamTags[] = {"data", "mask", "split", "init", "subsample", "test"};

}  // namespace mda
