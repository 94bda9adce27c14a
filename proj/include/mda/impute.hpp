#pragma once

// Imputation maps Phi(x, m): observed coordinates are returned bit for bit,
// missing ones are filled from the fitted model.

#include <vector>

#include <Eigen/Dense>

#include "mda/core.hpp"

namespace mda {

enum class ImputerKind { Constant, ColumnMean, GaussianConditional, IterativeRidge };

ImputerKind parse_imputer_kind(const std::string& name);
std::string to_string(ImputerKind kind);

struct ImputerOptions {
    ImputerKind kind = ImputerKind::IterativeRidge;
    std::vector<double> constants;  // Constant kind only; one per column
    double lambda = -1.0;           // ridge penalty; negative selects 1e-3 * trace(Sigma_hat) / d
    int iters = 10;                 // chained-equation sweeps
};

// Intercept followed by the d-1 weights on the other columns, in index order.
struct ColumnRegression {
    double intercept = 0.0;
    Eigen::VectorXd weights;
};

class ImputationModel {
public:
    ImputerKind kind() const { return kind_; }
    std::size_t dim() const { return static_cast<std::size_t>(means_.size()); }
    const Eigen::VectorXd& means() const { return means_; }
    const Eigen::VectorXd& constants() const { return constants_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }  // jittered
    double lambda() const { return lambda_; }
    // sweeps()[t][j]: regression of column j fitted in sweep t.
    const std::vector<std::vector<ColumnRegression>>& sweeps() const { return sweeps_; }

    Eigen::VectorXd impute(std::span<const double> values, const Mask& m) const;
    Eigen::VectorXd impute(const PartialRow& row) const { return impute(row.values, row.mask); }
    // n x d completed matrix.
    Eigen::MatrixXd impute_all(const IncompleteDataset& data) const;

private:
    friend ImputationModel fit_imputer(const IncompleteDataset&, const ImputerOptions&);

    ImputerKind kind_ = ImputerKind::ColumnMean;
    Eigen::VectorXd means_;
    Eigen::VectorXd constants_;
    Eigen::MatrixXd cov_;
    double lambda_ = 0.0;
    std::vector<std::vector<ColumnRegression>> sweeps_;
};

// Fits on the given rows only. Throws NumericError when the Gaussian
// covariance estimate stays singular after jitter.
ImputationModel fit_imputer(const IncompleteDataset& train, const ImputerOptions& opts = {});

// (x_imputed, m) -> 2d vector with the mask bits as 0/1 reals.
Eigen::VectorXd concat_mask(const Eigen::VectorXd& x_imputed, const Mask& m);

// Imputed rows, optionally followed by the masks; the regressor input.
Eigen::MatrixXd design_matrix(const ImputationModel& imp, const IncompleteDataset& data, bool with_mask);

}  // namespace mda
