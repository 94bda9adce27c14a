#pragma once

// Mean and quantile regressors over feature rows z (imputed features, usually
// followed by the mask).

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mda/core.hpp"

namespace mda {

// tau*(y - yhat) if y >= yhat else (1 - tau)*(yhat - y). tau in (0,1).
double pinball_loss(double y, double yhat, double tau);
// A subgradient of pinball_loss with respect to yhat (0 at the kink).
double pinball_subgradient(double y, double yhat, double tau);

struct MeanModel {
    Eigen::VectorXd coef;
    double intercept = 0.0;

    double predict(const Eigen::VectorXd& z) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& z) const;
};

// argmin sum_i (y_i - b - w'z_i)^2 + lambda |w|^2, intercept unpenalized.
MeanModel fit_ridge(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda);

struct LinearQuantileOptions {
    int epochs = 4000;
    double step = 1.0;  // initial step on standardized data, decays as 1/sqrt(t)
    std::uint64_t seed = 0;
};

struct LinearQuantileFit {
    Eigen::VectorXd coef;
    double intercept = 0.0;
    double tau = 0.5;
    // Mean pinball loss of the averaged iterate, one entry per epoch.
    std::vector<double> loss_trace;

    double predict(const Eigen::VectorXd& z) const { return intercept + coef.dot(z); }
    Eigen::VectorXd predict(const Eigen::MatrixXd& z) const;
};

// Full-batch subgradient descent on the mean pinball loss with averaged
// iterates, run on standardized data. The solver draws no random numbers;
// `seed` is accepted so both trainers read the same config keys.
LinearQuantileFit fit_linear_quantile(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double tau,
                                      const LinearQuantileOptions& opts = {});

struct QuantileLevels {
    double lo = 0.05;
    double hi = 0.95;
};

// Fully connected softplus network with two linear output heads. Parameters
// live in one flat vector: per layer, the weight matrix (out x in, column
// major) followed by the bias.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::vector<int> layer_sizes, std::uint64_t seed);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    // n x 2 raw head outputs for n x in inputs.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

    // Mean over rows of pinball(lo head) + pinball(hi head), and its gradient.
    double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const QuantileLevels& levels,
                             Eigen::VectorXd* grad) const;

    // Same, with squared error on both heads; smooth, used to check backprop.
    double squared_loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     Eigen::VectorXd* grad) const;

private:
    template <class OutGrad>
    double backprop(const Eigen::MatrixXd& x, OutGrad&& out_grad, Eigen::VectorXd* grad) const;

    std::vector<int> sizes_;
    Eigen::VectorXd params_;
};

struct MlpOptions {
    std::vector<int> hidden{64, 64};
    int epochs = 1000;
    double step = 0.05;
    double momentum = 0.0;  // heavy-ball coefficient; 0 is plain gradient descent
    std::uint64_t seed = 0;
};

struct QuantilePrediction {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

struct LinearQuantilePair {
    LinearQuantileFit lo;
    LinearQuantileFit hi;
};

struct MlpQuantileNet {
    Mlp net;
    Eigen::VectorXd x_mean, x_scale;
    double y_mean = 0.0, y_scale = 1.0;
};

// Fitted lower/upper conditional quantile predictor.
class QuantileModel {
public:
    QuantileModel() = default;
    QuantileModel(LinearQuantilePair lin, QuantileLevels levels);
    QuantileModel(MlpQuantileNet net, QuantileLevels levels);

    const QuantileLevels& levels() const { return levels_; }
    std::size_t input_dim() const;
    bool is_linear() const { return std::holds_alternative<LinearQuantilePair>(model_); }
    const LinearQuantilePair& linear() const { return std::get<LinearQuantilePair>(model_); }
    const MlpQuantileNet& mlp() const { return std::get<MlpQuantileNet>(model_); }

    // Heads as evaluated, before the crossing fix.
    QuantilePrediction predict_raw(const Eigen::MatrixXd& z) const;
    // Rows with lo > hi are swapped.
    QuantilePrediction predict(const Eigen::MatrixXd& z) const;
    std::pair<double, double> predict(const Eigen::VectorXd& z) const;

private:
    std::variant<LinearQuantilePair, MlpQuantileNet> model_;
    QuantileLevels levels_;
};

// Sorted pair; the crossing fix used by every quantile model.
inline std::pair<double, double> fix_crossing(double lo, double hi) {
    return lo <= hi ? std::pair{lo, hi} : std::pair{hi, lo};
}

QuantileModel fit_linear_quantile_model(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                        const QuantileLevels& levels, const LinearQuantileOptions& opts = {});

QuantileModel fit_mlp_quantile(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const QuantileLevels& levels,
                               const MlpOptions& opts = {});

}  // namespace mda
