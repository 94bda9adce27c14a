#include "mda/regress.hpp"

#include <algorithm>
#include <cmath>

#include "mda/core.hpp"

namespace mda {

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("quantile level must lie in (0,1)");
}

void check_rows(const Eigen::MatrixXd& z, const Eigen::VectorXd& y) {
    if (z.rows() != y.size()) throw DimensionError("feature rows and responses disagree in length");
    if (z.rows() == 0) throw ConfigError("cannot fit on an empty dataset");
}

struct Standardizer {
    Eigen::VectorXd mean, scale;

    explicit Standardizer(const Eigen::MatrixXd& z) {
        const double n = static_cast<double>(z.rows());
        mean = z.colwise().mean().transpose();
        scale = ((z.rowwise() - mean.transpose()).array().square().colwise().sum() / n).sqrt().transpose();
        for (Eigen::Index j = 0; j < scale.size(); ++j)
            if (!(scale[j] > 1e-12)) scale[j] = 1.0;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& z) const {
        return (z.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    }
};

double lower_tau_quantile(Eigen::VectorXd v, double tau) {
    std::sort(v.data(), v.data() + v.size());
    const auto k = static_cast<Eigen::Index>(std::ceil(tau * static_cast<double>(v.size()))) - 1;
    return v[std::clamp<Eigen::Index>(k, 0, v.size() - 1)];
}

}  // namespace

double pinball_loss(double y, double yhat, double tau) {
    check_tau(tau);
    return y >= yhat ? tau * (y - yhat) : (1.0 - tau) * (yhat - y);
}

double pinball_subgradient(double y, double yhat, double tau) {
    if (y > yhat) return -tau;
    if (y < yhat) return 1.0 - tau;
    return 0.0;
}

double MeanModel::predict(const Eigen::VectorXd& z) const { return intercept + coef.dot(z); }

Eigen::VectorXd MeanModel::predict(const Eigen::MatrixXd& z) const {
    return (z * coef).array() + intercept;
}

MeanModel fit_ridge(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda) {
    check_rows(z, y);
    if (!(lambda >= 0.0)) throw ConfigError("ridge penalty must be nonnegative");
    const Eigen::VectorXd zm = z.colwise().mean().transpose();
    const double ym = y.mean();
    const Eigen::MatrixXd zc = z.rowwise() - zm.transpose();
    Eigen::MatrixXd gram = zc.transpose() * zc;
    gram.diagonal().array() += lambda;
    MeanModel out;
    out.coef = gram.ldlt().solve(zc.transpose() * (y.array() - ym).matrix());
    if (!out.coef.allFinite()) throw NumericError("ridge system is singular; use a positive penalty");
    out.intercept = ym - out.coef.dot(zm);
    return out;
}

Eigen::VectorXd LinearQuantileFit::predict(const Eigen::MatrixXd& z) const {
    return (z * coef).array() + intercept;
}

LinearQuantileFit fit_linear_quantile(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double tau,
                                      const LinearQuantileOptions& opts) {
    check_rows(z, y);
    check_tau(tau);
    const Eigen::Index n = z.rows();
    const Eigen::Index p = z.cols();
    const Standardizer zs(z);
    const Eigen::MatrixXd zt = zs.apply(z);
    const double y_mean = y.mean();
    double y_scale = std::sqrt((y.array() - y_mean).square().mean());
    if (!(y_scale > 1e-12)) y_scale = 1.0;
    const Eigen::VectorXd yt = (y.array() - y_mean) / y_scale;

    // Start from the best constant predictor.
    double b = lower_tau_quantile(yt, tau);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    double b_avg = b;
    Eigen::VectorXd w_avg = w;

    auto mean_loss = [&](double bb, const Eigen::VectorXd& ww) {
        const Eigen::VectorXd r = yt - ((zt * ww).array() + bb).matrix();
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += r[i] >= 0.0 ? tau * r[i] : (tau - 1.0) * r[i];
        return s / static_cast<double>(n);
    };

    LinearQuantileFit out;
    out.tau = tau;
    out.loss_trace.reserve(static_cast<std::size_t>(std::max(opts.epochs, 0)));
    Eigen::VectorXd g(n);
    for (int t = 1; t <= opts.epochs; ++t) {
        const Eigen::VectorXd pred = (zt * w).array() + b;
        for (Eigen::Index i = 0; i < n; ++i) g[i] = pinball_subgradient(yt[i], pred[i], tau);
        const double eta = opts.step / std::sqrt(static_cast<double>(t));
        b -= eta * g.mean();
        w -= eta * (zt.transpose() * g) / static_cast<double>(n);
        // Weights proportional to t favour late iterates.
        const double rate = 2.0 / (static_cast<double>(t) + 1.0);
        b_avg += rate * (b - b_avg);
        w_avg += rate * (w - w_avg);
        out.loss_trace.push_back(mean_loss(b_avg, w_avg) * y_scale);
    }

    out.coef = (w_avg.array() / zs.scale.array() * y_scale).matrix();
    out.intercept = y_mean + y_scale * b_avg - out.coef.dot(zs.mean);
    return out;
}

QuantileModel::QuantileModel(LinearQuantilePair lin, QuantileLevels levels)
    : model_(std::move(lin)), levels_(levels) {}

QuantileModel::QuantileModel(MlpQuantileNet net, QuantileLevels levels) : model_(std::move(net)), levels_(levels) {}

std::size_t QuantileModel::input_dim() const {
    if (is_linear()) return static_cast<std::size_t>(linear().lo.coef.size());
    return static_cast<std::size_t>(mlp().net.layer_sizes().front());
}

QuantilePrediction QuantileModel::predict_raw(const Eigen::MatrixXd& z) const {
    if (static_cast<std::size_t>(z.cols()) != input_dim()) {
        throw DimensionError("quantile model input dimension mismatch");
    }
    QuantilePrediction out;
    if (is_linear()) {
        out.lo = linear().lo.predict(z);
        out.hi = linear().hi.predict(z);
        return out;
    }
    const auto& m = mlp();
    const Eigen::MatrixXd zt = (z.rowwise() - m.x_mean.transpose()).array().rowwise() / m.x_scale.transpose().array();
    const Eigen::MatrixXd h = m.net.forward(zt);
    out.lo = (h.col(0).array() * m.y_scale + m.y_mean).matrix();
    out.hi = (h.col(1).array() * m.y_scale + m.y_mean).matrix();
    return out;
}

QuantilePrediction QuantileModel::predict(const Eigen::MatrixXd& z) const {
    QuantilePrediction out = predict_raw(z);
    for (Eigen::Index i = 0; i < out.lo.size(); ++i) std::tie(out.lo[i], out.hi[i]) = fix_crossing(out.lo[i], out.hi[i]);
    return out;
}

std::pair<double, double> QuantileModel::predict(const Eigen::VectorXd& z) const {
    const QuantilePrediction p = predict(Eigen::MatrixXd(z.transpose()));
    return {p.lo[0], p.hi[0]};
}

QuantileModel fit_linear_quantile_model(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                        const QuantileLevels& levels, const LinearQuantileOptions& opts) {
    if (!(levels.lo < levels.hi)) throw ConfigError("quantile levels must be ordered");
    LinearQuantilePair pair{fit_linear_quantile(z, y, levels.lo, opts), fit_linear_quantile(z, y, levels.hi, opts)};
    return QuantileModel(std::move(pair), levels);
}

}  // namespace mda
