#include <cmath>
#include <random>

#include "mda/core.hpp"
#include "mda/normal.hpp"
#include "mda/regress.hpp"

namespace mda {

namespace {

Eigen::ArrayXXd softplus(const Eigen::ArrayXXd& a) {
    return a.max(0.0) + (-a.abs()).exp().log1p();
}

Eigen::ArrayXXd logistic(const Eigen::ArrayXXd& a) { return 1.0 / (1.0 + (-a).exp()); }

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, std::uint64_t seed) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2 || sizes_.back() != 2) {
        throw ConfigError("network needs an input layer and a two-unit output layer");
    }
    for (int s : sizes_)
        if (s <= 0) throw ConfigError("layer sizes must be positive");
    Eigen::Index total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) total += sizes_[l + 1] * (sizes_[l] + 1);
    params_ = Eigen::VectorXd::Zero(total);

    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::Index off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        const double sd = std::sqrt(2.0 / (in + out));
        for (int k = 0; k < in * out; ++k) params_[off + k] = sd * z(rng);
        off += in * out + out;  // biases start at zero
    }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
    if (x.cols() != sizes_.front()) throw DimensionError("network input dimension mismatch");
    Eigen::MatrixXd h = x;
    Eigen::Index off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        Eigen::Map<const Eigen::MatrixXd> w(params_.data() + off, out, in);
        Eigen::Map<const Eigen::VectorXd> b(params_.data() + off + in * out, out);
        off += in * out + out;
        Eigen::MatrixXd a = h * w.transpose();
        a.rowwise() += b.transpose();
        h = (l + 2 < sizes_.size()) ? Eigen::MatrixXd(softplus(a.array())) : a;
    }
    return h;
}

template <class OutGrad>
double Mlp::backprop(const Eigen::MatrixXd& x, OutGrad&& out_grad, Eigen::VectorXd* grad) const {
    if (x.cols() != sizes_.front()) throw DimensionError("network input dimension mismatch");
    const std::size_t layers = sizes_.size() - 1;
    std::vector<Eigen::MatrixXd> pre(layers);     // pre-activations
    std::vector<Eigen::MatrixXd> post(layers + 1);  // layer inputs
    std::vector<Eigen::Index> offsets(layers);
    post[0] = x;
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        offsets[l] = off;
        Eigen::Map<const Eigen::MatrixXd> w(params_.data() + off, out, in);
        Eigen::Map<const Eigen::VectorXd> b(params_.data() + off + in * out, out);
        off += in * out + out;
        pre[l] = post[l] * w.transpose();
        pre[l].rowwise() += b.transpose();
        post[l + 1] = (l + 1 < layers) ? Eigen::MatrixXd(softplus(pre[l].array())) : pre[l];
    }

    Eigen::MatrixXd g;  // d loss / d pre[l]
    const double loss = out_grad(post[layers], g);
    if (!grad) return loss;

    grad->setZero(params_.size());
    for (std::size_t l = layers; l-- > 0;) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        Eigen::Map<Eigen::MatrixXd> gw(grad->data() + offsets[l], out, in);
        Eigen::Map<Eigen::VectorXd> gb(grad->data() + offsets[l] + in * out, out);
        gw.noalias() = g.transpose() * post[l];
        gb = g.colwise().sum().transpose();
        if (l > 0) {
            Eigen::Map<const Eigen::MatrixXd> w(params_.data() + offsets[l], out, in);
            Eigen::MatrixXd gh = g * w;
            g = (gh.array() * logistic(pre[l - 1].array())).matrix();
        }
    }
    return loss;
}

double Mlp::loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const QuantileLevels& levels,
                              Eigen::VectorXd* grad) const {
    if (y.size() != x.rows()) throw DimensionError("network rows and responses disagree in length");
    const double n = static_cast<double>(x.rows());
    return backprop(
        x,
        [&](const Eigen::MatrixXd& out, Eigen::MatrixXd& g) {
            g.resize(out.rows(), 2);
            double loss = 0.0;
            const double taus[2] = {levels.lo, levels.hi};
            for (int h = 0; h < 2; ++h) {
                for (Eigen::Index i = 0; i < out.rows(); ++i) {
                    const double r = y[i] - out(i, h);
                    loss += r >= 0.0 ? taus[h] * r : (taus[h] - 1.0) * r;
                    g(i, h) = pinball_subgradient(y[i], out(i, h), taus[h]) / n;
                }
            }
            return loss / n;
        },
        grad);
}

double Mlp::squared_loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      Eigen::VectorXd* grad) const {
    if (y.size() != x.rows()) throw DimensionError("network rows and responses disagree in length");
    const double n = static_cast<double>(x.rows());
    return backprop(
        x,
        [&](const Eigen::MatrixXd& out, Eigen::MatrixXd& g) {
            const Eigen::MatrixXd r = out.colwise() - y;
            g = r / n;
            return 0.5 * r.squaredNorm() / n;
        },
        grad);
}

QuantileModel fit_mlp_quantile(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const QuantileLevels& levels,
                               const MlpOptions& opts) {
    if (z.rows() != y.size()) throw DimensionError("feature rows and responses disagree in length");
    if (z.rows() == 0) throw ConfigError("cannot fit on an empty dataset");
    if (!(levels.lo > 0.0 && levels.lo < levels.hi && levels.hi < 1.0)) {
        throw ConfigError("quantile levels must satisfy 0 < lo < hi < 1");
    }
    const double n = static_cast<double>(z.rows());

    MlpQuantileNet m;
    m.x_mean = z.colwise().mean().transpose();
    m.x_scale = ((z.rowwise() - m.x_mean.transpose()).array().square().colwise().sum() / n).sqrt().transpose();
    for (Eigen::Index j = 0; j < m.x_scale.size(); ++j)
        if (!(m.x_scale[j] > 1e-12)) m.x_scale[j] = 1.0;
    m.y_mean = y.mean();
    m.y_scale = std::sqrt((y.array() - m.y_mean).square().mean());
    if (!(m.y_scale > 1e-12)) m.y_scale = 1.0;

    const Eigen::MatrixXd zt = (z.rowwise() - m.x_mean.transpose()).array().rowwise() / m.x_scale.transpose().array();
    const Eigen::VectorXd yt = (y.array() - m.y_mean) / m.y_scale;

    std::vector<int> sizes;
    sizes.push_back(static_cast<int>(z.cols()));
    for (int h : opts.hidden) sizes.push_back(h);
    sizes.push_back(2);
    m.net = Mlp(sizes, opts.seed);
    // Output biases start at the standard normal quantiles of the two levels.
    Eigen::VectorXd& theta = m.net.params();
    theta[theta.size() - 2] = normal_quantile(levels.lo);
    theta[theta.size() - 1] = normal_quantile(levels.hi);

    Eigen::VectorXd grad(theta.size());
    Eigen::VectorXd velocity = Eigen::VectorXd::Zero(theta.size());
    for (int e = 0; e < opts.epochs; ++e) {
        m.net.loss_and_gradient(zt, yt, levels, &grad);
        velocity = opts.momentum * velocity - opts.step * grad;
        theta += velocity;
    }
    if (!theta.allFinite()) throw NumericError("network training diverged");
    return QuantileModel(std::move(m), levels);
}

}  // namespace mda
