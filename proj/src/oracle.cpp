#include "mda/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mda/normal.hpp"

namespace mda {

namespace {

void validate_moments(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, std::size_t d) {
    if (static_cast<std::size_t>(mu.size()) != d || static_cast<std::size_t>(sigma.rows()) != d ||
        static_cast<std::size_t>(sigma.cols()) != d) {
        throw DimensionError("Gaussian moments do not match the coefficient dimension");
    }
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ConfigError("covariance matrix is not symmetric");
    }
    const double lam = min_eigenvalue(sigma);
    if (!(lam > 1e-10)) {
        std::ostringstream msg;
        msg << "covariance matrix is not positive definite (min eigenvalue " << lam << ")";
        throw ConfigError(msg.str());
    }
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& a, const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                a(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<std::size_t>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(idx[i])];
    return out;
}

// Factorizes Sigma_oo; throws with the condition number if that fails.
Eigen::LLT<Eigen::MatrixXd> factor_observed(const Eigen::MatrixXd& s_oo) {
    Eigen::LLT<Eigen::MatrixXd> llt(s_oo);
    bool ok = llt.info() == Eigen::Success;
    if (ok && s_oo.size() > 0) {
        // Cheap screen on the Cholesky pivots before paying for eigenvalues.
        const Eigen::VectorXd piv = llt.matrixLLT().diagonal().array().square();
        ok = piv.minCoeff() > 1e-13 * piv.maxCoeff();
    }
    if (!ok) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s_oo, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        std::ostringstream msg;
        msg << "observed covariance block is singular (condition number " << cond << ")";
        throw NumericError(msg.str());
    }
    return llt;
}

}  // namespace

GaussianLinearModel::GaussianLinearModel(Eigen::VectorXd beta, double noise_var, Eigen::VectorXd mu,
                                         Eigen::MatrixXd sigma)
    : beta_(std::move(beta)), noise_var_(noise_var), shared_{std::move(mu), std::move(sigma)} {
    if (!(noise_var_ > 0.0)) throw ConfigError("noise variance must be positive");
    validate_moments(shared_.mu, shared_.sigma, dim());
}

void GaussianLinearModel::set_pattern_moments(const Mask& m, Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
    if (m.dim() != dim()) throw DimensionError("pattern dimension mismatch");
    validate_moments(mu, sigma, dim());
    per_pattern_[m] = GaussianMoments{std::move(mu), std::move(sigma)};
}

const GaussianMoments& GaussianLinearModel::moments(const Mask& m) const {
    auto it = per_pattern_.find(m);
    return it == per_pattern_.end() ? shared_ : it->second;
}

Eigen::MatrixXd equicorrelated_cov(std::size_t d, double phi) {
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(n, n, phi);
    s.diagonal().array() = 1.0;
    return s;
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver did not converge");
    return es.eigenvalues().minCoeff();
}

ConditionalMoments gaussian_conditional(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                        const Eigen::VectorXd& x_obs, const Mask& m) {
    const std::size_t d = m.dim();
    if (static_cast<std::size_t>(mu.size()) != d || static_cast<std::size_t>(sigma.rows()) != d) {
        throw DimensionError("gaussian_conditional: dimension mismatch");
    }
    const auto obs = m.obs_indices();
    const auto mis = m.mis_indices();
    if (static_cast<std::size_t>(x_obs.size()) != obs.size()) {
        throw DimensionError("gaussian_conditional: x_obs length differs from the observed count");
    }
    ConditionalMoments out;
    out.mean = gather(mu, mis);
    out.cov = gather(sigma, mis, mis);
    if (obs.empty() || mis.empty()) return out;

    const Eigen::MatrixXd s_oo = gather(sigma, obs, obs);
    const Eigen::MatrixXd s_mo = gather(sigma, mis, obs);
    const auto llt = factor_observed(s_oo);
    out.mean += s_mo * llt.solve(x_obs - gather(mu, obs));
    out.cov -= s_mo * llt.solve(s_mo.transpose());
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

Eigen::MatrixXd conditional_covariance(const Eigen::MatrixXd& sigma, const Mask& m) {
    const auto obs = m.obs_indices();
    const auto mis = m.mis_indices();
    Eigen::MatrixXd cov = gather(sigma, mis, mis);
    if (obs.empty() || mis.empty()) return cov;
    const Eigen::MatrixXd s_mo = gather(sigma, mis, obs);
    const auto llt = factor_observed(gather(sigma, obs, obs));
    cov -= s_mo * llt.solve(s_mo.transpose());
    return 0.5 * (cov + cov.transpose());
}

double ConditionalGaussian::sd() const { return std::sqrt(var); }

ConditionalGaussian glm_predictive(const GaussianLinearModel& glm, const Eigen::VectorXd& x_obs, const Mask& m) {
    if (m.dim() != glm.dim()) throw DimensionError("glm_predictive: mask dimension mismatch");
    const auto& mom = glm.moments(m);
    const auto cond = gaussian_conditional(mom.mu, mom.sigma, x_obs, m);
    const Eigen::VectorXd b_obs = gather(glm.beta(), m.obs_indices());
    const Eigen::VectorXd b_mis = gather(glm.beta(), m.mis_indices());
    ConditionalGaussian out;
    out.mean = b_obs.dot(x_obs) + b_mis.dot(cond.mean);
    out.var = b_mis.dot(cond.cov * b_mis) + glm.noise_var();
    // Rounding can push the quadratic form a hair below zero.
    out.var = std::max(out.var, glm.noise_var());
    return out;
}

PredictiveSet oracle_interval(const GaussianLinearModel& glm, const Eigen::VectorXd& x_obs, const Mask& m,
                              double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("oracle_interval: alpha must lie in (0,1]");
    const auto pred = glm_predictive(glm, x_obs, m);
    if (alpha == 1.0) return PredictiveSet::point(pred.mean);
    const double half = normal_quantile(1.0 - alpha / 2.0) * pred.sd();
    return PredictiveSet::interval(pred.mean - half, pred.mean + half);
}

double interquantile_glm(const GaussianLinearModel& glm, const Eigen::VectorXd& x_obs, const Mask& m,
                         double beta_level, double gamma_level) {
    if (!(beta_level > 0.0 && beta_level <= 0.5 && gamma_level >= 0.5 && gamma_level < 1.0)) {
        throw ConfigError("interquantile_glm: levels must satisfy 0 < beta <= 1/2 <= gamma < 1");
    }
    const auto pred = glm_predictive(glm, x_obs, m);
    return (normal_quantile(gamma_level) - normal_quantile(beta_level)) * pred.sd();
}

double variance_isotone_check(const Eigen::MatrixXd& sigma, const Mask& m, const Mask& m2) {
    if (!mask_subset(m, m2)) throw ConfigError("variance_isotone_check: m must be included in m2");
    const Eigen::MatrixXd big = conditional_covariance(sigma, m2);
    const auto mis2 = m2.mis_indices();
    const auto mis1 = m.mis_indices();
    const Eigen::MatrixXd small = conditional_covariance(sigma, m);
    // Position of each mis(m) coordinate inside mis(m2).
    std::vector<Eigen::Index> pos(mis1.size());
    for (std::size_t a = 0, b = 0; a < mis1.size(); ++a) {
        while (mis2[b] != mis1[a]) ++b;
        pos[a] = static_cast<Eigen::Index>(b);
    }
    Eigen::MatrixXd diff = big;
    for (std::size_t a = 0; a < mis1.size(); ++a)
        for (std::size_t b = 0; b < mis1.size(); ++b)
            diff(pos[a], pos[b]) -= small(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    return min_eigenvalue(0.5 * (diff + diff.transpose()));
}

HardnessBound hardness_delta(double rho, std::size_t n, HardnessVariant variant) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("hardness_delta: rho must lie in [0,1]");
    const double np1 = static_cast<double>(n) + 1.0;
    double base_drop;  // the quantity subtracted from 1 inside the power
    double loose_scale;
    if (variant == HardnessVariant::General) {
        base_drop = 0.5 * rho * rho;
        loose_scale = 1.0;
    } else {
        if (rho > 1.0 / std::sqrt(2.0) + 1e-15) {
            throw ConfigError("hardness_delta: the Y-independent-of-M variant needs rho <= 1/sqrt(2)");
        }
        base_drop = std::min(1.0, 2.0 * rho * rho);
        loose_scale = 2.0;
    }
    // 1 - (1 - b)^(n+1) without cancellation for small b.
    const double inner = base_drop >= 1.0 ? 1.0 : -std::expm1(np1 * std::log1p(-base_drop));
    HardnessBound out;
    out.delta = std::sqrt(2.0 * inner);
    out.loose = loose_scale * rho * std::sqrt(np1);
    return out;
}

std::pair<double, double> hetero_model_variances(double sigma2, double tau2, double beta) {
    if (!(sigma2 > 0.0) || !(tau2 > 0.0)) throw ConfigError("hetero_model_variances: variances must be positive");
    return {tau2 * sigma2, (beta * beta + tau2) * sigma2};
}

double hetero_model_obs_variance(double x, double tau2) { return x * x * tau2; }

double mcar_bayes_risk(const GaussianLinearModel& glm, const Eigen::VectorXd& p) {
    const std::size_t d = glm.dim();
    if (static_cast<std::size_t>(p.size()) != d) throw DimensionError("mcar_bayes_risk: p length mismatch");
    double risk = glm.noise_var();
    for (const Mask& m : all_masks(d)) {
        double prob = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double pj = p[static_cast<Eigen::Index>(j)];
            prob *= m.missing(j) ? pj : 1.0 - pj;
        }
        if (prob == 0.0 || m.num_missing() == 0) continue;
        const auto& mom = glm.moments(m);
        const Eigen::VectorXd b_mis = gather(glm.beta(), m.mis_indices());
        risk += prob * b_mis.dot(conditional_covariance(mom.sigma, m) * b_mis);
    }
    return risk;
}

}  // namespace mda
