#pragma once

// Closed-form quantities for the Gaussian linear model Y = beta'X + eps with
// X | M=m ~ N(mu^m, Sigma^m), plus the hardness bounds and Model 1 identities.

#include <unordered_map>
#include <utility>

#include <Eigen/Dense>

#include "mda/core.hpp"

namespace mda {

struct GaussianMoments {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
};

class GaussianLinearModel {
public:
    // Shared (MCAR) feature law. Throws ConfigError unless sigma is symmetric
    // with smallest eigenvalue above 1e-10.
    GaussianLinearModel(Eigen::VectorXd beta, double noise_var, Eigen::VectorXd mu, Eigen::MatrixXd sigma);

    // Registers a pattern-specific law; patterns without one use the shared law.
    void set_pattern_moments(const Mask& m, Eigen::VectorXd mu, Eigen::MatrixXd sigma);

    std::size_t dim() const { return static_cast<std::size_t>(beta_.size()); }
    const Eigen::VectorXd& beta() const { return beta_; }
    double noise_var() const { return noise_var_; }
    const GaussianMoments& moments(const Mask& m) const;
    const GaussianMoments& shared_moments() const { return shared_; }

private:
    Eigen::VectorXd beta_;
    double noise_var_;
    GaussianMoments shared_;
    std::unordered_map<Mask, GaussianMoments> per_pattern_;
};

// Equicorrelated covariance phi*11' + (1-phi)*I.
Eigen::MatrixXd equicorrelated_cov(std::size_t d, double phi);

// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
double min_eigenvalue(const Eigen::MatrixXd& a);

struct ConditionalMoments {
    Eigen::VectorXd mean;  // over mis(m), index order
    Eigen::MatrixXd cov;
};

// Law of X_mis given X_obs = x_obs (x_obs in obs(m) index order).
// Throws NumericError, with the condition number in the message, when the
// observed block cannot be factorized.
ConditionalMoments gaussian_conditional(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                        const Eigen::VectorXd& x_obs, const Mask& m);

// Covariance part only; it does not depend on x_obs.
Eigen::MatrixXd conditional_covariance(const Eigen::MatrixXd& sigma, const Mask& m);

struct ConditionalGaussian {
    double mean = 0.0;
    double var = 0.0;
    double sd() const;
};

ConditionalGaussian glm_predictive(const GaussianLinearModel& glm, const Eigen::VectorXd& x_obs, const Mask& m);

// mean +- z_{1-alpha/2} sd. alpha in (0,1]; alpha = 1 gives the point {mean}.
PredictiveSet oracle_interval(const GaussianLinearModel& glm, const Eigen::VectorXd& x_obs, const Mask& m,
                              double alpha);

// (z_gamma - z_beta) * sd, requires beta_level <= 1/2 <= gamma_level.
double interquantile_glm(const GaussianLinearModel& glm, const Eigen::VectorXd& x_obs, const Mask& m,
                         double beta_level, double gamma_level);

// Smallest eigenvalue of Sigma^{m2}_{mis|obs} minus the zero-padded
// Sigma^{m}_{mis|obs}; nonnegative whenever conditional variance grows with
// the mask. Requires m subset of m2.
double variance_isotone_check(const Eigen::MatrixXd& sigma, const Mask& m, const Mask& m2);

enum class HardnessVariant { General, YIndependentOfM };

struct HardnessBound {
    double delta = 0.0;  // closed form, in [0, sqrt(2)]
    double loose = 0.0;  // linear-in-rho bound
};

// General: sqrt(2(1 - (1 - rho^2/2)^(n+1))), loose rho*sqrt(n+1).
// Y independent of M: sqrt(2(1 - (1 - 2 rho^2)^(n+1))), loose 2*rho*sqrt(n+1),
// needs rho <= 1/sqrt(2).
HardnessBound hardness_delta(double rho, std::size_t n, HardnessVariant variant = HardnessVariant::General);

// Model 1 (Y = beta X + X xi, X ~ N(0, s2), xi ~ N(0, t2)):
// first = E[Var(Y | X, M=0)] = t2*s2, second = Var(Y | M=1) = (beta^2 + t2)*s2.
std::pair<double, double> hetero_model_variances(double sigma2, double tau2, double beta);

// Var(Y | X=x, M=0) in Model 1.
double hetero_model_obs_variance(double x, double tau2);

// Bayes risk of the best mean predictor from (X_obs, M) under independent
// per-column missingness with probabilities p[j]:
// noise_var + sum_m P(m) beta_mis' Sigma_{mis|obs} beta_mis.
double mcar_bayes_risk(const GaussianLinearModel& glm, const Eigen::VectorXd& p);

}  // namespace mda
