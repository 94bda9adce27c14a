#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "mda/impute.hpp"
#include "mda/missingness.hpp"
#include "mda/oracle.hpp"

using namespace mda;

namespace {

Eigen::MatrixXd correlated_gaussian(std::size_t n, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, Rng& rng) {
    const Eigen::MatrixXd l = sigma.llt().matrixL();
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), mu.size());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::VectorXd g(mu.size());
        for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = z(rng);
        x.row(i) = (mu + l * g).transpose();
    }
    return x;
}

IncompleteDataset mcar_dataset(std::size_t n, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, double p,
                               std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::MatrixXd x = correlated_gaussian(n, mu, sigma, rng);
    auto masks = gen_mcar(n, static_cast<std::size_t>(mu.size()), p, rng);
    return IncompleteDataset(x, std::move(masks), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("column mean") {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    const auto ds = IncompleteDataset::complete(x, Eigen::Vector3d::Zero());
    ImputerOptions opts;
    opts.kind = ImputerKind::ColumnMean;
    const auto imp = fit_imputer(ds, opts);
    CHECK(imp.means()[0] == doctest::Approx(2.0));

    Eigen::MatrixXd x3(2, 3);
    x3 << 5, 1, 1, 5, 3, 3;
    const auto ds3 = IncompleteDataset::complete(x3, Eigen::Vector2d::Zero());
    const auto imp3 = fit_imputer(ds3, opts);
    const std::vector<double> row{0.0, 6.0, 2.0};
    const Eigen::VectorXd out = imp3.impute(row, Mask::from_bits({1, 0, 0}));
    CHECK(out[0] == doctest::Approx(5.0));
    CHECK(out[1] == 6.0);
    CHECK(out[2] == 2.0);
}

TEST_CASE("constant imputer") {
    Eigen::MatrixXd x(2, 2);
    x << 1, 2, 3, 4;
    ImputerOptions opts;
    opts.kind = ImputerKind::Constant;
    opts.constants = {-1.0, 9.0};
    const auto imp = fit_imputer(IncompleteDataset::complete(x, Eigen::Vector2d::Zero()), opts);
    const std::vector<double> row{0.0, 0.0};
    const Eigen::VectorXd out = imp.impute(row, Mask::all(2));
    CHECK(out[0] == -1.0);
    CHECK(out[1] == 9.0);
    opts.constants = {1.0};
    CHECK_THROWS(fit_imputer(IncompleteDataset::complete(x, Eigen::Vector2d::Zero()), opts));
}

TEST_CASE("iterative ridge with zero sweeps is column-mean imputation") {
    const Eigen::Vector3d mu(1, -1, 2);
    const auto ds = mcar_dataset(400, mu, equicorrelated_cov(3, 0.6), 0.3, 1);
    ImputerOptions ir;
    ir.kind = ImputerKind::IterativeRidge;
    ir.iters = 0;
    ImputerOptions cm;
    cm.kind = ImputerKind::ColumnMean;
    const auto a = fit_imputer(ds, ir);
    const auto b = fit_imputer(ds, cm);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK((a.impute(ds.row(i)) - b.impute(ds.row(i))).norm() == 0.0);
}

TEST_CASE("observed coordinates are copied bit for bit") {
    const Eigen::Vector4d mu(0.3, 1, -2, 0.1);
    const auto ds = mcar_dataset(300, mu, equicorrelated_cov(4, 0.5), 0.25, 2);
    for (ImputerKind k : {ImputerKind::ColumnMean, ImputerKind::GaussianConditional, ImputerKind::IterativeRidge}) {
        ImputerOptions opts;
        opts.kind = k;
        const auto imp = fit_imputer(ds, opts);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto row = ds.row(i);
            const Eigen::VectorXd out = imp.impute(row);
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(std::isfinite(out[static_cast<Eigen::Index>(j)]));
                if (row.mask.observed(j)) CHECK(bit_equal(out[static_cast<Eigen::Index>(j)], row.values[j]));
            }
        }
        // complete rows are returned unchanged
        const std::vector<double> full{1.5, -0.25, 3.0, 1e-3};
        const Eigen::VectorXd same = imp.impute(full, Mask::none(4));
        for (std::size_t j = 0; j < 4; ++j) CHECK(bit_equal(same[static_cast<Eigen::Index>(j)], full[j]));
    }
}

TEST_CASE("gaussian conditional imputer") {
    const Eigen::Vector3d mu(1.0, -2.0, 0.5);
    Eigen::Matrix3d sigma;
    sigma << 1.0, 0.5, 0.2, 0.5, 2.0, -0.3, 0.2, -0.3, 1.5;
    const auto ds = mcar_dataset(100000, mu, sigma, 0.2, 3);
    ImputerOptions opts;
    opts.kind = ImputerKind::GaussianConditional;
    const auto imp = fit_imputer(ds, opts);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(imp.means()[j] - mu[j]) < 0.02);
    CHECK((imp.covariance() - sigma).cwiseAbs().maxCoeff() < 0.05);

    // all-missing rows get the fitted means
    const std::vector<double> zeros{0, 0, 0};
    CHECK((imp.impute(zeros, Mask::all(3)) - imp.means()).norm() == 0.0);

    // fill agrees with the oracle Schur complement on the fitted moments
    const std::vector<double> row{0.7, 0.0, 2.0};
    const Mask m = Mask::from_bits({0, 1, 0});
    const auto cond = gaussian_conditional(imp.means(), imp.covariance(), Eigen::Vector2d(0.7, 2.0), m);
    CHECK(imp.impute(row, m)[1] == doctest::Approx(cond.mean[0]).epsilon(1e-12));
}

TEST_CASE("gaussian conditional fill in the bivariate case") {
    const double phi = 0.6;
    Eigen::Matrix2d sigma;
    sigma << 1, phi, phi, 1;
    const auto ds = mcar_dataset(200000, Eigen::Vector2d::Zero(), sigma, 0.1, 4);
    ImputerOptions opts;
    opts.kind = ImputerKind::GaussianConditional;
    const auto imp = fit_imputer(ds, opts);
    for (double x1 : {-1.5, 0.3, 2.0}) {
        const std::vector<double> row{x1, 0.0};
        CHECK(std::abs(imp.impute(row, Mask::from_bits({0, 1}))[1] - phi * x1) < 0.02);
    }
}

TEST_CASE("indefinite pairwise covariance is a numeric error") {
    // Pairwise-complete estimates of corr(a,b)=1, corr(b,c)=1, corr(a,c)=-1.
    Eigen::MatrixXd x(30, 3);
    std::vector<Mask> masks;
    for (int i = 0; i < 30; ++i) {
        const double v = (i % 10) - 4.5;
        if (i < 10) {
            x.row(i) << v, v, 0;
            masks.push_back(Mask::from_bits({0, 0, 1}));
        } else if (i < 20) {
            x.row(i) << 0, v, v;
            masks.push_back(Mask::from_bits({1, 0, 0}));
        } else {
            x.row(i) << v, 0, -v;
            masks.push_back(Mask::from_bits({0, 1, 0}));
        }
    }
    const IncompleteDataset ds(x, masks, Eigen::VectorXd::Zero(30));
    ImputerOptions opts;
    opts.kind = ImputerKind::GaussianConditional;
    CHECK_THROWS_AS(fit_imputer(ds, opts), NumericError);
}

TEST_CASE("per-pattern means of imputed vectors are unbiased under MCAR") {
    const Eigen::Vector3d mu(2.0, -1.0, 0.5);
    const Eigen::MatrixXd sigma = equicorrelated_cov(3, 0.7);
    const auto train = mcar_dataset(20000, mu, sigma, 0.2, 5);
    const auto test = mcar_dataset(60000, mu, sigma, 0.3, 6);
    for (ImputerKind k : {ImputerKind::ColumnMean, ImputerKind::GaussianConditional}) {
        ImputerOptions opts;
        opts.kind = k;
        const auto imp = fit_imputer(train, opts);
        std::unordered_map<Mask, std::pair<Eigen::VectorXd, double>> acc;
        std::unordered_map<Mask, Eigen::VectorXd> acc2;
        for (std::size_t i = 0; i < test.size(); ++i) {
            const Eigen::VectorXd v = imp.impute(test.row(i));
            auto& a = acc.try_emplace(test.mask(i), Eigen::VectorXd::Zero(3), 0.0).first->second;
            auto& s = acc2.try_emplace(test.mask(i), Eigen::VectorXd::Zero(3)).first->second;
            a.first += v;
            a.second += 1.0;
            s += v.cwiseProduct(v);
        }
        for (const auto& [m, a] : acc) {
            if (a.second < 500) continue;
            const Eigen::VectorXd mean = a.first / a.second;
            const Eigen::VectorXd var = acc2.at(m) / a.second - mean.cwiseProduct(mean);
            for (int j = 0; j < 3; ++j) {
                // sampling error plus the train-mean estimation error
                const double se = std::sqrt(var[j] / a.second + sigma(j, j) / 16000.0);
                CHECK_MESSAGE(std::abs(mean[j] - mu[j]) < 3.0 * se + 1e-12, "pattern ", m.to_string(), " col ", j);
            }
        }
    }
}

TEST_CASE("iterative ridge reaches a fixed point") {
    const Eigen::Vector4d mu(0, 1, 2, 3);
    const auto ds = mcar_dataset(2000, mu, equicorrelated_cov(4, 0.5), 0.2, 7);
    const auto imp = fit_imputer(ds, ImputerOptions{});
    REQUIRE(imp.sweeps().size() == 10);
    const auto& last = imp.sweeps().back();
    const auto& prev = imp.sweeps()[imp.sweeps().size() - 2];
    double diff = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        diff = std::max(diff, std::abs(last[j].intercept - prev[j].intercept));
        diff = std::max(diff, (last[j].weights - prev[j].weights).cwiseAbs().maxCoeff());
    }
    CHECK(diff < 1e-6);
    CHECK(imp.lambda() > 0.0);
}

TEST_CASE("concat_mask and design matrix") {
    const Eigen::Vector2d x(1, 2);
    const Eigen::VectorXd z = concat_mask(x, Mask::from_bits({0, 1}));
    REQUIRE(z.size() == 4);
    CHECK(z[0] == 1);
    CHECK(z[1] == 2);
    CHECK(z[2] == 0);
    CHECK(z[3] == 1);
    CHECK(concat_mask(x, Mask::none(2)).tail(2).isZero());
    CHECK(z.head(2) == x);
    CHECK_THROWS(concat_mask(x, Mask::none(3)));

    const auto ds = mcar_dataset(50, Eigen::Vector3d::Zero(), equicorrelated_cov(3, 0.2), 0.3, 8);
    const auto imp = fit_imputer(ds, ImputerOptions{});
    const Eigen::MatrixXd dm = design_matrix(imp, ds, true);
    CHECK(dm.cols() == 6);
    for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK((dm.row(static_cast<Eigen::Index>(i)).transpose() - concat_mask(imp.impute(ds.row(i)), ds.mask(i))).norm() ==
              0.0);
    CHECK(design_matrix(imp, ds, false).cols() == 3);
}

TEST_CASE("imputer kind names") {
    CHECK(parse_imputer_kind("iterative_ridge") == ImputerKind::IterativeRidge);
    CHECK(parse_imputer_kind("mean") == ImputerKind::ColumnMean);
    CHECK(to_string(ImputerKind::GaussianConditional) == "gaussian_conditional");
    CHECK_THROWS_AS(parse_imputer_kind("mice"), ConfigError);
}
