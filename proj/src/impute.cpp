#include "mda/impute.hpp"

#include "mda/oracle.hpp"
#include "mda/regress.hpp"

namespace mda {

ImputerKind parse_imputer_kind(const std::string& name) {
    if (name == "constant") return ImputerKind::Constant;
    if (name == "column_mean" || name == "mean") return ImputerKind::ColumnMean;
    if (name == "gaussian_conditional") return ImputerKind::GaussianConditional;
    if (name == "iterative_ridge") return ImputerKind::IterativeRidge;
    throw ConfigError("unknown imputer kind '" + name + "'");
}

std::string to_string(ImputerKind kind) {
    switch (kind) {
        case ImputerKind::Constant: return "constant";
        case ImputerKind::ColumnMean: return "column_mean";
        case ImputerKind::GaussianConditional: return "gaussian_conditional";
        case ImputerKind::IterativeRidge: return "iterative_ridge";
    }
    return "unknown";
}

namespace {

Eigen::VectorXd observed_means(const IncompleteDataset& data) {
    const std::size_t d = data.dim();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const PartialRow r = data.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (r.mask.observed(j)) {
                sum[static_cast<Eigen::Index>(j)] += r.values[j];
                cnt[static_cast<Eigen::Index>(j)] += 1.0;
            }
        }
    }
    // A column with no observed entry is filled with 0.
    for (Eigen::Index j = 0; j < sum.size(); ++j) sum[j] = cnt[j] > 0 ? sum[j] / cnt[j] : 0.0;
    return sum;
}

// Pairwise-complete covariance around the observed means.
Eigen::MatrixXd pairwise_covariance(const IncompleteDataset& data, const Eigen::VectorXd& mu) {
    const auto d = static_cast<Eigen::Index>(data.dim());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd dev(d);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const PartialRow r = data.row(i);
        for (Eigen::Index j = 0; j < d; ++j) dev[j] = r.values[static_cast<std::size_t>(j)] - mu[j];
        for (Eigen::Index j = 0; j < d; ++j) {
            if (r.mask.missing(static_cast<std::size_t>(j))) continue;
            for (Eigen::Index k = j; k < d; ++k) {
                if (r.mask.missing(static_cast<std::size_t>(k))) continue;
                s(j, k) += dev[j] * dev[k];
                c(j, k) += 1.0;
            }
        }
    }
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index k = j; k < d; ++k) {
            const double v = c(j, k) > 1.0 ? s(j, k) / (c(j, k) - 1.0) : (j == k ? 1.0 : 0.0);
            s(j, k) = v;
            s(k, j) = v;
        }
    }
    return s;
}

// Other-column values of row x for target column j.
Eigen::VectorXd others(const Eigen::VectorXd& x, Eigen::Index j) {
    Eigen::VectorXd o(x.size() - 1);
    o.head(j) = x.head(j);
    o.tail(x.size() - 1 - j) = x.tail(x.size() - 1 - j);
    return o;
}

}  // namespace

ImputationModel fit_imputer(const IncompleteDataset& train, const ImputerOptions& opts) {
    if (train.empty()) throw ConfigError("cannot fit an imputer on an empty dataset");
    const std::size_t d = train.dim();
    const auto de = static_cast<Eigen::Index>(d);
    ImputationModel m;
    m.kind_ = opts.kind;
    m.means_ = observed_means(train);

    switch (opts.kind) {
        case ImputerKind::Constant: {
            if (opts.constants.size() != d) throw ConfigError("constant imputer needs one value per column");
            m.constants_ = Eigen::Map<const Eigen::VectorXd>(opts.constants.data(), de);
            break;
        }
        case ImputerKind::ColumnMean: break;
        case ImputerKind::GaussianConditional: {
            m.cov_ = pairwise_covariance(train, m.means_);
            m.cov_.diagonal().array() += 1e-8;
            Eigen::LLT<Eigen::MatrixXd> llt(m.cov_);
            if (llt.info() != Eigen::Success) {
                throw NumericError("sample covariance is not positive definite after jitter");
            }
            break;
        }
        case ImputerKind::IterativeRidge: {
            if (opts.iters < 0) throw ConfigError("iteration count must be nonnegative");
            const Eigen::MatrixXd cov = pairwise_covariance(train, m.means_);
            m.lambda_ = opts.lambda >= 0.0 ? opts.lambda : 1e-3 * cov.trace() / static_cast<double>(d);
            if (d < 2) break;

            const std::size_t n = train.size();
            Eigen::MatrixXd fill(static_cast<Eigen::Index>(n), de);
            for (std::size_t i = 0; i < n; ++i) {
                const PartialRow r = train.row(i);
                for (std::size_t j = 0; j < d; ++j)
                    fill(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        r.mask.missing(j) ? m.means_[static_cast<Eigen::Index>(j)] : r.values[j];
            }
            for (int t = 0; t < opts.iters; ++t) {
                std::vector<ColumnRegression> sweep(d);
                for (Eigen::Index j = 0; j < de; ++j) {
                    std::vector<Eigen::Index> obs_rows, mis_rows;
                    for (std::size_t i = 0; i < n; ++i)
                        (train.mask(i).observed(static_cast<std::size_t>(j)) ? obs_rows : mis_rows)
                            .push_back(static_cast<Eigen::Index>(i));
                    auto& reg = sweep[static_cast<std::size_t>(j)];
                    if (obs_rows.size() < 2) {
                        reg.intercept = m.means_[j];
                        reg.weights = Eigen::VectorXd::Zero(de - 1);
                    } else {
                        Eigen::MatrixXd z(static_cast<Eigen::Index>(obs_rows.size()), de - 1);
                        Eigen::VectorXd y(static_cast<Eigen::Index>(obs_rows.size()));
                        for (std::size_t a = 0; a < obs_rows.size(); ++a) {
                            const Eigen::VectorXd row = fill.row(obs_rows[a]).transpose();
                            z.row(static_cast<Eigen::Index>(a)) = others(row, j).transpose();
                            y[static_cast<Eigen::Index>(a)] = row[j];
                        }
                        const MeanModel mm = fit_ridge(z, y, m.lambda_);
                        reg.intercept = mm.intercept;
                        reg.weights = mm.coef;
                    }
                    for (Eigen::Index i : mis_rows) {
                        const Eigen::VectorXd row = fill.row(i).transpose();
                        fill(i, j) = reg.intercept + reg.weights.dot(others(row, j));
                    }
                }
                m.sweeps_.push_back(std::move(sweep));
            }
            break;
        }
    }
    return m;
}

Eigen::VectorXd ImputationModel::impute(std::span<const double> values, const Mask& m) const {
    const std::size_t d = dim();
    if (values.size() != d || m.dim() != d) throw DimensionError("imputation input dimension mismatch");
    Eigen::VectorXd out(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
        const auto je = static_cast<Eigen::Index>(j);
        out[je] = m.missing(j) ? (kind_ == ImputerKind::Constant ? constants_[je] : means_[je]) : values[j];
    }
    if (m.num_missing() == 0 || m.num_observed() == 0) return out;

    if (kind_ == ImputerKind::GaussianConditional) {
        const auto obs = m.obs_indices();
        const auto mis = m.mis_indices();
        Eigen::VectorXd x_obs(static_cast<Eigen::Index>(obs.size()));
        for (std::size_t a = 0; a < obs.size(); ++a) x_obs[static_cast<Eigen::Index>(a)] = values[obs[a]];
        const ConditionalMoments cm = gaussian_conditional(means_, cov_, x_obs, m);
        for (std::size_t a = 0; a < mis.size(); ++a)
            out[static_cast<Eigen::Index>(mis[a])] = cm.mean[static_cast<Eigen::Index>(a)];
    } else if (kind_ == ImputerKind::IterativeRidge) {
        const auto mis = m.mis_indices();
        for (const auto& sweep : sweeps_) {
            for (std::size_t j : mis) {
                const auto je = static_cast<Eigen::Index>(j);
                const auto& reg = sweep[j];
                out[je] = reg.intercept + reg.weights.dot(others(out, je));
            }
        }
    }
    return out;
}

Eigen::MatrixXd ImputationModel::impute_all(const IncompleteDataset& data) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < data.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = impute(data.row(i)).transpose();
    return out;
}

Eigen::VectorXd concat_mask(const Eigen::VectorXd& x_imputed, const Mask& m) {
    if (static_cast<std::size_t>(x_imputed.size()) != m.dim()) throw DimensionError("concat_mask: dimension mismatch");
    const Eigen::Index d = x_imputed.size();
    Eigen::VectorXd out(2 * d);
    out.head(d) = x_imputed;
    for (Eigen::Index j = 0; j < d; ++j) out[d + j] = m.missing(static_cast<std::size_t>(j)) ? 1.0 : 0.0;
    return out;
}

Eigen::MatrixXd design_matrix(const ImputationModel& imp, const IncompleteDataset& data, bool with_mask) {
    const auto d = static_cast<Eigen::Index>(data.dim());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(data.size()), with_mask ? 2 * d : d);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const PartialRow r = data.row(i);
        const Eigen::VectorXd x = imp.impute(r);
        out.row(static_cast<Eigen::Index>(i)).head(d) = x.transpose();
        if (with_mask)
            for (Eigen::Index j = 0; j < d; ++j)
                out(static_cast<Eigen::Index>(i), d + j) = r.mask.missing(static_cast<std::size_t>(j)) ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace mda
