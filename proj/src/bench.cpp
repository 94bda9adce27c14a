#include "mda/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "mda/conformal.hpp"
#include "mda/oracle.hpp"

namespace mda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd feature_factor(const ExperimentConfig& cfg) {
    if (!(cfg.phi >= 0.0 && cfg.phi < 1.0)) throw ConfigError("phi must lie in [0,1)");
    Eigen::LLT<Eigen::MatrixXd> llt(equicorrelated_cov(cfg.d, cfg.phi));
    if (llt.info() != Eigen::Success) throw ConfigError("feature covariance is not positive definite");
    return llt.matrixL();
}

double glm_response(const ExperimentConfig& cfg, const Eigen::VectorXd& x, Rng& rng) {
    std::normal_distribution<double> eps(0.0, std::sqrt(cfg.noise_var));
    return cfg.beta.dot(x) + eps(rng);
}

double mcar_probability(const MechanismSpec& spec) { return std::get<Mcar>(spec.kind).p; }

// P(sum of independent Bernoulli(p[c]) over c >= j equals r), for all j, r.
std::vector<std::vector<double>> tail_counts(const std::vector<double>& p) {
    const std::size_t k = p.size();
    std::vector<std::vector<double>> t(k + 1, std::vector<double>(k + 1, 0.0));
    t[k][0] = 1.0;
    for (std::size_t j = k; j-- > 0;) {
        for (std::size_t r = 0; r <= k - j; ++r) {
            t[j][r] = (1.0 - p[j]) * t[j + 1][r] + (r > 0 ? p[j] * t[j + 1][r - 1] : 0.0);
        }
    }
    return t;
}

std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    const double a = v[n / 2 - 1];
    const double b = v[n / 2];
    if (std::isinf(a) || std::isinf(b)) return std::isinf(a) ? a : b;
    return 0.5 * (a + b);
}

struct Accumulator {
    std::vector<double> lengths;
    std::size_t covered = 0;
    std::size_t infinite = 0;

    void add(const PredictiveSet& s, double y) {
        if (s.contains(y)) ++covered;
        if (s.is_infinite()) ++infinite;
        lengths.push_back(s.length());
    }

    void add_hull(const PredictiveSet& s, double y) {
        if (s.empty()) {
            lengths.push_back(0.0);
            return;
        }
        const Interval h = s.hull();
        if (h.contains(y)) ++covered;
        if (std::isinf(h.lo) || std::isinf(h.hi)) ++infinite;
        lengths.push_back(h.length());
    }

    ResultRow row(std::size_t rep, const std::string& method, const TestGroup& g) const {
        ResultRow r;
        r.rep = rep;
        r.method = method;
        r.key_kind = g.key_kind;
        r.key = g.key;
        const double n = static_cast<double>(lengths.size());
        r.coverage = static_cast<double>(covered) / n;
        double sum = 0.0;
        for (double l : lengths) sum += l;
        r.mean_length = sum / n;
        r.median_length = median_of(lengths);
        r.inf_fraction = static_cast<double>(infinite) / n;
        return r;
    }
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string f;
    std::istringstream ss(line);
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_metric(const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw ConfigError("cannot parse metric '" + s + "'");
    }
}

}  // namespace

Eigen::MatrixXd gen_glm_features(const ExperimentConfig& cfg, std::size_t n, Rng& rng) {
    const Eigen::MatrixXd l = feature_factor(cfg);
    const auto d = static_cast<Eigen::Index>(cfg.d);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd g(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = z(rng);
    Eigen::MatrixXd x = g * l.transpose();
    x.array() += 1.0;
    return x;
}

CompleteData gen_glm_dataset(const ExperimentConfig& cfg, std::size_t n, Rng& rng) {
    if (static_cast<std::size_t>(cfg.beta.size()) != cfg.d) throw ConfigError("beta must have d entries");
    CompleteData out;
    out.x = gen_glm_features(cfg, n, rng);
    out.y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < out.x.rows(); ++i) out.y[i] = glm_response(cfg, out.x.row(i).transpose(), rng);
    return out;
}

CompleteData gen_glm_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    return gen_glm_dataset(cfg, cfg.n_train + cfg.n_cal, rng);
}

double ydepm_response(std::span<const double> x, const Mask& m, double eps) {
    if (x.size() != 3 || m.dim() != 3) throw DimensionError("the y-dep-m response needs d = 3");
    double y = m.missing(0) ? 2.0 * x[0] : x[0];
    if (m.missing(1) && m.missing(2)) y += 3.0 * x[1];
    return y + eps;
}

IncompleteDataset gen_ydepm_dataset(const ExperimentConfig& cfg, std::size_t n, Rng& rng) {
    if (cfg.d != 3) throw ConfigError("the y-dep-m scenario needs d = 3");
    const Eigen::MatrixXd x = gen_glm_features(cfg, n, rng);
    const double p = mcar_probability(cfg.mechanism);
    const std::vector<Mask> masks = gen_mcar(n, 3, p, rng);
    std::normal_distribution<double> eps(0.0, std::sqrt(cfg.noise_var));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd row = x.row(static_cast<Eigen::Index>(i)).transpose();
        y[static_cast<Eigen::Index>(i)] = ydepm_response(std::span<const double>(row.data(), 3), masks[i], eps(rng));
    }
    return IncompleteDataset(x, masks, y);
}

IncompleteDataset gen_ydepm_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    return gen_ydepm_dataset(cfg, cfg.n_train + cfg.n_cal, rng);
}

Model1Sample sample_model1(std::size_t n, double sigma2, double tau2, double beta, double rho, Rng& rng) {
    if (!(sigma2 > 0.0 && tau2 > 0.0)) throw ConfigError("Model 1 variances must be positive");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("mask probability must lie in [0,1]");
    std::normal_distribution<double> xd(0.0, std::sqrt(sigma2));
    std::normal_distribution<double> xi(0.0, std::sqrt(tau2));
    Model1Sample s;
    s.x.resize(static_cast<Eigen::Index>(n));
    s.y.resize(static_cast<Eigen::Index>(n));
    s.m.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = xd(rng);
        const auto ie = static_cast<Eigen::Index>(i);
        s.x[ie] = x;
        s.y[ie] = beta * x + x * xi(rng);
        s.m[i] = uniform01(rng) < rho ? 1 : 0;
    }
    return s;
}

namespace {

IncompleteDataset rows_with_masks(const ExperimentConfig& cfg, const Eigen::MatrixXd& x, std::vector<Mask> masks,
                                  Rng& rng) {
    Eigen::VectorXd y(x.rows());
    std::normal_distribution<double> eps(0.0, std::sqrt(cfg.noise_var));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::VectorXd row = x.row(i).transpose();
        if (cfg.scenario == Scenario::YDepM) {
            y[i] = ydepm_response(std::span<const double>(row.data(), 3), masks[static_cast<std::size_t>(i)], eps(rng));
        } else {
            y[i] = cfg.beta.dot(row) + eps(rng);
        }
    }
    return IncompleteDataset(x, std::move(masks), std::move(y));
}

bool is_mcar(const FittedMechanism& mech) { return std::holds_alternative<Mcar>(mech.spec.kind); }

struct GroupKey {
    std::string kind, key;
    std::size_t size = 0;  // size mode
    Mask pattern;          // pattern mode
};

std::vector<GroupKey> conditional_keys(const ExperimentConfig& cfg, const FittedMechanism& mech) {
    const auto& cols = mech.missing_cols;
    std::vector<GroupKey> keys;
    if (cfg.conditioning == Conditioning::Size) {
        const std::size_t top = std::min(cols.size(), cfg.d - 1);
        for (std::size_t s = 0; s <= top; ++s) keys.push_back({"size", std::to_string(s), s, Mask::none(cfg.d)});
    } else {
        const std::size_t k = cols.size();
        std::vector<Mask> pats;
        for (std::uint64_t sub = 0; sub < (std::uint64_t{1} << k); ++sub) {
            std::uint64_t bits = 0;
            for (std::size_t c = 0; c < k; ++c)
                if ((sub >> c) & 1u) bits |= std::uint64_t{1} << cols[c];
            pats.emplace_back(cfg.d, bits);
        }
        std::sort(pats.begin(), pats.end(), [](const Mask& a, const Mask& b) { return a.bits() < b.bits(); });
        // The fully missing row carries no features, matching the size range above.
        for (const Mask& m : pats)
            if (m.num_missing() < cfg.d) keys.push_back({"pattern", m.to_string(), m.num_missing(), m});
    }
    return keys;
}

Mask random_subset_mask(std::size_t d, const std::vector<std::size_t>& cols, std::size_t s, Rng& rng) {
    std::vector<std::size_t> c = cols;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (c.size() - i));
        std::swap(c[i], c[j]);
        bits |= std::uint64_t{1} << c[i];
    }
    return Mask(d, bits);
}

}  // namespace

TestGroup build_marginal_testset(const ExperimentConfig& cfg, const FittedMechanism& mech, Rng& rng) {
    TestGroup g{"marginal", "all", {}};
    if (cfg.scenario == Scenario::YDepM) {
        g.data = gen_ydepm_dataset(cfg, cfg.n_test_marginal, rng);
        return g;
    }
    const Eigen::MatrixXd x = gen_glm_features(cfg, cfg.n_test_marginal, rng);
    std::vector<Mask> masks = apply_mechanism(mech, x, rng);
    g.data = rows_with_masks(cfg, x, std::move(masks), rng);
    return g;
}

std::vector<TestGroup> build_conditional_testset(const ExperimentConfig& cfg, const FittedMechanism& mech, Rng& rng) {
    const auto keys = conditional_keys(cfg, mech);
    const auto& cols = mech.missing_cols;
    std::vector<TestGroup> out;
    out.reserve(keys.size());

    if (is_mcar(mech)) {
        for (const auto& k : keys) {
            const Eigen::MatrixXd x = gen_glm_features(cfg, cfg.n_per_pattern, rng);
            std::vector<Mask> masks;
            masks.reserve(cfg.n_per_pattern);
            for (std::size_t i = 0; i < cfg.n_per_pattern; ++i)
                masks.push_back(k.kind == "size" ? random_subset_mask(cfg.d, cols, k.size, rng) : k.pattern);
            out.push_back({k.kind, k.key, rows_with_masks(cfg, x, std::move(masks), rng)});
        }
        return out;
    }

    // Mechanism-aware groups: resample a pool of fresh rows with weights
    // P(group | x), then draw the mask from M | x, group.
    const Eigen::MatrixXd pool = gen_glm_features(cfg, cfg.sampling_pool, rng);
    const auto np = static_cast<std::size_t>(pool.rows());
    std::vector<std::vector<double>> probs(np);  // over cols
    std::vector<std::vector<std::vector<double>>> tails(np);
    for (std::size_t i = 0; i < np; ++i) {
        const Eigen::VectorXd row = pool.row(static_cast<Eigen::Index>(i)).transpose();
        const auto p = missing_probabilities(mech, std::span<const double>(row.data(), cfg.d));
        probs[i].resize(cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) probs[i][c] = p[cols[c]];
        if (cfg.conditioning == Conditioning::Size) tails[i] = tail_counts(probs[i]);
    }
    for (const auto& k : keys) {
        std::vector<double> cum(np);
        double total = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
            double w;
            if (k.kind == "size") {
                w = tails[i][0][k.size];
            } else {
                w = 1.0;
                for (std::size_t c = 0; c < cols.size(); ++c)
                    w *= k.pattern.missing(cols[c]) ? probs[i][c] : 1.0 - probs[i][c];
            }
            total += w;
            cum[i] = total;
        }
        if (!(total > 0.0)) {
            out.push_back({k.kind, k.key, IncompleteDataset{}});
            continue;
        }
        Eigen::MatrixXd x(static_cast<Eigen::Index>(cfg.n_per_pattern), static_cast<Eigen::Index>(cfg.d));
        std::vector<Mask> masks;
        masks.reserve(cfg.n_per_pattern);
        for (std::size_t r = 0; r < cfg.n_per_pattern; ++r) {
            const double u = uniform01(rng) * total;
            const auto it = std::upper_bound(cum.begin(), cum.end(), u);
            const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), np - 1);
            x.row(static_cast<Eigen::Index>(r)) = pool.row(static_cast<Eigen::Index>(i));
            if (k.kind == "pattern") {
                masks.push_back(k.pattern);
                continue;
            }
            // Sequential draw from M | x, size: bit c is set with probability
            // p_c * T_{c+1}(left - 1) / T_c(left).
            std::uint64_t bits = 0;
            std::size_t left = k.size;
            for (std::size_t c = 0; c < cols.size() && left > 0; ++c) {
                const double denom = tails[i][c][left];
                const double on = denom > 0.0 ? probs[i][c] * tails[i][c + 1][left - 1] / denom : 0.0;
                if (uniform01(rng) < on) {
                    bits |= std::uint64_t{1} << cols[c];
                    --left;
                }
            }
            masks.emplace_back(cfg.d, bits);
        }
        out.push_back({k.kind, k.key, rows_with_masks(cfg, x, std::move(masks), rng)});
    }
    return out;
}

RepData prepare_rep(const ExperimentConfig& cfg, std::size_t rep) {
    Rng data_rng = make_stream(cfg.seed, rep, "data");
    Rng mask_rng = make_stream(cfg.seed, rep, "mask");
    Rng split_rng = make_stream(cfg.seed, rep, "split");
    const std::size_t n = cfg.n_train + cfg.n_cal;
    RepData rd;
    if (cfg.scenario == Scenario::YDepM) {
        rd.data = gen_ydepm_dataset(cfg, n, data_rng);
        Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rd.data.row(i).values[j];
        rd.mechanism = calibrate_mechanism(x, cfg.mechanism);
    } else {
        CompleteData cd = gen_glm_dataset(cfg, n, data_rng);
        rd.mechanism = calibrate_mechanism(cd.x, cfg.mechanism);
        std::vector<Mask> masks = apply_mechanism(rd.mechanism, cd.x, mask_rng);
        rd.data = IncompleteDataset(cd.x, std::move(masks), std::move(cd.y));
    }
    const double rho = static_cast<double>(cfg.n_cal) / static_cast<double>(n);
    rd.split = split_train_cal(n, rho, split_rng);
    return rd;
}

FittedPipeline fit_pipeline(const ExperimentConfig& cfg, const IncompleteDataset& data, const SplitIndices& split,
                            std::size_t rep) {
    const IncompleteDataset train = data.subset(split.train_ids);
    FittedPipeline fp;
    fp.with_mask = cfg.regressor.concat_mask;
    fp.imputer = fit_imputer(train, cfg.imputer);
    const Eigen::MatrixXd z = design_matrix(fp.imputer, train, fp.with_mask);
    const QuantileLevels levels{cfg.alpha / 2.0, 1.0 - cfg.alpha / 2.0};
    if (cfg.regressor.kind == "linear") {
        LinearQuantileOptions lo;
        lo.seed = cfg.regressor.seed;
        fp.model = fit_linear_quantile_model(z, train.y(), levels, lo);
    } else {
        MlpOptions mo;
        mo.hidden = cfg.regressor.hidden;
        mo.epochs = cfg.regressor.epochs;
        mo.step = cfg.regressor.step;
        mo.momentum = cfg.regressor.momentum;
        mo.seed = derive_seed(cfg.seed, rep, "init") ^ cfg.regressor.seed;
        fp.model = fit_mlp_quantile(z, train.y(), levels, mo);
    }
    return fp;
}

RepResult run_repetition(const ExperimentConfig& cfg, std::size_t rep) {
    RepResult res;
    try {
        const RepData rd = prepare_rep(cfg, rep);
        const FittedPipeline fp = fit_pipeline(cfg, rd.data, rd.split, rep);
        const IncompleteDataset cal = rd.data.subset(rd.split.cal_ids);
        const double alpha = cfg.alpha;

        bool want_qr = false, want_records = false, want_nested = false;
        std::optional<std::size_t> full_star;  // index of mda_nested_star(full) in methods
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            const auto& m = cfg.methods[mi];
            want_qr |= m.kind == MethodKind::Qr;
            want_records |= m.kind == MethodKind::MdaNested || m.kind == MethodKind::MdaNestedStar;
            want_nested |= m.kind == MethodKind::MdaNested;
            if (m.kind == MethodKind::MdaNestedStar && std::holds_alternative<FullStrategy>(m.strategy)) full_star = mi;
        }
        std::optional<FittedPipeline> qr;
        if (want_qr) {
            SplitIndices all;
            all.train_ids.resize(rd.data.size());
            std::iota(all.train_ids.begin(), all.train_ids.end(), std::size_t{0});
            qr = fit_pipeline(cfg, rd.data, all, rep);
        }

        Rng test_rng = make_stream(cfg.seed, rep, "test");
        Rng sub_rng = make_stream(cfg.seed, rep, "subsample");
        std::vector<TestGroup> groups;
        groups.push_back(build_marginal_testset(cfg, rd.mechanism, test_rng));
        for (auto& g : build_conditional_testset(cfg, rd.mechanism, test_rng)) groups.push_back(std::move(g));

        // Calibration scores under max(M_k, m_test), shared by every test
        // point with the same mask. The entry for the empty mask is split CQR.
        std::unordered_map<Mask, std::vector<double>> score_cache;
        auto cal_scores = [&](const Mask& m) -> const std::vector<double>& {
            auto it = score_cache.find(m);
            if (it == score_cache.end())
                it = score_cache.emplace(m, overmasked_cal_scores(fp.imputer, fp.model, fp.with_mask, cal, m)).first;
            return it->second;
        };
        const double q_cqr = conformal_quantile(cal_scores(Mask::none(cfg.d)), alpha);
        const std::vector<Mask>& cal_masks = cal.masks();

        const std::size_t nm = cfg.methods.size();
        for (const auto& g : groups) {
            if (g.data.empty()) continue;
            std::vector<Accumulator> acc(nm), hull(nm);
            const Eigen::MatrixXd z = design_matrix(fp.imputer, g.data, fp.with_mask);
            const QuantilePrediction pred = fp.model.predict(z);
            QuantilePrediction qr_pred;
            if (qr) qr_pred = qr->model.predict(design_matrix(qr->imputer, g.data, qr->with_mask));

            for (std::size_t i = 0; i < g.data.size(); ++i) {
                const auto ie = static_cast<Eigen::Index>(i);
                const PartialRow row = g.data.row(i);
                const Mask& m = row.mask;
                const double y = g.data.y(i);
                std::vector<CalibrationRecord> recs;
                if (want_records) recs = make_cqr_records(fp.imputer, fp.model, fp.with_mask, cal, cal_scores(m), row);
                std::optional<PredictiveSet> nested_set, full_star_set;

                for (std::size_t mi = 0; mi < nm; ++mi) {
                    const auto& spec = cfg.methods[mi];
                    PredictiveSet s;
                    switch (spec.kind) {
                        case MethodKind::Qr:
                            s = PredictiveSet::interval(qr_pred.lo[ie], qr_pred.hi[ie]);
                            break;
                        case MethodKind::Cqr:
                            s = cqr_set(pred.lo[ie], pred.hi[ie], q_cqr);
                            break;
                        case MethodKind::MdaExact: {
                            const auto& sc = cal_scores(m);
                            std::vector<double> kept;
                            for (std::size_t k = 0; k < cal_masks.size(); ++k)
                                if (mask_subset(cal_masks[k], m)) kept.push_back(sc[k]);
                            s = kept.empty() ? PredictiveSet::real_line().flag_degenerate()
                                             : cqr_set(pred.lo[ie], pred.hi[ie], conformal_quantile(std::move(kept), alpha));
                            break;
                        }
                        case MethodKind::MdaNested:
                            s = mda_nested_interval(recs, alpha);
                            nested_set = s;
                            break;
                        case MethodKind::MdaNestedStar: {
                            SubsamplingStrategy strat = spec.strategy;
                            if (auto* sup = std::get_if<SupersetOf>(&strat)) sup->m = over_mask(sup->m, m);
                            const auto keep = subsample_cal(cal_masks, m, strat, sub_rng);
                            s = mda_nested_star_set(select_records(recs, keep), alpha);
                            hull[mi].add_hull(s, y);
                            if (full_star && *full_star == mi) full_star_set = s;
                            break;
                        }
                    }
                    acc[mi].add(s, y);
                }
                if (want_nested && full_star_set && nested_set) {
                    ++res.inclusion_checks;
                    if (!full_star_set->is_subset_of(*nested_set)) ++res.inclusion_violations;
                }
            }
            for (std::size_t mi = 0; mi < nm; ++mi) {
                res.rows.push_back(acc[mi].row(rep, cfg.methods[mi].id, g));
                if (cfg.methods[mi].kind == MethodKind::MdaNestedStar)
                    res.rows.push_back(hull[mi].row(rep, cfg.methods[mi].id + "/hull", g));
            }
        }
        // Stable order: method as configured, then group.
        std::stable_sort(res.rows.begin(), res.rows.end(), [&](const ResultRow& a, const ResultRow& b) {
            auto rank = [&](const std::string& id) {
                for (std::size_t mi = 0; mi < nm; ++mi) {
                    if (id == cfg.methods[mi].id) return 2 * mi;
                    if (id == cfg.methods[mi].id + "/hull") return 2 * mi + 1;
                }
                return 2 * nm;
            };
            return rank(a.method) < rank(b.method);
        });
    } catch (const std::exception& e) {
        res.rows.clear();
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        res.failure = msg;
        ResultRow r;
        r.rep = rep;
        r.method = "failure";
        r.key_kind = "error";
        r.key = msg;
        r.coverage = r.mean_length = r.median_length = r.inf_fraction = std::numeric_limits<double>::quiet_NaN();
        res.rows.push_back(r);
    }
    return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RepResult> reps(cfg.reps);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < cfg.reps; r = next++) reps[r] = run_repetition(cfg, r);
    };
    const std::size_t nw = std::min(cfg.workers, cfg.reps);
    if (nw <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    ExperimentResult out;
    for (auto& r : reps) {
        out.inclusion_checks += r.inclusion_checks;
        out.inclusion_violations += r.inclusion_violations;
        if (r.failure) ++out.failures;
        for (auto& row : r.rows) out.rows.push_back(std::move(row));
    }
    return out;
}

const char* const kResultHeader = "rep,method,key_kind,key,coverage,mean_length,median_length,inf_fraction";

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kResultHeader << '\n';
    for (const auto& r : rows) {
        out << r.rep << ',' << r.method << ',' << r.key_kind << ',' << r.key << ',' << fmt_double(r.coverage) << ','
            << fmt_double(r.mean_length) << ',' << fmt_double(r.median_length) << ',' << fmt_double(r.inf_fraction)
            << '\n';
    }
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    write_results_csv(out, rows);
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kResultHeader) throw ConfigError("results file has an unexpected header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw ConfigError("results row with " + std::to_string(f.size()) + " fields");
        ResultRow r;
        r.rep = static_cast<std::size_t>(std::stoull(f[0]));
        r.method = f[1];
        r.key_kind = f[2];
        r.key = f[3];
        r.coverage = parse_metric(f[4]);
        r.mean_length = parse_metric(f[5]);
        r.median_length = parse_metric(f[6]);
        r.inf_fraction = parse_metric(f[7]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return read_results_csv(in);
}

std::string run_manifest_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["master_seed"] = cfg.seed;
    j["scenario"] = to_string(cfg.scenario);
    j["reps"] = cfg.reps;
    j["mechanism_setting"] = cfg.mechanism_setting;
    nlohmann::ordered_json streams = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < cfg.reps; ++r) {
        nlohmann::ordered_json e;
        e["rep"] = r;
        for (const char* tag : kStreamTags) e[tag] = derive_seed(cfg.seed, r, tag);
        streams.push_back(e);
    }
    j["streams"] = streams;
    return j.dump(2);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) {
        if (r.method == "failure") continue;
        const std::string k = r.method + '\x1f' + r.key_kind + '\x1f' + r.key;
        auto [it, fresh] = groups.try_emplace(k);
        if (fresh) order.push_back(k);
        it->second.push_back(&r);
    }
    auto quantile = [](std::vector<double> v, double q) {
        std::sort(v.begin(), v.end());
        const double h = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    std::vector<SummaryRow> out;
    for (const auto& k : order) {
        const auto& g = groups.at(k);
        SummaryRow s;
        s.method = g.front()->method;
        s.key_kind = g.front()->key_kind;
        s.key = g.front()->key;
        s.reps = g.size();
        std::vector<double> cov, med;
        double sum_cov = 0.0, sum_len = 0.0, sum_inf = 0.0;
        for (const ResultRow* r : g) {
            cov.push_back(r->coverage);
            med.push_back(r->median_length);
            sum_cov += r->coverage;
            sum_len += r->mean_length;
            sum_inf += r->inf_fraction;
        }
        const double n = static_cast<double>(g.size());
        s.mean_coverage = sum_cov / n;
        s.q10_coverage = quantile(cov, 0.1);
        s.q90_coverage = quantile(cov, 0.9);
        s.min_coverage = *std::min_element(cov.begin(), cov.end());
        s.mean_length = sum_len / n;
        s.median_length = median_of(med);
        s.inf_fraction = sum_inf / n;
        out.push_back(s);
    }
    return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "method,key_kind,key,reps,mean_coverage,q10_coverage,q90_coverage,min_coverage,mean_length,median_length,"
           "inf_fraction\n";
    for (const auto& s : rows) {
        out << s.method << ',' << s.key_kind << ',' << s.key << ',' << s.reps << ',' << fmt_double(s.mean_coverage)
            << ',' << fmt_double(s.q10_coverage) << ',' << fmt_double(s.q90_coverage) << ','
            << fmt_double(s.min_coverage) << ',' << fmt_double(s.mean_length) << ',' << fmt_double(s.median_length)
            << ',' << fmt_double(s.inf_fraction) << '\n';
    }
}

const SummaryRow* find_summary(const std::vector<SummaryRow>& rows, const std::string& method,
                               const std::string& key_kind, const std::string& key) {
    for (const auto& s : rows)
        if (s.method == method && s.key_kind == key_kind && s.key == key) return &s;
    return nullptr;
}

double relative_improvement(const std::vector<SummaryRow>& rows, const std::string& method_a,
                            const std::string& method_b, const std::string& key_kind, const std::string& key) {
    const SummaryRow* a = find_summary(rows, method_a, key_kind, key);
    const SummaryRow* b = find_summary(rows, method_b, key_kind, key);
    if (!a || !b) throw ConfigError("relative_improvement: method/key not found in summary");
    return (a->median_length - b->median_length) / b->median_length;
}

}  // namespace mda
