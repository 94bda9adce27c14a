#include "mda/conformal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace mda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
}

}  // namespace

std::size_t conformal_rank(std::size_t n, double alpha) {
    check_alpha(alpha);
    const double x = (1.0 - alpha) * (static_cast<double>(n) + 1.0);
    const auto r = static_cast<std::size_t>(std::ceil(x - 1e-9));
    return std::max<std::size_t>(r, 1);
}

double conformal_quantile(std::vector<double> scores, double alpha) {
    const std::size_t r = conformal_rank(scores.size(), alpha);
    if (r > scores.size()) return kInf;
    std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(r - 1), scores.end());
    return scores[r - 1];
}

double abs_residual_score(double mu_hat, double y) { return std::abs(mu_hat - y); }

double cqr_score(double lo, double hi, double y) { return std::max(lo - y, y - hi); }

double classification_score(const Eigen::VectorXd& probs, int label) {
    if (label < 0 || label >= probs.size()) throw DimensionError("label outside the probability vector");
    return 1.0 - probs[label];
}

double score_value(const ScoreFunction& score, const Eigen::VectorXd& z, double y) {
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, AbsResidualScore>) {
                return abs_residual_score(s.model->predict(z), y);
            } else if constexpr (std::is_same_v<S, CqrScore>) {
                const auto [lo, hi] = s.model->predict(z);
                return cqr_score(lo, hi, y);
            } else {
                return classification_score(s.probs(z), static_cast<int>(y));
            }
        },
        score);
}

PredictiveSet cqr_set(double lo, double hi, double q) {
    if (std::isinf(q) && q > 0) return PredictiveSet::real_line();
    const double a = lo - q;
    const double b = hi + q;
    if (a > b) return PredictiveSet::empty_set();
    return PredictiveSet::interval(a, b);
}

PredictiveSet class_set(const Eigen::VectorXd& probs, double q) {
    const int n = static_cast<int>(probs.size());
    std::vector<int> keep;
    for (int l = 0; l < n; ++l)
        if (1.0 - probs[l] <= q) keep.push_back(l);
    return PredictiveSet::from_labels(std::move(keep), n);
}

PredictiveSet split_cp_set(const ScoreFunction& score, const Eigen::MatrixXd& cal_z, const Eigen::VectorXd& cal_y,
                           const Eigen::VectorXd& z_test, double alpha) {
    if (cal_z.rows() != cal_y.size()) throw DimensionError("calibration rows and responses disagree");
    std::vector<double> s(static_cast<std::size_t>(cal_y.size()));
    for (Eigen::Index i = 0; i < cal_y.size(); ++i)
        s[static_cast<std::size_t>(i)] = score_value(score, cal_z.row(i).transpose(), cal_y[i]);
    const double q = conformal_quantile(std::move(s), alpha);
    return std::visit(
        [&](const auto& sf) -> PredictiveSet {
            using S = std::decay_t<decltype(sf)>;
            if constexpr (std::is_same_v<S, AbsResidualScore>) {
                const double mu = sf.model->predict(z_test);
                return cqr_set(mu, mu, q);
            } else if constexpr (std::is_same_v<S, CqrScore>) {
                const auto [lo, hi] = sf.model->predict(z_test);
                return cqr_set(lo, hi, q);
            } else {
                if (std::isinf(q)) return PredictiveSet::all_labels(sf.num_labels);
                return class_set(sf.probs(z_test), q);
            }
        },
        score);
}

std::size_t extra_missing(const Mask& cal_mask, const Mask& m_test) {
    if (cal_mask.dim() != m_test.dim()) throw DimensionError("mask dimension mismatch");
    return static_cast<std::size_t>(std::popcount(cal_mask.bits() & ~m_test.bits()));
}

std::vector<std::size_t> subsample_cal(const std::vector<Mask>& cal_masks, const Mask& m_test,
                                       const SubsamplingStrategy& strategy, Rng& rng) {
    std::vector<std::size_t> keep;
    keep.reserve(cal_masks.size());
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            for (std::size_t k = 0; k < cal_masks.size(); ++k) {
                const Mask& mk = cal_masks[k];
                bool take = false;
                if constexpr (std::is_same_v<S, ExactStrategy>) {
                    take = mask_subset(mk, m_test);
                } else if constexpr (std::is_same_v<S, FullStrategy>) {
                    take = true;
                } else if constexpr (std::is_same_v<S, SupersetOf>) {
                    if (k == 0 && !mask_subset(m_test, s.m)) {
                        throw ConfigError("superset strategy needs a mask containing the test mask");
                    }
                    take = mask_subset(mk, s.m);
                } else if constexpr (std::is_same_v<S, BoundedExtra>) {
                    take = extra_missing(mk, m_test) <= s.k;
                } else {
                    const std::size_t extra = extra_missing(mk, m_test);
                    // Always draw so the stream layout does not depend on masks.
                    const double u = uniform01(rng);
                    take = u < std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(extra, 1000)));
                }
                if (take) keep.push_back(k);
            }
        },
        strategy);
    return keep;
}

std::vector<CalibrationRecord> select_records(const std::vector<CalibrationRecord>& all,
                                              const std::vector<std::size_t>& keep) {
    std::vector<CalibrationRecord> out;
    out.reserve(keep.size());
    for (std::size_t k : keep) out.push_back(all.at(k));
    return out;
}

PredictiveSet mda_nested_star_set(const std::vector<CalibrationRecord>& records, double alpha) {
    const std::size_t n = records.size();
    if (n == 0) return PredictiveSet::real_line().flag_degenerate();
    const std::size_t r = conformal_rank(n, alpha);
    if (r > n) return PredictiveSet::real_line();
    // y belongs to the set iff at least need = n - r + 1 records leave it
    // inside their closed interval [lower, upper].
    const std::size_t need = n - r + 1;

    struct Event {
        double x;
        int delta;  // +1 opens, -1 closes
    };
    std::vector<Event> ev;
    ev.reserve(2 * n);
    for (const auto& rec : records) {
        const double lo = rec.lower();
        const double hi = rec.upper();
        if (lo > hi) continue;  // excludes every y
        ev.push_back({lo, +1});
        ev.push_back({hi, -1});
    }
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.x < b.x; });

    std::vector<Interval> parts;
    std::size_t cur = 0;
    double start = 0.0;
    bool inside = false;
    for (std::size_t i = 0; i < ev.size();) {
        const double x = ev[i].x;
        std::size_t opens = 0, closes = 0;
        for (; i < ev.size() && ev[i].x == x; ++i) (ev[i].delta > 0 ? opens : closes) += 1;
        const std::size_t at = cur + opens;  // intervals are closed, so x counts both
        const std::size_t after = at - closes;
        if (!inside && at >= need) {
            inside = true;
            start = x;
        }
        if (inside && after < need) {
            inside = false;
            parts.push_back({start, x});
        }
        cur = after;
    }
    return PredictiveSet::from_intervals(std::move(parts));
}

PredictiveSet mda_nested_star_set(const std::vector<ClassCalibrationRecord>& records, int num_labels, double alpha) {
    const std::size_t n = records.size();
    if (n == 0) return PredictiveSet::all_labels(num_labels).flag_degenerate();
    // count < (1 - alpha)(1 + n) is the same as count <= r - 1.
    const std::size_t r = conformal_rank(n, alpha);
    std::vector<int> keep;
    for (int l = 0; l < num_labels; ++l) {
        std::size_t count = 0;
        for (const auto& rec : records)
            if (rec.score < classification_score(rec.test_probs, l)) ++count;
        if (count <= r - 1) keep.push_back(l);
    }
    return PredictiveSet::from_labels(std::move(keep), num_labels);
}

PredictiveSet mda_nested_interval(const std::vector<CalibrationRecord>& records, double alpha) {
    const std::size_t n = records.size();
    if (n == 0) return PredictiveSet::real_line().flag_degenerate();
    const std::size_t r = conformal_rank(n, alpha);
    if (r > n) return PredictiveSet::real_line();
    std::vector<double> lows, ups;
    lows.reserve(n);
    ups.reserve(n);
    for (const auto& rec : records) {
        lows.push_back(rec.lower());
        ups.push_back(rec.upper());
    }
    const auto nth = static_cast<std::ptrdiff_t>(r - 1);
    std::nth_element(ups.begin(), ups.begin() + nth, ups.end());
    std::nth_element(lows.begin(), lows.begin() + nth, lows.end(), std::greater<>());
    const double a = lows[r - 1];
    const double b = ups[r - 1];
    if (a > b) return PredictiveSet::empty_set();
    return PredictiveSet::interval(a, b);
}

PredictiveSet mda_exact_set(const std::vector<CalibrationRecord>& records, const Mask& m_test, double alpha) {
    std::vector<double> scores;
    const CalibrationRecord* any = nullptr;
    for (const auto& rec : records) {
        if (!mask_subset(rec.mask, m_test)) continue;
        scores.push_back(rec.score);
        any = &rec;
    }
    if (!any) return PredictiveSet::real_line().flag_degenerate();
    return cqr_set(any->test_lo, any->test_hi, conformal_quantile(std::move(scores), alpha));
}

Eigen::VectorXd model_input(const ImputationModel& imp, std::span<const double> values, const Mask& m,
                            bool with_mask) {
    const Eigen::VectorXd x = imp.impute(values, m);
    return with_mask ? concat_mask(x, m) : x;
}

std::vector<double> overmasked_cal_scores(const ImputationModel& imp, const QuantileModel& model, bool with_mask,
                                          const IncompleteDataset& cal, const Mask& m_test) {
    const std::size_t n = cal.size();
    if (n == 0) return {};
    const std::size_t d = cal.dim();
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(with_mask ? 2 * d : d));
    for (std::size_t k = 0; k < n; ++k) {
        const PartialRow row = cal.row(k);
        z.row(static_cast<Eigen::Index>(k)) = model_input(imp, row.values, over_mask(row.mask, m_test), with_mask);
    }
    const QuantilePrediction p = model.predict(z);
    std::vector<double> s(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        s[k] = cqr_score(p.lo[i], p.hi[i], cal.y(k));
    }
    return s;
}

std::vector<CalibrationRecord> make_cqr_records(const ImputationModel& imp, const QuantileModel& model,
                                                bool with_mask, const IncompleteDataset& cal,
                                                const std::vector<double>& cal_scores, const PartialRow& test) {
    const std::size_t n = cal.size();
    if (cal_scores.size() != n) throw DimensionError("one calibration score per calibration row expected");
    std::vector<CalibrationRecord> recs(n);
    // Distinct augmented masks; the test row is re-imputed once per mask.
    std::unordered_map<Mask, Eigen::Index> slot;
    std::vector<Mask> distinct;
    for (std::size_t k = 0; k < n; ++k) {
        auto& r = recs[k];
        r.index = k;
        r.mask = cal.mask(k);
        r.aug_mask = over_mask(r.mask, test.mask);
        r.score = cal_scores[k];
        if (slot.emplace(r.aug_mask, static_cast<Eigen::Index>(distinct.size())).second) distinct.push_back(r.aug_mask);
    }
    const std::size_t d = cal.dim();
    Eigen::MatrixXd z(static_cast<Eigen::Index>(distinct.size()), static_cast<Eigen::Index>(with_mask ? 2 * d : d));
    for (std::size_t a = 0; a < distinct.size(); ++a)
        z.row(static_cast<Eigen::Index>(a)) = model_input(imp, test.values, distinct[a], with_mask);
    const QuantilePrediction p = model.predict(z);
    for (auto& r : recs) {
        const Eigen::Index a = slot.at(r.aug_mask);
        r.test_lo = p.lo[a];
        r.test_hi = p.hi[a];
    }
    return recs;
}

ComparisonBound comparison_matrix_bound(const Eigen::MatrixXd& scores, double alpha) {
    check_alpha(alpha);
    if (scores.rows() != scores.cols() || scores.rows() < 1) throw DimensionError("score matrix must be square");
    const Eigen::Index m = scores.rows();  // n + 1
    const double threshold = (1.0 - alpha) * static_cast<double>(m);
    ComparisonBound out;
    for (Eigen::Index i = 0; i < m; ++i) {
        double wins = 0.0;
        for (Eigen::Index j = 0; j < m; ++j)
            if (j != i && scores(i, j) > scores(j, i)) wins += 1.0;
        if (wins >= threshold - 1e-9) out.winners.push_back(static_cast<std::size_t>(i));
    }
    out.holds = static_cast<double>(out.winners.size()) <= 2.0 * alpha * static_cast<double>(m) + 1e-9;
    return out;
}

IsotonizedLengths isotonize_by_overmasking(const std::unordered_map<Mask, double>& estimates) {
    std::vector<Mask> order;
    order.reserve(estimates.size());
    for (const auto& [m, v] : estimates) order.push_back(m);
    // Most missing entries first; bit value breaks ties for determinism.
    std::sort(order.begin(), order.end(), [](const Mask& a, const Mask& b) {
        if (a.num_missing() != b.num_missing()) return a.num_missing() > b.num_missing();
        return a.bits() < b.bits();
    });
    IsotonizedLengths out;
    for (const Mask& m : order) {
        double best = estimates.at(m);
        Mask target = m;
        for (std::size_t j = 0; j < m.dim(); ++j) {
            if (m.missing(j)) continue;
            const Mask sup = m.with_missing(j);
            auto it = out.lengths.find(sup);
            if (it == out.lengths.end()) {
                throw ConfigError("no length estimate for super-pattern " + sup.to_string());
            }
            if (it->second < best) {
                best = it->second;
                target = out.remap.at(sup);
            }
        }
        out.lengths[m] = best;
        out.remap.emplace(m, target);
    }
    return out;
}

}  // namespace mda
