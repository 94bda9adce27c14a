#include "mda/missingness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace mda {

namespace {

double row_value(const Eigen::MatrixXd& x, std::size_t i, std::size_t j) {
    return x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

void check_target(double t) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("target missing proportion must lie in (0,1)");
}

// Solves mean_i sigmoid(a_i + b) = target for b. The map is increasing in b.
double calibrate_intercept(const std::vector<double>& a, double target) {
    check_target(target);
    auto f = [&](double b) {
        double s = 0.0;
        for (double ai : a) s += sigmoid(ai + b);
        return s / static_cast<double>(a.size());
    };
    double lo = -1.0;
    double hi = 1.0;
    while (f(lo) > target) {
        lo *= 2.0;
        if (lo < -1e4) throw ConfigError("cannot calibrate logistic intercept: target too small");
    }
    while (f(hi) < target) {
        hi *= 2.0;
        if (hi > 1e4) throw ConfigError("cannot calibrate logistic intercept: target too large");
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double v = f(mid);
        if (std::abs(v - target) < 1e-6) break;
        (v < target ? lo : hi) = mid;
    }
    return mid;
}

std::vector<std::size_t> resolve_missing_cols(const MechanismSpec& spec, std::size_t d) {
    std::vector<std::size_t> cols = spec.missing_cols;
    if (cols.empty()) {
        cols.resize(d);
        std::iota(cols.begin(), cols.end(), std::size_t{0});
    }
    std::sort(cols.begin(), cols.end());
    if (std::adjacent_find(cols.begin(), cols.end()) != cols.end()) {
        throw ConfigError("missing_cols contains duplicates");
    }
    for (std::size_t c : cols)
        if (c >= d) throw ConfigError("missing column index out of range");
    for (std::size_t c : spec.observed_cols) {
        if (c >= d) throw ConfigError("observed column index out of range");
        if (std::binary_search(cols.begin(), cols.end(), c)) {
            throw ConfigError("a column cannot be both observed and missing");
        }
    }
    return cols;
}

}  // namespace

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

std::vector<double> default_logistic_weights(std::size_t count, std::uint64_t setting) {
    Rng rng = make_stream(0x6c6f67697374ull, setting, "logistic-weights");
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> w(count);
    double norm = 0.0;
    for (auto& v : w) {
        v = z(rng);
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (auto& v : w) v /= norm;
    return w;
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DimensionError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

FittedMechanism calibrate_mechanism(const Eigen::MatrixXd& x, const MechanismSpec& spec) {
    FittedMechanism fm;
    fm.spec = spec;
    fm.dim = static_cast<std::size_t>(x.cols());
    fm.missing_cols = resolve_missing_cols(spec, fm.dim);
    const auto n = static_cast<std::size_t>(x.rows());

    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Mcar>) {
                if (!(k.p >= 0.0 && k.p <= 1.0)) throw ConfigError("MCAR probability must lie in [0,1]");
            } else if constexpr (std::is_same_v<K, MarLogistic>) {
                if (spec.observed_cols.empty()) throw ConfigError("MAR mechanism needs observed_cols");
                if (k.weights.size() != spec.observed_cols.size()) {
                    throw ConfigError("MAR weights must have one entry per observed column");
                }
                if (n == 0) throw ConfigError("cannot calibrate on an empty matrix");
                std::vector<double> a(n, 0.0);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t c = 0; c < spec.observed_cols.size(); ++c)
                        a[i] += k.weights[c] * row_value(x, i, spec.observed_cols[c]);
                fm.mar_intercept = calibrate_intercept(a, k.target_prop);
            } else if constexpr (std::is_same_v<K, MnarSelfMasked>) {
                if (k.weights.size() != fm.missing_cols.size()) {
                    throw ConfigError("self-masked weights must have one entry per missing column");
                }
                if (n == 0) throw ConfigError("cannot calibrate on an empty matrix");
                fm.self_intercepts.resize(fm.missing_cols.size());
                std::vector<double> a(n);
                for (std::size_t c = 0; c < fm.missing_cols.size(); ++c) {
                    for (std::size_t i = 0; i < n; ++i) a[i] = k.weights[c] * row_value(x, i, fm.missing_cols[c]);
                    fm.self_intercepts[c] = calibrate_intercept(a, k.target_prop);
                }
            } else {
                if (!(k.q > 0.0 && k.q < 1.0)) throw ConfigError("quantile level q must lie in (0,1)");
                check_target(k.target_prop);
                if (k.target_prop > 1.0 - k.q + 1e-12) {
                    throw ConfigError("target proportion exceeds the censorable upper tail 1 - q");
                }
                if (n == 0) throw ConfigError("cannot calibrate on an empty matrix");
                std::size_t above = 0;
                fm.quantile_cuts.resize(fm.missing_cols.size());
                for (std::size_t c = 0; c < fm.missing_cols.size(); ++c) {
                    const auto col = x.col(static_cast<Eigen::Index>(fm.missing_cols[c]));
                    std::vector<double> v(col.data(), col.data() + col.size());
                    fm.quantile_cuts[c] = empirical_quantile(v, k.q);
                    for (double t : v)
                        if (t > fm.quantile_cuts[c]) ++above;
                }
                if (above == 0) throw ConfigError("no entry lies above the censorship cut");
                const double total = static_cast<double>(n * fm.missing_cols.size());
                fm.quantile_prob = std::min(1.0, k.target_prop * total / static_cast<double>(above));
            }
        },
        spec.kind);
    return fm;
}

std::vector<double> missing_probabilities(const FittedMechanism& mech, std::span<const double> row) {
    if (row.size() != mech.dim) throw DimensionError("row length differs from the mechanism dimension");
    std::vector<double> p(mech.dim, 0.0);
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Mcar>) {
                for (std::size_t c : mech.missing_cols) p[c] = k.p;
            } else if constexpr (std::is_same_v<K, MarLogistic>) {
                double a = mech.mar_intercept;
                for (std::size_t c = 0; c < mech.spec.observed_cols.size(); ++c)
                    a += k.weights[c] * row[mech.spec.observed_cols[c]];
                const double pr = sigmoid(a);
                for (std::size_t c : mech.missing_cols) p[c] = pr;
            } else if constexpr (std::is_same_v<K, MnarSelfMasked>) {
                for (std::size_t c = 0; c < mech.missing_cols.size(); ++c) {
                    const std::size_t j = mech.missing_cols[c];
                    p[j] = sigmoid(k.weights[c] * row[j] + mech.self_intercepts[c]);
                }
            } else {
                for (std::size_t c = 0; c < mech.missing_cols.size(); ++c) {
                    const std::size_t j = mech.missing_cols[c];
                    p[j] = row[j] > mech.quantile_cuts[c] ? mech.quantile_prob : 0.0;
                }
            }
        },
        mech.spec.kind);
    return p;
}

std::vector<Mask> apply_mechanism(const FittedMechanism& mech, const Eigen::MatrixXd& x, Rng& rng) {
    if (static_cast<std::size_t>(x.cols()) != mech.dim) throw DimensionError("matrix width differs from mechanism");
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<Mask> masks;
    masks.reserve(n);
    std::vector<double> row(mech.dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < mech.dim; ++j) row[j] = row_value(x, i, j);
        const auto p = missing_probabilities(mech, row);
        std::uint64_t bits = 0;
        for (std::size_t j : mech.missing_cols) {
            // One draw per candidate entry keeps the stream layout fixed.
            if (uniform01(rng) < p[j]) bits |= std::uint64_t{1} << j;
        }
        masks.emplace_back(mech.dim, bits);
    }
    return masks;
}

double expected_missing_proportion(const FittedMechanism& mech, const Eigen::MatrixXd& x) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (n == 0 || mech.missing_cols.empty()) return 0.0;
    std::vector<double> row(mech.dim);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < mech.dim; ++j) row[j] = row_value(x, i, j);
        const auto p = missing_probabilities(mech, row);
        for (std::size_t j : mech.missing_cols) s += p[j];
    }
    return s / static_cast<double>(n * mech.missing_cols.size());
}

std::vector<Mask> gen_mcar(std::size_t n, std::size_t d, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("MCAR probability must lie in [0,1]");
    std::vector<Mask> masks;
    masks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (std::size_t j = 0; j < d; ++j)
            if (uniform01(rng) < p) bits |= std::uint64_t{1} << j;
        masks.emplace_back(d, bits);
    }
    return masks;
}

namespace {

template <class K>
std::vector<Mask> gen_kind(const Eigen::MatrixXd& x, const MechanismSpec& spec, Rng& rng, const char* name) {
    if (!std::holds_alternative<K>(spec.kind)) {
        throw ConfigError(std::string("mechanism spec is not of kind ") + name);
    }
    return apply_mechanism(calibrate_mechanism(x, spec), x, rng);
}

}  // namespace

std::vector<Mask> gen_mar_logistic(const Eigen::MatrixXd& x, const MechanismSpec& spec, Rng& rng) {
    return gen_kind<MarLogistic>(x, spec, rng, "mar_logistic");
}

std::vector<Mask> gen_mnar_self_masked(const Eigen::MatrixXd& x, const MechanismSpec& spec, Rng& rng) {
    return gen_kind<MnarSelfMasked>(x, spec, rng, "mnar_self_masked");
}

std::vector<Mask> gen_mnar_quantile(const Eigen::MatrixXd& x, const MechanismSpec& spec, Rng& rng) {
    return gen_kind<MnarQuantile>(x, spec, rng, "mnar_quantile");
}

std::vector<Mask> gen_masks(const Eigen::MatrixXd& x, const MechanismSpec& spec, Rng& rng) {
    return apply_mechanism(calibrate_mechanism(x, spec), x, rng);
}

}  // namespace mda
