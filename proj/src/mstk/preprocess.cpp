#include "mstk/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "mstk/rng.hpp"

namespace mstk {

double yeo_johnson(double y, double lambda) {
    if (y >= 0.0) {
        if (std::abs(lambda) < 1e-12) return std::log1p(y);
        return (std::pow(y + 1.0, lambda) - 1.0) / lambda;
    }
    if (std::abs(lambda - 2.0) < 1e-12) return -std::log1p(-y);
    return -(std::pow(1.0 - y, 2.0 - lambda) - 1.0) / (2.0 - lambda);
}

double yeo_johnson_inverse(double x, double lambda) {
    if (x >= 0.0) {
        if (std::abs(lambda) < 1e-12) return std::expm1(x);
        return std::pow(lambda * x + 1.0, 1.0 / lambda) - 1.0;
    }
    if (std::abs(lambda - 2.0) < 1e-12) return -std::expm1(-x);
    return 1.0 - std::pow(1.0 - (2.0 - lambda) * x, 1.0 / (2.0 - lambda));
}

namespace {

double yj_log_likelihood(const std::vector<double>& values, double lambda) {
    const std::size_t n = values.size();
    double mean = 0.0;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = yeo_johnson(values[i], lambda);
        if (!std::isfinite(t[i])) return -std::numeric_limits<double>::infinity();
        mean += t[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : t) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    if (!(var > 0.0) || !std::isfinite(var))
        return -std::numeric_limits<double>::infinity();
    double jac = 0.0;
    for (double y : values)
        jac += (y >= 0.0 ? std::log1p(y) : -std::log1p(-y));
    return -0.5 * static_cast<double>(n) * std::log(var) + (lambda - 1.0) * jac;
}

}  // namespace

double fit_lambda(const std::vector<double>& values) {
    if (values.size() < 3) throw std::invalid_argument("fit_lambda needs >= 3 values");
    std::set<double> distinct(values.begin(), values.end());
    if (distinct.size() < 3)
        throw std::runtime_error("fit_lambda failed: fewer than 3 distinct values");

    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = -5.0, b = 5.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = yj_log_likelihood(values, c);
    double fd = yj_log_likelihood(values, d);
    while (b - a > 1e-4) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = yj_log_likelihood(values, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = yj_log_likelihood(values, d);
        }
    }
    double lambda = 0.5 * (a + b);
    if (!std::isfinite(yj_log_likelihood(values, lambda)))
        throw std::runtime_error("fit_lambda failed: degenerate sample");
    return lambda;
}

TransformParams fit_transform(const std::vector<double>& train_values) {
    TransformParams p;
    p.lambda = fit_lambda(train_values);
    const std::size_t n = train_values.size();
    std::vector<double> t(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = yeo_johnson(train_values[i], p.lambda);
        mean += t[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : t) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    if (!(var > 0.0)) throw std::runtime_error("fit_transform failed: zero variance");
    p.mean = mean;
    p.std_dev = std::sqrt(var);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double x : t) {
        double z = (x - mean) / p.std_dev;
        lo = std::min(lo, z);
        hi = std::max(hi, z);
    }
    if (!(hi > lo)) throw std::runtime_error("fit_transform failed: degenerate range");
    p.lo = lo;
    p.hi = hi;
    return p;
}

double apply_transform(double v, const TransformParams& p) {
    double z = (yeo_johnson(v, p.lambda) - p.mean) / p.std_dev;
    return (z - p.lo) / (p.hi - p.lo);
}

double invert_transform(double x, const TransformParams& p) {
    double z = x * (p.hi - p.lo) + p.lo;
    return yeo_johnson_inverse(z * p.std_dev + p.mean, p.lambda);
}

SplitIndex split(std::size_t n, double train_frac, double val_frac, uint64_t seed) {
    if (n < 3) throw std::invalid_argument("split needs n >= 3");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(n)));
    SplitIndex s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return s;
}

double skewness(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double x : v) {
        double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    return m3 / std::pow(m2, 1.5);
}

}  // namespace mstk
