#pragma once

#include <cstdint>
#include <vector>

namespace mstk {

// Yeo-Johnson power transform; continuous and strictly increasing in y.
double yeo_johnson(double y, double lambda);
double yeo_johnson_inverse(double x, double lambda);

// Maximum-likelihood lambda (Gaussian log-likelihood with Jacobian term),
// golden-section search over [-5, 5] to 1e-4. Needs >= 3 distinct values.
double fit_lambda(const std::vector<double>& values);

/// Target transform fitted on the training split only:
/// apply(v) = ((YJ(v, lambda) - mean) / std - lo) / (hi - lo).
/// Training values land in [0, 1]; others may fall outside (not clamped).
struct TransformParams {
    double lambda = 1.0;
    double mean = 0.0;
    double std_dev = 1.0;
    double lo = 0.0;
    double hi = 1.0;
};

TransformParams fit_transform(const std::vector<double>& train_values);
double apply_transform(double v, const TransformParams& p);
double invert_transform(double x, const TransformParams& p);

/// Disjoint shuffled index cover; sizes floor(f_train*n), floor(f_val*n), rest.
struct SplitIndex {
    std::vector<std::size_t> train, val, test;
};

SplitIndex split(std::size_t n, double train_frac, double val_frac, uint64_t seed);
inline SplitIndex split(std::size_t n, uint64_t seed) { return split(n, 0.65, 0.15, seed); }

double skewness(const std::vector<double>& v);

}  // namespace mstk
