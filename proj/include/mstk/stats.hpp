#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mstk {

struct UndefinedMetric : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Standard regression metrics. Correlations are empty when either input is
/// constant; R^2 is empty when the truth is constant.
struct MetricsRow {
    double mse = 0.0;
    double mae = 0.0;
    std::optional<double> r2;
    std::optional<double> pearson;
    std::optional<double> spearman;
};

MetricsRow metrics(const std::vector<double>& pred, const std::vector<double>& truth);

double pearson_corr(const std::vector<double>& a, const std::vector<double>& b);
double spearman_corr(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> average_ranks(const std::vector<double>& v);

// Regularized incomplete beta I_x(a, b) via Lentz continued fraction.
double incomplete_beta(double a, double b, double x);
// Student-t CDF and its inverse (upper quantile by bisection).
double student_t_cdf(double t, double df);
double student_t_quantile(double p, double df);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

// Unequal-variance t-test, two-sided p, Welch-Satterthwaite df.
WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b);

// Pooled-SD effect size (a vs b).
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

Interval mean_diff_ci(const std::vector<double>& a, const std::vector<double>& b,
                      double level = 0.95);

/// Significance tiers: *** at 1%, ** at 5%, * at 10%, empty otherwise.
std::string significance_tier(double p);

struct AblationEntry {
    std::string metric;
    double p = 1.0;
    std::string tier;
    double delta_mu = 0.0;  // variant - full
    double d = 0.0;         // cohens_d(variant, full)
    Interval ci;            // Welch CI of (variant - full)
};

// Per-metric Welch comparison of paired metric samples over runs.
// Keys of both maps must match; >= 2 runs per group required.
std::vector<AblationEntry> ablation_compare(
    const std::vector<std::pair<std::string, std::vector<double>>>& full_runs,
    const std::vector<std::pair<std::string, std::vector<double>>>& variant_runs);

}  // namespace mstk
