#include "mstk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mstk {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// unbiased sample variance
double var_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

bool is_constant(const std::vector<double>& v) {
    for (double x : v)
        if (x != v[0]) return false;
    return true;
}

}  // namespace

MetricsRow metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("metrics: need equal nonzero lengths");
    MetricsRow row;
    const double n = static_cast<double>(pred.size());
    double sse = 0.0, sae = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double e = pred[i] - truth[i];
        sse += e * e;
        sae += std::abs(e);
    }
    row.mse = sse / n;
    row.mae = sae / n;

    if (!is_constant(truth)) {
        double tm = mean_of(truth);
        double sst = 0.0;
        for (double t : truth) sst += (t - tm) * (t - tm);
        row.r2 = 1.0 - sse / sst;
        if (!is_constant(pred)) {
            row.pearson = pearson_corr(pred, truth);
            row.spearman = spearman_corr(pred, truth);
        }
    }
    return row;
}

double pearson_corr(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson: need equal lengths >= 2");
    double ma = mean_of(a), mb = mean_of(b);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    if (da == 0.0 || db == 0.0) throw UndefinedMetric("pearson undefined for constant input");
    return num / std::sqrt(da * db);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
        i = j + 1;
    }
    return rank;
}

double spearman_corr(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson_corr(average_ranks(a), average_ranks(b));
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // continued fraction converges fast for x < (a+1)/(a+b+2); use symmetry otherwise
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

    const double ln_pre = a * std::log(x) + b * std::log(1.0 - x) -
                          (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    const double tiny = 1e-300;
    double f = 1.0, c = 1.0, d = 0.0;
    for (int m = 0; m <= 400; ++m) {
        double numerator;
        if (m == 0) {
            numerator = 1.0;
        } else if (m % 2 == 0) {
            double k = m / 2.0;
            numerator = k * (b - k) * x / ((a + 2.0 * k - 1.0) * (a + 2.0 * k));
        } else {
            double k = (m - 1.0) / 2.0;
            numerator = -(a + k) * (a + b + k) * x / ((a + 2.0 * k) * (a + 2.0 * k + 1.0));
        }
        d = 1.0 + numerator * d;
        if (std::abs(d) < tiny) d = tiny;
        d = 1.0 / d;
        c = 1.0 + numerator / c;
        if (std::abs(c) < tiny) c = tiny;
        double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return std::exp(ln_pre) * (f - 1.0) / a;
}

double student_t_cdf(double t, double df) {
    double x = df / (df + t * t);
    double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile needs p in (0,1)");
    double lo = -1e8, hi = 1e8;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) break;
    }
    return 0.5 * (lo + hi);
}

namespace {

struct TwoSample {
    double ma, mb, va, vb, na, nb;
};

TwoSample prepare(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw UndefinedMetric("two-sample test needs >= 2 values per group");
    TwoSample s;
    s.na = static_cast<double>(a.size());
    s.nb = static_cast<double>(b.size());
    s.ma = mean_of(a);
    s.mb = mean_of(b);
    s.va = var_of(a, s.ma);
    s.vb = var_of(b, s.mb);
    if (s.va == 0.0 && s.vb == 0.0) throw UndefinedMetric("both samples are constant");
    return s;
}

double welch_df(const TwoSample& s) {
    double u = s.va / s.na + s.vb / s.nb;
    return u * u /
           (s.va * s.va / (s.na * s.na * (s.na - 1.0)) +
            s.vb * s.vb / (s.nb * s.nb * (s.nb - 1.0)));
}

}  // namespace

WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b) {
    TwoSample s = prepare(a, b);
    WelchResult r;
    r.t = (s.ma - s.mb) / std::sqrt(s.va / s.na + s.vb / s.nb);
    r.df = welch_df(s);
    r.p = 2.0 * (1.0 - student_t_cdf(std::abs(r.t), r.df));
    return r;
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
    TwoSample s = prepare(a, b);
    double pooled = ((s.na - 1.0) * s.va + (s.nb - 1.0) * s.vb) / (s.na + s.nb - 2.0);
    if (pooled == 0.0) throw UndefinedMetric("zero pooled variance");
    return (s.ma - s.mb) / std::sqrt(pooled);
}

Interval mean_diff_ci(const std::vector<double>& a, const std::vector<double>& b, double level) {
    TwoSample s = prepare(a, b);
    double df = welch_df(s);
    double tq = student_t_quantile(0.5 + 0.5 * level, df);
    double se = std::sqrt(s.va / s.na + s.vb / s.nb);
    double d = s.ma - s.mb;
    return {d - tq * se, d + tq * se};
}

std::string significance_tier(double p) {
    if (p <= 0.01) return "***";
    if (p <= 0.05) return "**";
    if (p <= 0.10) return "*";
    return "";
}

std::vector<AblationEntry> ablation_compare(
    const std::vector<std::pair<std::string, std::vector<double>>>& full_runs,
    const std::vector<std::pair<std::string, std::vector<double>>>& variant_runs) {
    if (full_runs.size() != variant_runs.size())
        throw std::invalid_argument("ablation_compare: metric sets differ");
    std::vector<AblationEntry> out;
    for (std::size_t i = 0; i < full_runs.size(); ++i) {
        const auto& [name, full] = full_runs[i];
        const auto& [vname, variant] = variant_runs[i];
        if (name != vname) throw std::invalid_argument("ablation_compare: metric order differs");
        AblationEntry e;
        e.metric = name;
        WelchResult w = welch_t(variant, full);
        e.p = w.p;
        e.tier = significance_tier(w.p);
        e.delta_mu = mean_of(variant) - mean_of(full);
        e.d = cohens_d(variant, full);
        e.ci = mean_diff_ci(variant, full);
        out.push_back(e);
    }
    return out;
}

}  // namespace mstk
