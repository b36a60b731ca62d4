#include "mstk/persistence_image.hpp"

#include <cmath>
#include <stdexcept>

namespace mstk {

void validate(const PiConfig& cfg) {
    if (!(cfg.C > 0.0)) throw std::invalid_argument("PI parameter C must be > 0");
    if (cfg.gamma < 1) throw std::invalid_argument("PI parameter gamma must be a positive integer");
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("PI parameter sigma must be > 0");
    if (cfg.resolution < 1) throw std::invalid_argument("PI resolution must be >= 1");
    if (!(cfg.birth_range.hi > cfg.birth_range.lo) || !(cfg.pers_range.hi > cfg.pers_range.lo))
        throw std::invalid_argument("PI ranges must be non-degenerate");
}

double pi_weight(double persistence, double C, int gamma) {
    return std::atan(C * std::pow(persistence, gamma));
}

double surface_value(const PersistenceDiagram& d, double x, double y, const PiConfig& cfg) {
    const double s2 = cfg.sigma * cfg.sigma;
    const double norm = 1.0 / (2.0 * M_PI * s2);
    double acc = 0.0;
    for (const auto& p : d.pairs) {
        double dx = x - p.birth;
        double dy = y - p.persistence();
        acc += pi_weight(p.persistence(), cfg.C, cfg.gamma) * norm *
               std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
    }
    return acc;
}

double PersistenceImage::sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

namespace {

// Phi((hi-mu)/sigma) - Phi((lo-mu)/sigma) without 1-1 cancellation.
double gauss_cdf_diff(double lo, double hi, double mu, double sigma) {
    const double inv = 1.0 / (sigma * std::sqrt(2.0));
    double a = (lo - mu) * inv;
    double b = (hi - mu) * inv;
    if (a + b > 0.0) return 0.5 * (std::erfc(a) - std::erfc(b));
    return 0.5 * (std::erfc(-b) - std::erfc(-a));
}

}  // namespace

PersistenceImage persistence_image(const PersistenceDiagram& d, const PiConfig& cfg) {
    validate(cfg);
    const int res = cfg.resolution;
    PersistenceImage img;
    img.resolution = res;
    img.values.assign(static_cast<std::size_t>(res) * res, 0.0);

    const double bw = (cfg.birth_range.hi - cfg.birth_range.lo) / res;
    const double pw = (cfg.pers_range.hi - cfg.pers_range.lo) / res;

    std::vector<double> gx(static_cast<std::size_t>(res));
    std::vector<double> gy(static_cast<std::size_t>(res));
    for (const auto& pair : d.pairs) {
        double p = pair.persistence();
        double w = pi_weight(p, cfg.C, cfg.gamma);
        for (int i = 0; i < res; ++i) {
            double lo = cfg.birth_range.lo + i * bw;
            gx[static_cast<std::size_t>(i)] = gauss_cdf_diff(lo, lo + bw, pair.birth, cfg.sigma);
        }
        for (int j = 0; j < res; ++j) {
            double lo = cfg.pers_range.lo + j * pw;
            gy[static_cast<std::size_t>(j)] = gauss_cdf_diff(lo, lo + pw, p, cfg.sigma);
        }
        for (int j = 0; j < res; ++j) {
            double wy = w * gy[static_cast<std::size_t>(j)];
            double* row = &img.values[static_cast<std::size_t>(j) * res];
            for (int i = 0; i < res; ++i) row[i] += wy * gx[static_cast<std::size_t>(i)];
        }
    }
    return img;
}

int channel_of(Phase p, int k) { return 3 * static_cast<int>(p) + k; }

std::string channel_name(int channel) {
    return std::string(phase_name(static_cast<Phase>(channel / 3))) + "_h" +
           std::to_string(channel % 3);
}

ChannelRanges fit_channel_ranges(const std::vector<const GridDiagrams*>& samples, double sigma) {
    ChannelRanges r;
    for (int ch = 0; ch < kNumChannels; ++ch) {
        double bmin = 0.0, bmax = 0.0, pmin = 0.0, pmax = 0.0;
        bool seen = false;
        for (const GridDiagrams* sample : samples) {
            const PersistenceDiagram& d =
                (*sample)[static_cast<std::size_t>(ch / 3)][static_cast<std::size_t>(ch % 3)];
            for (const auto& pr : d.pairs) {
                double p = pr.persistence();
                if (!seen) {
                    bmin = bmax = pr.birth;
                    pmin = pmax = p;
                    seen = true;
                } else {
                    bmin = std::min(bmin, pr.birth);
                    bmax = std::max(bmax, pr.birth);
                    pmin = std::min(pmin, p);
                    pmax = std::max(pmax, p);
                }
            }
        }
        r.birth[static_cast<std::size_t>(ch)] = {bmin - 2.0 * sigma, bmax + 2.0 * sigma};
        r.pers[static_cast<std::size_t>(ch)] = {pmin - 2.0 * sigma, pmax + 2.0 * sigma};
    }
    return r;
}

std::vector<double> FeatureSet::flatten() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(kNumChannels) * channels[0].values.size());
    for (const auto& c : channels) out.insert(out.end(), c.values.begin(), c.values.end());
    return out;
}

GridDiagrams grid_diagrams(const PhaseGrid& g) {
    GridDiagrams out;
    for (int p = 0; p < 3; ++p)
        out[static_cast<std::size_t>(p)] = phase_diagrams(phase_mask(g, static_cast<Phase>(p)));
    return out;
}

FeatureSet render_features(const GridDiagrams& diagrams, const PiConfig& cfg,
                           const ChannelRanges& ranges) {
    FeatureSet fs;
    for (int ch = 0; ch < kNumChannels; ++ch) {
        PiConfig c = cfg;
        c.birth_range = ranges.birth[static_cast<std::size_t>(ch)];
        c.pers_range = ranges.pers[static_cast<std::size_t>(ch)];
        fs.channels[static_cast<std::size_t>(ch)] = persistence_image(
            diagrams[static_cast<std::size_t>(ch / 3)][static_cast<std::size_t>(ch % 3)], c);
    }
    return fs;
}

FeatureSet featurize(const PhaseGrid& g, const PiConfig& cfg) {
    ChannelRanges r;
    r.birth.fill(cfg.birth_range);
    r.pers.fill(cfg.pers_range);
    return render_features(grid_diagrams(g), cfg, r);
}

FeatureSet featurize(const PhaseGrid& g, const PiConfig& cfg, const ChannelRanges& ranges) {
    return render_features(grid_diagrams(g), cfg, ranges);
}

}  // namespace mstk
