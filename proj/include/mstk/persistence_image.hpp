#pragma once

#include <array>
#include <string>
#include <vector>

#include "mstk/grid.hpp"
#include "mstk/persistence.hpp"

namespace mstk {

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

struct PiConfig {
    double C = 1.0;
    int gamma = 1;        // positive integer
    double sigma = 0.05;  // Gaussian std, both axes
    int resolution = 32;
    Range birth_range{0.0, 1.0};
    Range pers_range{0.0, 1.0};
};

void validate(const PiConfig& cfg);

// Kusano weight: arctan(C * p^gamma); in [0, pi/2), independent of birth.
double pi_weight(double persistence, double C, int gamma);

// Persistence surface value at (x, y) in birth-persistence coordinates:
// sum over pairs of weight * isotropic Gaussian centered at (b_i, p_i).
double surface_value(const PersistenceDiagram& d, double x, double y, const PiConfig& cfg);

/// Fixed-resolution raster; pixel (i, j) is the exact integral of the surface
/// over the cell [a_i, a_{i+1}] x [a_j, a_{j+1}] (birth index i, persistence
/// index j), computed per pair as a product of Gaussian CDF differences.
struct PersistenceImage {
    int resolution = 0;
    std::vector<double> values;  // row-major over j, i.e. values[j*res + i]

    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * resolution + i]; }
    double sum() const;
};

PersistenceImage persistence_image(const PersistenceDiagram& d, const PiConfig& cfg);

/// One channel per (phase, homology degree), phases ordered pore, ni, ysz and
/// degrees k = 0, 1, 2 within each phase: channel = 3 * phase + k.
inline constexpr int kNumChannels = 9;

int channel_of(Phase p, int k);
std::string channel_name(int channel);

struct ChannelRanges {
    std::array<Range, kNumChannels> birth;
    std::array<Range, kNumChannels> pers;
};

using GridDiagrams = std::array<std::array<PersistenceDiagram, 3>, 3>;  // [phase][k]

// [min - 2 sigma, max + 2 sigma] per channel over the given diagram sets;
// a channel with no pairs gets min = max = 0.
ChannelRanges fit_channel_ranges(const std::vector<const GridDiagrams*>& samples, double sigma);

struct FeatureSet {
    std::array<PersistenceImage, kNumChannels> channels;

    std::vector<double> flatten() const;
};

// Diagrams for all 9 channels of one grid.
GridDiagrams grid_diagrams(const PhaseGrid& g);

// The full chain mask -> filtration -> complex -> diagram -> image per channel,
// using cfg's ranges for every channel.
FeatureSet featurize(const PhaseGrid& g, const PiConfig& cfg);

// Same but with per-channel ranges.
FeatureSet featurize(const PhaseGrid& g, const PiConfig& cfg, const ChannelRanges& ranges);

FeatureSet render_features(const GridDiagrams& diagrams, const PiConfig& cfg,
                           const ChannelRanges& ranges);

}  // namespace mstk
