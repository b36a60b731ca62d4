#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mstk/grid.hpp"

namespace mstk {

/// Grain labels over one phase: 0 = not in phase, 1..num_grains otherwise.
struct LabeledGrid {
    int nx = 0, ny = 0, nz = 0;
    std::vector<int32_t> label;
    int num_grains = 0;
};

// Markers are the 26-connected regional maxima of the Euclidean distance
// transform (one marker per maximal plateau); grains grow by priority flood
// in order of decreasing distance. Empty mask gives an empty labeling.
LabeledGrid watershed_grains(const PhaseMask& m, double voxel_size);

// Mean over grains of the equivalent sphere diameter (6 V_g / pi)^(1/3), in
// micrometers. Empty labeling has no defined diameter.
std::optional<double> mean_equivalent_diameter(const LabeledGrid& l, double voxel_size);

}  // namespace mstk
