#pragma once

#include <array>
#include <cstdint>

#include "mstk/grid.hpp"

namespace mstk {

/// Parameters for the synthetic three-phase structure generator:
/// random sphere packing per phase followed by cellular-automata relaxation.
struct GeneratorConfig {
    std::array<double, 3> target_fractions = {0.4, 0.3, 0.3};  // by phase value
    double mean_particle_radius = 4.0;                          // voxels
    int ca_iterations = 2;
    uint64_t seed = 0;
};

void validate(const GeneratorConfig& cfg);

// Deterministic for fixed (cfg, dims). Sphere packing assigns voxels per phase
// until each target fraction is met, leftover voxels take the nearest seed's
// phase, then `ca_iterations` rounds of 26-neighborhood majority vote
// (ties keep the current label).
PhaseGrid generate_microstructure(const GeneratorConfig& cfg, int nx, int ny, int nz,
                                  double voxel_size);

}  // namespace mstk
