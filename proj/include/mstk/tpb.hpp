#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mstk/grid.hpp"
#include "mstk/percolation.hpp"

namespace mstk {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

/// Quad mesh of phase-separating voxel faces. Vertices sit on grid corners
/// (positions in micrometers); vertices on the domain boundary are fixed.
struct SurfaceMesh {
    std::vector<Vec3> positions;
    std::vector<uint8_t> fixed;
    std::vector<std::array<int32_t, 4>> quads;
};

/// Triple-phase-boundary segments as vertex index pairs into the mesh.
/// A segment is active when every incident voxel lies in a percolated
/// component of its phase.
struct TpbNetwork {
    std::vector<std::array<int32_t, 2>> segments;
    std::vector<uint8_t> active;
    std::vector<uint8_t> on_tpb;  // per mesh vertex
};

SurfaceMesh extract_surface(const PhaseGrid& g);

TpbNetwork extract_tpb(const PhaseGrid& g, const SurfaceMesh& mesh,
                       const std::array<PercolationMap, 3>& perc);

// Two mesh-neighbor iterations (lambda=0.4) over free surface vertices with
// TPB vertices held, then one polyline iteration (lambda=0.5) over free TPB
// vertices. Fixed vertices never move. Returns the smoothed positions.
std::vector<Vec3> laplacian_smooth(const SurfaceMesh& mesh, const TpbNetwork& tpb);

double polyline_length(const std::vector<Vec3>& pos, const TpbNetwork& tpb, bool active_only);

struct TpbDensity {
    double total = 0.0;   // um^-2
    double active = 0.0;  // um^-2
};

// TPB length per unit volume, measured on the smoothed line.
TpbDensity tpb_length_density(const PhaseGrid& g);

}  // namespace mstk
