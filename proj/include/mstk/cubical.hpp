#pragma once

#include <cstdint>
#include <vector>

#include "mstk/grid.hpp"

namespace mstk {

/// Per-voxel filtration values: negative strictly inside the phase, positive
/// strictly outside, magnitudes in voxel units. `degenerate` marks an
/// all-one-sign field (empty or full mask).
struct FiltrationField {
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> value;
    bool degenerate = false;
};

// Signed Euclidean distance: +EDT(to phase) on background voxels,
// -EDT(to background) on phase voxels, center-to-center voxel units.
FiltrationField signed_distance_filtration(const PhaseMask& m);

/// Full cubical complex on the voxel grid in Khalimsky coordinates:
/// (2nx+1)(2ny+1)(2nz+1) cells; a coordinate is odd where the cell has extent.
/// Voxels are top cells; every lower cell takes the minimum over the incident
/// top cells, which makes the filtration monotone (face <= coface).
struct CubicalComplex {
    int nx = 0, ny = 0, nz = 0;  // voxel dims
    int kx = 0, ky = 0, kz = 0;  // Khalimsky dims
    std::vector<double> value;   // per cell
    std::vector<uint8_t> dim;    // per cell

    std::size_t num_cells() const { return value.size(); }
    std::size_t cell_index(int a, int b, int c) const {
        return (static_cast<std::size_t>(c) * ky + b) * kx + a;
    }
    void cell_coords(std::size_t id, int& a, int& b, int& c) const {
        a = static_cast<int>(id % kx);
        b = static_cast<int>((id / kx) % ky);
        c = static_cast<int>(id / (static_cast<std::size_t>(kx) * ky));
    }
    // Writes the ids of the cell's boundary faces (two per odd axis).
    int boundary(std::size_t id, std::size_t out[6]) const;
};

CubicalComplex build_complex(const FiltrationField& f);

}  // namespace mstk
