#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mstk {

enum class Phase : uint8_t { Pore = 0, Ni = 1, Ysz = 2 };

inline constexpr std::array<Phase, 3> kPhases = {Phase::Pore, Phase::Ni, Phase::Ysz};
inline constexpr int kNumPhases = 3;

const char* phase_name(Phase p);
Phase phase_from_name(const std::string& name);

/// Dense three-phase voxel volume, one byte per voxel, x-fastest order.
struct PhaseGrid {
    int nx = 0, ny = 0, nz = 0;
    double voxel_size = 0.0;  // pitch in micrometers, isotropic
    std::vector<uint8_t> data;

    std::size_t size() const { return data.size(); }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    }
    Phase at(int x, int y, int z) const { return static_cast<Phase>(data[index(x, y, z)]); }
    void set(int x, int y, int z, Phase p) { data[index(x, y, z)] = static_cast<uint8_t>(p); }
    double volume() const;  // domain volume in um^3

    bool operator==(const PhaseGrid&) const = default;
};

/// Binary occupancy for one phase; dimensions match the source grid.
struct PhaseMask {
    int nx = 0, ny = 0, nz = 0;
    std::vector<uint8_t> bits;

    std::size_t size() const { return bits.size(); }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    }
    bool test(int x, int y, int z) const { return bits[index(x, y, z)] != 0; }
    std::size_t count() const;
};

PhaseGrid new_grid(int nx, int ny, int nz, double voxel_size, Phase fill);

// Centered (nx-2m)x(ny-2m)x(nz-2m) subgrid, same pitch. Requires 2*margin < min dim.
PhaseGrid crop_interior(const PhaseGrid& g, int margin);

PhaseMask phase_mask(const PhaseGrid& g, Phase phase);

// Fraction per phase, indexed by the phase's numeric value; sums to 1.
std::array<double, 3> volume_fractions(const PhaseGrid& g);

// Grid file: magic "MSTR", u32 version=1, u32 nx,ny,nz, f64 voxel_size_um,
// then nx*ny*nz label bytes, little-endian, x-fastest.
void write_grid(const PhaseGrid& g, const std::string& path);
PhaseGrid read_grid(const std::string& path);

}  // namespace mstk
