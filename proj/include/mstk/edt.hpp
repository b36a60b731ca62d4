#pragma once

#include <vector>

#include "mstk/grid.hpp"

namespace mstk {

// Exact squared Euclidean distance (voxel units, center-to-center) from every
// voxel to the nearest feature voxel, separable parabola algorithm. A voxel
// with feature[i] != 0 gets 0. With no feature voxel anywhere, every entry
// saturates at kEdtSaturated^2.
std::vector<double> squared_edt(const std::vector<uint8_t>& feature, int nx, int ny, int nz);

inline double edt_saturation(int nx, int ny, int nz) { return double(nx) + ny + nz + 1; }

// Euclidean distance in micrometers from each in-mask voxel to the nearest
// out-of-mask voxel center; 0 outside the mask.
std::vector<double> distance_transform(const PhaseMask& m, double voxel_size);

}  // namespace mstk
