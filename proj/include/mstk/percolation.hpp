#pragma once

#include <cstdint>
#include <vector>

#include "mstk/grid.hpp"

namespace mstk {

/// 6-connected components of a mask. A component is percolated when it
/// reaches any face of the domain. face_mask bit a is set when the component
/// touches the min face of axis a, bit 3+a for the max face (axes 0=x,1=y,2=z).
struct PercolationMap {
    int nx = 0, ny = 0, nz = 0;
    std::vector<int32_t> component;   // per voxel, -1 outside the mask
    std::vector<uint8_t> face_mask;   // per component
    int num_components = 0;

    bool component_percolated(int32_t c) const {
        return face_mask[static_cast<std::size_t>(c)] != 0;
    }
    bool voxel_percolated(std::size_t i) const {
        int32_t c = component[i];
        return c >= 0 && component_percolated(c);
    }
    bool component_spans(int32_t c, int axis) const {
        uint8_t m = face_mask[static_cast<std::size_t>(c)];
        return (m & (1u << axis)) && (m & (1u << (3 + axis)));
    }
    bool spans_axis(int axis) const {
        for (int c = 0; c < num_components; ++c)
            if (component_spans(c, axis)) return true;
        return false;
    }
};

PercolationMap percolation(const PhaseMask& m);

}  // namespace mstk
