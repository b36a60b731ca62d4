#pragma once

#include <array>
#include <vector>

#include "mstk/cubical.hpp"

namespace mstk {

struct PersistencePair {
    double birth = 0.0;
    double death = 0.0;

    double persistence() const { return death - birth; }
    auto operator<=>(const PersistencePair&) const = default;
};

struct PersistenceDiagram {
    int k = 0;
    std::vector<PersistencePair> pairs;
};

// Boundary-matrix reduction over Z/2 with the clearing (twist) optimization,
// cells ordered by (value, dim, index). Zero-persistence pairs and essential
// classes are discarded; diagrams returned for k = 0, 1, 2.
std::array<PersistenceDiagram, 3> compute_persistence(const CubicalComplex& c);

// Naive full left-to-right reduction without clearing; test oracle.
// Refuses complexes with more than 20000 cells.
std::array<PersistenceDiagram, 3> brute_force_persistence(const CubicalComplex& c);

// Convenience: mask -> signed distance filtration -> complex -> diagrams.
std::array<PersistenceDiagram, 3> phase_diagrams(const PhaseMask& m);

}  // namespace mstk
