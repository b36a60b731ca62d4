#pragma once

#include <optional>

#include "mstk/grid.hpp"

namespace mstk {

struct TortuosityOptions {
    int axis = 2;                 // transport axis: 0=x, 1=y, 2=z
    double rel_residual = 1e-7;   // PCG stop on ||r|| / ||b||
    double flux_tol = 1e-4;       // relative inlet/outlet mismatch allowed
    int max_iterations = 200000;
};

struct TortuosityResult {
    std::optional<double> tau;   // empty when the phase does not span the axis
    double d_eff_over_d = 0.0;   // effective over intrinsic diffusivity
    double flux_mismatch = 0.0;  // |phi_in - phi_out| / phi_in
    int iterations = 0;
};

// Steady-state Laplace solve on the in-mask voxels: c=1 on the axis-min face,
// c=0 on the axis-max face, no-flux elsewhere; 6-point finite-volume stencil,
// Jacobi-preconditioned conjugate gradient. tau = eps * D / D_eff with unit D.
// Components not connecting both faces carry no flux and are skipped.
TortuosityResult tortuosity_factor(const PhaseMask& m, const TortuosityOptions& opts = {});

}  // namespace mstk
