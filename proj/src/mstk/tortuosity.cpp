#include "mstk/tortuosity.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mstk/percolation.hpp"
#include "mstk/util.hpp"

namespace mstk {

namespace {

struct System {
    std::vector<int32_t> unknown;              // voxel -> unknown id, -1 outside
    std::vector<std::array<int32_t, 6>> nbr;   // unknown -> neighbor unknowns
    std::vector<double> diag;
    std::vector<double> rhs;
    std::vector<uint8_t> inlet, outlet;
    std::size_t n = 0;
};

void matvec(const System& s, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < s.n; ++i) {
        double acc = s.diag[i] * x[i];
        for (int k = 0; k < 6; ++k) {
            int32_t j = s.nbr[i][static_cast<std::size_t>(k)];
            if (j >= 0) acc -= x[static_cast<std::size_t>(j)];
        }
        y[i] = acc;
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TortuosityResult tortuosity_factor(const PhaseMask& m, const TortuosityOptions& opts) {
    if (opts.axis < 0 || opts.axis > 2) throw std::invalid_argument("axis must be 0, 1 or 2");
    TortuosityResult res;

    PercolationMap perc = percolation(m);
    if (!perc.spans_axis(opts.axis)) return res;  // undefined, recorded not fatal

    const int dims[3] = {m.nx, m.ny, m.nz};
    const int L = dims[opts.axis];
    auto axis_coord = [&](int x, int y, int z) {
        return opts.axis == 0 ? x : (opts.axis == 1 ? y : z);
    };

    System s;
    s.unknown.assign(m.bits.size(), -1);
    std::vector<std::size_t> voxels;
    for (int z = 0; z < m.nz; ++z)
        for (int y = 0; y < m.ny; ++y)
            for (int x = 0; x < m.nx; ++x) {
                std::size_t i = m.index(x, y, z);
                int32_t c = perc.component[i];
                if (c < 0 || !perc.component_spans(c, opts.axis)) continue;
                s.unknown[i] = static_cast<int32_t>(voxels.size());
                voxels.push_back(i);
            }
    s.n = voxels.size();
    s.nbr.assign(s.n, {-1, -1, -1, -1, -1, -1});
    s.diag.assign(s.n, 0.0);
    s.rhs.assign(s.n, 0.0);
    s.inlet.assign(s.n, 0);
    s.outlet.assign(s.n, 0);

    // Scaled conductances: 1 between adjacent voxels, 2 from a face voxel to
    // the Dirichlet plane (half-cell spacing); the pitch factor cancels in tau.
    for (std::size_t u = 0; u < s.n; ++u) {
        std::size_t i = voxels[u];
        int x = static_cast<int>(i % m.nx);
        int y = static_cast<int>((i / m.nx) % m.ny);
        int z = static_cast<int>(i / (static_cast<std::size_t>(m.nx) * m.ny));
        const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (int k = 0; k < 6; ++k) {
            int xx = x + d[k][0], yy = y + d[k][1], zz = z + d[k][2];
            if (xx < 0 || yy < 0 || zz < 0 || xx >= m.nx || yy >= m.ny || zz >= m.nz) continue;
            int32_t j = s.unknown[m.index(xx, yy, zz)];
            if (j < 0) continue;
            s.nbr[u][static_cast<std::size_t>(k)] = j;
            s.diag[u] += 1.0;
        }
        int a = axis_coord(x, y, z);
        if (a == 0) {
            s.inlet[u] = 1;
            s.diag[u] += 2.0;
            s.rhs[u] += 2.0;  // c_in = 1
        }
        if (a == L - 1) {
            s.outlet[u] = 1;
            s.diag[u] += 2.0;  // c_out = 0
        }
    }

    // initial guess: linear profile along the axis
    std::vector<double> x(s.n), r(s.n), zv(s.n), p(s.n), ap(s.n);
    for (std::size_t u = 0; u < s.n; ++u) {
        std::size_t i = voxels[u];
        int xi = static_cast<int>(i % m.nx);
        int yi = static_cast<int>((i / m.nx) % m.ny);
        int zi = static_cast<int>(i / (static_cast<std::size_t>(m.nx) * m.ny));
        x[u] = 1.0 - (axis_coord(xi, yi, zi) + 0.5) / L;
    }

    matvec(s, x, r);
    for (std::size_t i = 0; i < s.n; ++i) r[i] = s.rhs[i] - r[i];
    double bnorm = std::sqrt(dot(s.rhs, s.rhs));
    if (bnorm == 0.0) bnorm = 1.0;
    double rnorm = std::sqrt(dot(r, r));

    double rz = 0.0;
    int it = 0;
    if (rnorm / bnorm > opts.rel_residual) {
        for (std::size_t i = 0; i < s.n; ++i) zv[i] = r[i] / s.diag[i];
        p = zv;
        rz = dot(r, zv);
        for (it = 1; it <= opts.max_iterations; ++it) {
            matvec(s, p, ap);
            double alpha = rz / dot(p, ap);
            for (std::size_t i = 0; i < s.n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            rnorm = std::sqrt(dot(r, r));
            if (rnorm / bnorm <= opts.rel_residual) break;
            for (std::size_t i = 0; i < s.n; ++i) zv[i] = r[i] / s.diag[i];
            double rz_new = dot(r, zv);
            double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < s.n; ++i) p[i] = zv[i] + beta * p[i];
        }
        if (it > opts.max_iterations)
            throw NumericError("tortuosity solver failed to converge");
    }
    res.iterations = it;

    double phi_in = 0.0, phi_out = 0.0;
    for (std::size_t u = 0; u < s.n; ++u) {
        if (s.inlet[u]) phi_in += 2.0 * (1.0 - x[u]);
        if (s.outlet[u]) phi_out += 2.0 * x[u];
    }
    if (phi_in <= 0.0) throw NumericError("tortuosity solve produced no net flux");
    res.flux_mismatch = std::abs(phi_in - phi_out) / phi_in;
    if (res.flux_mismatch > opts.flux_tol)
        throw NumericError("tortuosity flux conservation violated");

    double cross = 1.0;
    for (int a = 0; a < 3; ++a)
        if (a != opts.axis) cross *= dims[a];
    double phi_bulk = cross / static_cast<double>(L);
    double phi = 0.5 * (phi_in + phi_out);
    res.d_eff_over_d = phi / phi_bulk;
    double eps = static_cast<double>(m.count()) / static_cast<double>(m.bits.size());
    res.tau = eps / res.d_eff_over_d;
    return res;
}

}  // namespace mstk
