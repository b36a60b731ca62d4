#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately naive: direct definitions, no shared code with the library
// paths they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mstk/grid.hpp"
#include "mstk/rng.hpp"

namespace oracle {

// O(n^2) nearest-feature scan; squared center distances in voxel units.
inline std::vector<double> brute_force_squared_edt(const std::vector<uint8_t>& feature, int nx,
                                                   int ny, int nz) {
    std::vector<double> out(feature.size(), std::numeric_limits<double>::infinity());
    std::vector<std::array<int, 3>> feats;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                if (feature[(static_cast<std::size_t>(z) * ny + y) * nx + x])
                    feats.push_back({x, y, z});
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& f : feats) {
                    double dx = x - f[0], dy = y - f[1], dz = z - f[2];
                    best = std::min(best, dx * dx + dy * dy + dz * dz);
                }
                out[(static_cast<std::size_t>(z) * ny + y) * nx + x] = best;
            }
    return out;
}

// BFS flood fill over 6-connectivity; component label per voxel, -1 outside.
inline std::vector<int> bfs_components(const mstk::PhaseMask& m) {
    std::vector<int> comp(m.bits.size(), -1);
    int next = 0;
    std::vector<std::size_t> queue;
    for (std::size_t start = 0; start < m.bits.size(); ++start) {
        if (!m.bits[start] || comp[start] >= 0) continue;
        comp[start] = next;
        queue.assign(1, start);
        while (!queue.empty()) {
            std::size_t i = queue.back();
            queue.pop_back();
            int x = static_cast<int>(i % m.nx);
            int y = static_cast<int>((i / m.nx) % m.ny);
            int z = static_cast<int>(i / (static_cast<std::size_t>(m.nx) * m.ny));
            const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                 {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
            for (auto& dd : d) {
                int xx = x + dd[0], yy = y + dd[1], zz = z + dd[2];
                if (xx < 0 || yy < 0 || zz < 0 || xx >= m.nx || yy >= m.ny || zz >= m.nz)
                    continue;
                std::size_t j = (static_cast<std::size_t>(zz) * m.ny + yy) * m.nx + xx;
                if (m.bits[j] && comp[j] < 0) {
                    comp[j] = next;
                    queue.push_back(j);
                }
            }
        }
        ++next;
    }
    return comp;
}

inline mstk::PhaseMask random_mask(int nx, int ny, int nz, double fill, mstk::Rng& rng) {
    mstk::PhaseMask m;
    m.nx = nx;
    m.ny = ny;
    m.nz = nz;
    m.bits.resize(static_cast<std::size_t>(nx) * ny * nz);
    for (auto& b : m.bits) b = rng.uniform() < fill ? 1 : 0;
    return m;
}

inline mstk::PhaseGrid random_grid(int nx, int ny, int nz, mstk::Rng& rng,
                                   double voxel_size = 1.0) {
    mstk::PhaseGrid g = mstk::new_grid(nx, ny, nz, voxel_size, mstk::Phase::Pore);
    for (auto& b : g.data) b = static_cast<uint8_t>(rng.uniform_int(3));
    return g;
}

// The 48 cube symmetries: axis permutation + per-axis flips.
struct CubeSymmetry {
    std::array<int, 3> perm;
    std::array<bool, 3> flip;
};

inline std::vector<CubeSymmetry> cube_symmetries() {
    std::vector<CubeSymmetry> out;
    std::array<int, 3> p = {0, 1, 2};
    std::sort(p.begin(), p.end());
    do {
        for (int f = 0; f < 8; ++f)
            out.push_back({p, {(f & 1) != 0, (f & 2) != 0, (f & 4) != 0}});
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

inline mstk::PhaseGrid apply_symmetry(const mstk::PhaseGrid& g, const CubeSymmetry& s) {
    // output coordinate o[k] = source coordinate along axis perm[k], flipped
    int src_dims[3] = {g.nx, g.ny, g.nz};
    int out_dims[3];
    for (int k = 0; k < 3; ++k) out_dims[k] = src_dims[s.perm[static_cast<std::size_t>(k)]];
    mstk::PhaseGrid out =
        mstk::new_grid(out_dims[0], out_dims[1], out_dims[2], g.voxel_size, mstk::Phase::Pore);
    for (int z = 0; z < out.nz; ++z)
        for (int y = 0; y < out.ny; ++y)
            for (int x = 0; x < out.nx; ++x) {
                int o[3] = {x, y, z};
                int src[3];
                for (int k = 0; k < 3; ++k) {
                    int v = o[k];
                    if (s.flip[static_cast<std::size_t>(k)]) v = out_dims[k] - 1 - v;
                    src[s.perm[static_cast<std::size_t>(k)]] = v;
                }
                out.set(x, y, z, g.at(src[0], src[1], src[2]));
            }
    return out;
}

inline mstk::PhaseGrid rotate_z90(const mstk::PhaseGrid& g) {
    return apply_symmetry(g, {{1, 0, 2}, {true, false, false}});
}

// sample mean/variance helpers (two-pass definitions)
inline double ref_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double ref_var(const std::vector<double>& v) {  // unbiased
    double m = ref_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// Student-t upper tail by quadrature: substitute x = sqrt(df) tan(theta),
// integrand becomes K sqrt(df) cos^(df-1)(theta) on [atan(t/sqrt(df)), pi/2].
inline double ref_student_t_sf(double t, double df) {
    double k = std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df)) /
               std::sqrt(df * M_PI);
    double a = std::atan(t / std::sqrt(df));
    double b = 0.5 * M_PI;
    const int n = 20000;  // composite Simpson, even count
    double h = (b - a) / n;
    auto f = [&](double th) { return k * std::sqrt(df) * std::pow(std::cos(th), df - 1.0); };
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

inline double ref_welch_p(const std::vector<double>& a, const std::vector<double>& b) {
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double va = ref_var(a), vb = ref_var(b);
    double t = (ref_mean(a) - ref_mean(b)) / std::sqrt(va / na + vb / nb);
    double u = va / na + vb / nb;
    double df = u * u / (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    return 2.0 * ref_student_t_sf(std::abs(t), df);
}

}  // namespace oracle
