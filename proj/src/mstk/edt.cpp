#include "mstk/edt.hpp"

#include <cmath>
#include <limits>

namespace mstk {

namespace {

// 1D squared-distance transform of a sampled function (lower envelope of
// parabolas). In/out strided access; v/z/f are scratch of length >= n.
void dt1d(double* f, int n, std::ptrdiff_t stride, int* v, double* z, double* d) {
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    auto fq = [&](int q) { return f[q * stride]; };
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            int p = v[k];
            s = ((fq(q) + double(q) * q) - (fq(p) + double(p) * p)) / (2.0 * q - 2.0 * p);
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double dq = double(q) - v[k];
        d[q] = dq * dq + fq(v[k]);
    }
    for (int q = 0; q < n; ++q) f[q * stride] = d[q];
}

}  // namespace

std::vector<double> squared_edt(const std::vector<uint8_t>& feature, int nx, int ny, int nz) {
    const double sat = edt_saturation(nx, ny, nz);
    const double inf = sat * sat;
    std::vector<double> d(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) d[i] = feature[i] ? 0.0 : inf;

    int nmax = std::max(nx, std::max(ny, nz));
    std::vector<int> v(nmax);
    std::vector<double> z(nmax + 1), buf(nmax);

    auto at = [&](int x, int y, int z_) {
        return (static_cast<std::size_t>(z_) * ny + y) * nx + x;
    };

    for (int zz = 0; zz < nz; ++zz)
        for (int yy = 0; yy < ny; ++yy)
            dt1d(&d[at(0, yy, zz)], nx, 1, v.data(), z.data(), buf.data());
    for (int zz = 0; zz < nz; ++zz)
        for (int xx = 0; xx < nx; ++xx)
            dt1d(&d[at(xx, 0, zz)], ny, nx, v.data(), z.data(), buf.data());
    for (int yy = 0; yy < ny; ++yy)
        for (int xx = 0; xx < nx; ++xx)
            dt1d(&d[at(xx, yy, 0)], nz, static_cast<std::ptrdiff_t>(nx) * ny, v.data(),
                 z.data(), buf.data());

    // Cap the no-feature case to a finite sentinel.
    for (double& x : d)
        if (x > inf) x = inf;
    return d;
}

std::vector<double> distance_transform(const PhaseMask& m, double voxel_size) {
    std::vector<uint8_t> outside(m.bits.size());
    for (std::size_t i = 0; i < m.bits.size(); ++i) outside[i] = m.bits[i] ? 0 : 1;
    std::vector<double> d2 = squared_edt(outside, m.nx, m.ny, m.nz);
    std::vector<double> d(d2.size());
    for (std::size_t i = 0; i < d2.size(); ++i)
        d[i] = m.bits[i] ? std::sqrt(d2[i]) * voxel_size : 0.0;
    return d;
}

}  // namespace mstk
