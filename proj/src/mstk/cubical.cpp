#include "mstk/cubical.hpp"

#include <algorithm>
#include <cmath>

#include "mstk/edt.hpp"

namespace mstk {

FiltrationField signed_distance_filtration(const PhaseMask& m) {
    FiltrationField f;
    f.nx = m.nx;
    f.ny = m.ny;
    f.nz = m.nz;
    f.value.resize(m.bits.size());

    std::vector<uint8_t> inv(m.bits.size());
    for (std::size_t i = 0; i < m.bits.size(); ++i) inv[i] = m.bits[i] ? 0 : 1;
    std::vector<double> d_to_bg = squared_edt(inv, m.nx, m.ny, m.nz);
    std::vector<double> d_to_fg = squared_edt(m.bits, m.nx, m.ny, m.nz);

    std::size_t in_count = 0;
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        if (m.bits[i]) {
            f.value[i] = -std::sqrt(d_to_bg[i]);
            ++in_count;
        } else {
            f.value[i] = std::sqrt(d_to_fg[i]);
        }
    }
    f.degenerate = (in_count == 0 || in_count == m.bits.size());
    return f;
}

int CubicalComplex::boundary(std::size_t id, std::size_t out[6]) const {
    int a, b, c;
    cell_coords(id, a, b, c);
    int n = 0;
    if (a & 1) {
        out[n++] = cell_index(a - 1, b, c);
        out[n++] = cell_index(a + 1, b, c);
    }
    if (b & 1) {
        out[n++] = cell_index(a, b - 1, c);
        out[n++] = cell_index(a, b + 1, c);
    }
    if (c & 1) {
        out[n++] = cell_index(a, b, c - 1);
        out[n++] = cell_index(a, b, c + 1);
    }
    return n;
}

CubicalComplex build_complex(const FiltrationField& f) {
    CubicalComplex cc;
    cc.nx = f.nx;
    cc.ny = f.ny;
    cc.nz = f.nz;
    cc.kx = 2 * f.nx + 1;
    cc.ky = 2 * f.ny + 1;
    cc.kz = 2 * f.nz + 1;
    const std::size_t n = static_cast<std::size_t>(cc.kx) * cc.ky * cc.kz;
    cc.value.resize(n);
    cc.dim.resize(n);

    auto vox = [&](int x, int y, int z) {
        return f.value[(static_cast<std::size_t>(z) * f.ny + y) * f.nx + x];
    };

    std::size_t id = 0;
    for (int c = 0; c < cc.kz; ++c) {
        int zlo = (c & 1) ? (c - 1) / 2 : std::max(0, c / 2 - 1);
        int zhi = (c & 1) ? (c - 1) / 2 : std::min(f.nz - 1, c / 2);
        for (int b = 0; b < cc.ky; ++b) {
            int ylo = (b & 1) ? (b - 1) / 2 : std::max(0, b / 2 - 1);
            int yhi = (b & 1) ? (b - 1) / 2 : std::min(f.ny - 1, b / 2);
            for (int a = 0; a < cc.kx; ++a, ++id) {
                int xlo = (a & 1) ? (a - 1) / 2 : std::max(0, a / 2 - 1);
                int xhi = (a & 1) ? (a - 1) / 2 : std::min(f.nx - 1, a / 2);
                double v = vox(xlo, ylo, zlo);
                for (int z = zlo; z <= zhi; ++z)
                    for (int y = ylo; y <= yhi; ++y)
                        for (int x = xlo; x <= xhi; ++x) v = std::min(v, vox(x, y, z));
                cc.value[id] = v;
                cc.dim[id] = static_cast<uint8_t>((a & 1) + (b & 1) + (c & 1));
            }
        }
    }
    return cc;
}

}  // namespace mstk
