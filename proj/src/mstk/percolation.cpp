#include "mstk/percolation.hpp"

#include <numeric>

namespace mstk {

namespace {

struct UnionFind {
    std::vector<int32_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int32_t find(int32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(int32_t a, int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

PercolationMap percolation(const PhaseMask& m) {
    PercolationMap out;
    out.nx = m.nx;
    out.ny = m.ny;
    out.nz = m.nz;
    const std::size_t n = m.bits.size();
    UnionFind uf(n);

    auto idx = [&](int x, int y, int z) {
        return (static_cast<std::size_t>(z) * m.ny + y) * m.nx + x;
    };

    for (int z = 0; z < m.nz; ++z)
        for (int y = 0; y < m.ny; ++y)
            for (int x = 0; x < m.nx; ++x) {
                std::size_t i = idx(x, y, z);
                if (!m.bits[i]) continue;
                if (x + 1 < m.nx && m.bits[idx(x + 1, y, z)])
                    uf.unite(static_cast<int32_t>(i), static_cast<int32_t>(idx(x + 1, y, z)));
                if (y + 1 < m.ny && m.bits[idx(x, y + 1, z)])
                    uf.unite(static_cast<int32_t>(i), static_cast<int32_t>(idx(x, y + 1, z)));
                if (z + 1 < m.nz && m.bits[idx(x, y, z + 1)])
                    uf.unite(static_cast<int32_t>(i), static_cast<int32_t>(idx(x, y, z + 1)));
            }

    out.component.assign(n, -1);
    std::vector<int32_t> root_to_comp(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!m.bits[i]) continue;
        int32_t r = uf.find(static_cast<int32_t>(i));
        if (root_to_comp[r] < 0) root_to_comp[r] = next++;
        out.component[i] = root_to_comp[r];
    }
    out.num_components = next;
    out.face_mask.assign(static_cast<std::size_t>(next), 0);

    for (int z = 0; z < m.nz; ++z)
        for (int y = 0; y < m.ny; ++y)
            for (int x = 0; x < m.nx; ++x) {
                std::size_t i = idx(x, y, z);
                int32_t c = out.component[i];
                if (c < 0) continue;
                uint8_t& fm = out.face_mask[static_cast<std::size_t>(c)];
                if (x == 0) fm |= 1u << 0;
                if (y == 0) fm |= 1u << 1;
                if (z == 0) fm |= 1u << 2;
                if (x == m.nx - 1) fm |= 1u << 3;
                if (y == m.ny - 1) fm |= 1u << 4;
                if (z == m.nz - 1) fm |= 1u << 5;
            }
    return out;
}

}  // namespace mstk
