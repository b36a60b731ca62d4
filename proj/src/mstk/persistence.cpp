#include "mstk/persistence.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mstk {

namespace {

using Col = std::vector<uint32_t>;

// Z/2 column addition: symmetric difference of sorted rank lists.
void xor_merge(const Col& a, const Col& b, Col& out) {
    out.clear();
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            out.push_back(a[i++]);
        } else if (b[j] < a[i]) {
            out.push_back(b[j++]);
        } else {
            ++i;
            ++j;
        }
    }
    out.insert(out.end(), a.begin() + static_cast<std::ptrdiff_t>(i), a.end());
    out.insert(out.end(), b.begin() + static_cast<std::ptrdiff_t>(j), b.end());
}

std::vector<uint32_t> sorted_order(const CubicalComplex& c) {
    std::vector<uint32_t> order(c.num_cells());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](uint32_t x, uint32_t y) {
        if (c.value[x] != c.value[y]) return c.value[x] < c.value[y];
        if (c.dim[x] != c.dim[y]) return c.dim[x] < c.dim[y];
        return x < y;
    });
    return order;
}

void emit_pair(std::array<PersistenceDiagram, 3>& dg, const CubicalComplex& c,
               uint32_t birth_cell, uint32_t death_cell) {
    double b = c.value[birth_cell];
    double d = c.value[death_cell];
    if (d > b) dg[c.dim[birth_cell]].pairs.push_back({b, d});
}

}  // namespace

std::array<PersistenceDiagram, 3> compute_persistence(const CubicalComplex& c) {
    const std::size_t n = c.num_cells();
    std::vector<uint32_t> order = sorted_order(c);
    std::vector<uint32_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) rank[order[i]] = static_cast<uint32_t>(i);

    std::array<PersistenceDiagram, 3> dg;
    for (int k = 0; k < 3; ++k) dg[static_cast<std::size_t>(k)].k = k;

    std::vector<int32_t> pivot_owner(n, -1);
    std::vector<uint8_t> cleared(n, 0);
    std::size_t bd[6];
    Col col, tmp;

    for (int d = 3; d >= 1; --d) {
        std::vector<Col> cols;
        for (std::size_t oi = 0; oi < n; ++oi) {
            uint32_t cell = order[oi];
            if (c.dim[cell] != d || cleared[cell]) continue;
            int nb = c.boundary(cell, bd);
            col.clear();
            for (int t = 0; t < nb; ++t) col.push_back(rank[bd[t]]);
            std::sort(col.begin(), col.end());

            for (;;) {
                if (col.empty()) break;
                uint32_t low = col.back();
                int32_t owner = pivot_owner[low];
                if (owner < 0) {
                    pivot_owner[low] = static_cast<int32_t>(cols.size());
                    uint32_t birth_cell = order[low];
                    cleared[birth_cell] = 1;
                    emit_pair(dg, c, birth_cell, cell);
                    cols.push_back(col);
                    break;
                }
                xor_merge(col, cols[static_cast<std::size_t>(owner)], tmp);
                col.swap(tmp);
            }
        }
        // Pivot ranks of this pass belong to (d-1)-cells; the next pass only
        // looks up (d-2)-cell ranks, so no owner reset is needed.
    }
    return dg;
}

std::array<PersistenceDiagram, 3> brute_force_persistence(const CubicalComplex& c) {
    const std::size_t n = c.num_cells();
    if (n > 20000) throw std::runtime_error("brute-force oracle limited to 20000 cells");
    std::vector<uint32_t> order = sorted_order(c);
    std::vector<uint32_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) rank[order[i]] = static_cast<uint32_t>(i);

    std::array<PersistenceDiagram, 3> dg;
    for (int k = 0; k < 3; ++k) dg[static_cast<std::size_t>(k)].k = k;

    std::vector<int32_t> pivot_owner(n, -1);
    std::vector<Col> cols(n);
    std::size_t bd[6];
    Col tmp;

    for (std::size_t j = 0; j < n; ++j) {
        uint32_t cell = order[j];
        Col& col = cols[j];
        int nb = c.boundary(cell, bd);
        for (int t = 0; t < nb; ++t) col.push_back(rank[bd[t]]);
        std::sort(col.begin(), col.end());
        while (!col.empty()) {
            uint32_t low = col.back();
            int32_t owner = pivot_owner[low];
            if (owner < 0) {
                pivot_owner[low] = static_cast<int32_t>(j);
                emit_pair(dg, c, order[low], cell);
                break;
            }
            xor_merge(col, cols[static_cast<std::size_t>(owner)], tmp);
            col.swap(tmp);
        }
    }
    return dg;
}

std::array<PersistenceDiagram, 3> phase_diagrams(const PhaseMask& m) {
    return compute_persistence(build_complex(signed_distance_filtration(m)));
}

}  // namespace mstk
