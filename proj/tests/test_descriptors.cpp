#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <set>

#include "mstk/descriptors.hpp"
#include "mstk/edt.hpp"
#include "mstk/generator.hpp"
#include "mstk/percolation.hpp"
#include "mstk/tpb.hpp"
#include "mstk/tortuosity.hpp"
#include "mstk/watershed.hpp"
#include "oracles.hpp"

using namespace mstk;

namespace {

PhaseMask mask_of(const PhaseGrid& g, Phase p) { return phase_mask(g, p); }

PhaseMask make_mask(int nx, int ny, int nz) {
    PhaseMask m;
    m.nx = nx;
    m.ny = ny;
    m.nz = nz;
    m.bits.assign(static_cast<std::size_t>(nx) * ny * nz, 0);
    return m;
}

std::size_t vox(const PhaseMask& m, int x, int y, int z) { return m.index(x, y, z); }

// Four columns in a 2x2 cross-section extruded along z; the central vertical
// edge chain is the only TPB line.
PhaseGrid four_column_grid(int nz, double pitch) {
    PhaseGrid g = new_grid(2, 2, nz, pitch, Phase::Ni);
    for (int z = 0; z < nz; ++z) {
        g.set(0, 0, z, Phase::Ni);
        g.set(1, 0, z, Phase::Ni);
        g.set(0, 1, z, Phase::Ysz);
        g.set(1, 1, z, Phase::Pore);
    }
    return g;
}

}  // namespace

TEST_CASE("distance transform basics") {
    PhaseMask m = make_mask(3, 1, 1);
    m.bits[1] = 1;
    auto d = distance_transform(m, 1.0);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(1.0));
    CHECK(d[2] == 0.0);

    PhaseMask slab = make_mask(5, 5, 5);
    for (int z = 0; z < 5; ++z)
        for (int y = 0; y < 5; ++y)
            for (int x = 1; x <= 3; ++x) slab.bits[vox(slab, x, y, z)] = 1;
    auto ds = distance_transform(slab, 1.0);
    CHECK(ds[vox(slab, 2, 2, 2)] == doctest::Approx(2.0));
}

TEST_CASE("distance transform matches brute force exactly") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        PhaseMask m = oracle::random_mask(16, 16, 16, 0.6, rng);
        std::vector<uint8_t> outside(m.bits.size());
        for (std::size_t i = 0; i < m.bits.size(); ++i) outside[i] = m.bits[i] ? 0 : 1;
        auto ours = squared_edt(outside, 16, 16, 16);
        auto ref = oracle::brute_force_squared_edt(outside, 16, 16, 16);
        for (std::size_t i = 0; i < ours.size(); ++i) CHECK(ours[i] == ref[i]);
    }
}

TEST_CASE("distance transform scales with pitch") {
    PhaseMask m = make_mask(3, 1, 1);
    m.bits[1] = 1;
    auto d = distance_transform(m, 0.5);
    CHECK(d[1] == doctest::Approx(0.5));
}

TEST_CASE("percolation flags and spans") {
    PhaseMask col = make_mask(4, 4, 4);
    for (int z = 0; z < 4; ++z) col.bits[vox(col, 1, 1, z)] = 1;
    PercolationMap p = percolation(col);
    CHECK(p.num_components == 1);
    CHECK(p.voxel_percolated(vox(col, 1, 1, 0)));
    CHECK(p.spans_axis(2));
    CHECK_FALSE(p.spans_axis(0));

    PhaseMask interior = make_mask(4, 4, 4);
    interior.bits[vox(interior, 1, 2, 2)] = 1;
    PercolationMap pi = percolation(interior);
    CHECK_FALSE(pi.voxel_percolated(vox(interior, 1, 2, 2)));

    PhaseMask face = make_mask(4, 4, 4);
    face.bits[vox(face, 0, 2, 2)] = 1;
    PercolationMap pf = percolation(face);
    CHECK(pf.voxel_percolated(vox(face, 0, 2, 2)));
}

TEST_CASE("percolation equals BFS flood fill on random masks") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        PhaseMask m = oracle::random_mask(16, 16, 16, 0.35, rng);
        PercolationMap p = percolation(m);
        std::vector<int> ref = oracle::bfs_components(m);

        std::map<int, int> lib_to_ref;
        std::map<int, int> ref_to_lib;
        int ref_max = -1;
        for (std::size_t i = 0; i < m.bits.size(); ++i) {
            CHECK((p.component[i] >= 0) == (ref[i] >= 0));
            if (ref[i] < 0) continue;
            ref_max = std::max(ref_max, ref[i]);
            auto [a, ina] = lib_to_ref.try_emplace(p.component[i], ref[i]);
            CHECK(a->second == ref[i]);
            auto [b, inb] = ref_to_lib.try_emplace(ref[i], p.component[i]);
            CHECK(b->second == p.component[i]);
        }
        CHECK(p.num_components == ref_max + 1);

        // percolated flag agrees with a direct face scan per reference component
        std::set<int> touching;
        for (int z = 0; z < 16; ++z)
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x) {
                    if (ref[vox(m, x, y, z)] < 0) continue;
                    if (x == 0 || y == 0 || z == 0 || x == 15 || y == 15 || z == 15)
                        touching.insert(ref[vox(m, x, y, z)]);
                }
        for (std::size_t i = 0; i < m.bits.size(); ++i)
            if (ref[i] >= 0)
                CHECK(p.voxel_percolated(i) == (touching.count(ref[i]) > 0));
    }
}

TEST_CASE("watershed labels isolated blobs") {
    PhaseMask m = make_mask(8, 8, 8);
    for (int z = 2; z < 4; ++z)
        for (int y = 2; y < 4; ++y)
            for (int x = 2; x < 4; ++x) m.bits[vox(m, x, y, z)] = 1;
    LabeledGrid l = watershed_grains(m, 1.0);
    CHECK(l.num_grains == 1);
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        CHECK((l.label[i] > 0) == (m.bits[i] != 0));

    LabeledGrid empty = watershed_grains(make_mask(4, 4, 4), 1.0);
    CHECK(empty.num_grains == 0);
}

TEST_CASE("watershed separates two disjoint spheres") {
    PhaseMask m = make_mask(20, 10, 10);
    auto add_sphere = [&](int cx, int cy, int cz, double r) {
        for (int z = 0; z < m.nz; ++z)
            for (int y = 0; y < m.ny; ++y)
                for (int x = 0; x < m.nx; ++x) {
                    double dx = x - cx, dy = y - cy, dz = z - cz;
                    if (dx * dx + dy * dy + dz * dz <= r * r) m.bits[vox(m, x, y, z)] = 1;
                }
    };
    add_sphere(4, 5, 5, 2.5);
    add_sphere(14, 5, 5, 2.5);
    LabeledGrid l = watershed_grains(m, 1.0);
    CHECK(l.num_grains == 2);
}

TEST_CASE("watershed splits overlapping spheres at the neck") {
    PhaseMask m = make_mask(18, 10, 10);
    auto add_sphere = [&](int cx, int cy, int cz, double r) {
        for (int z = 0; z < m.nz; ++z)
            for (int y = 0; y < m.ny; ++y)
                for (int x = 0; x < m.nx; ++x) {
                    double dx = x - cx, dy = y - cy, dz = z - cz;
                    if (dx * dx + dy * dy + dz * dz <= r * r) m.bits[vox(m, x, y, z)] = 1;
                }
    };
    add_sphere(5, 5, 5, 3.2);
    add_sphere(12, 5, 5, 3.2);
    LabeledGrid l = watershed_grains(m, 1.0);
    REQUIRE(l.num_grains == 2);

    // priority-flood oracle from the two hand-placed markers
    auto dist = distance_transform(m, 1.0);
    std::vector<int32_t> label(m.bits.size(), 0);
    using Entry = std::pair<double, std::size_t>;
    auto cmp = [](const Entry& a, const Entry& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> pq(cmp);
    label[vox(m, 5, 5, 5)] = 1;
    label[vox(m, 12, 5, 5)] = 2;
    pq.push({dist[vox(m, 5, 5, 5)], vox(m, 5, 5, 5)});
    pq.push({dist[vox(m, 12, 5, 5)], vox(m, 12, 5, 5)});
    while (!pq.empty()) {
        auto [d, i] = pq.top();
        pq.pop();
        (void)d;
        int x = static_cast<int>(i % m.nx);
        int y = static_cast<int>((i / m.nx) % m.ny);
        int z = static_cast<int>(i / (static_cast<std::size_t>(m.nx) * m.ny));
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!dx && !dy && !dz) continue;
                    int xx = x + dx, yy = y + dy, zz = z + dz;
                    if (xx < 0 || yy < 0 || zz < 0 || xx >= m.nx || yy >= m.ny || zz >= m.nz)
                        continue;
                    std::size_t j = vox(m, xx, yy, zz);
                    if (!m.bits[j] || label[j]) continue;
                    label[j] = label[i];
                    pq.push({dist[j], j});
                }
    }
    // same two-way partition up to label names
    std::map<int32_t, int32_t> remap;
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        if (!m.bits[i]) continue;
        auto [it, fresh] = remap.try_emplace(l.label[i], label[i]);
        (void)fresh;
        CHECK(it->second == label[i]);
    }
    CHECK(remap.size() == 2);
}

TEST_CASE("mean equivalent diameter formula and tallies") {
    LabeledGrid l;
    l.nx = l.ny = l.nz = 2;
    l.label = {1, 1, 1, 1, 1, 1, 1, 1};
    l.num_grains = 1;
    auto d = mean_equivalent_diameter(l, 1.0);
    REQUIRE(d.has_value());
    CHECK(*d == doctest::Approx(std::cbrt(48.0 / M_PI)).epsilon(1e-12));

    // two grains of equal volume give the same mean as either alone
    LabeledGrid two;
    two.nx = 4;
    two.ny = two.nz = 2;
    two.label = {1, 1, 2, 2, 1, 1, 2, 2, 1, 1, 2, 2, 1, 1, 2, 2};
    two.num_grains = 2;
    auto d2 = mean_equivalent_diameter(two, 1.0);
    REQUIRE(d2.has_value());
    CHECK(*d2 == doctest::Approx(std::cbrt(6.0 * 8.0 / M_PI)).epsilon(1e-12));

    LabeledGrid none;
    none.nx = none.ny = none.nz = 2;
    none.label.assign(8, 0);
    none.num_grains = 0;
    CHECK_FALSE(mean_equivalent_diameter(none, 1.0).has_value());

    // random labeling vs an independent per-grain tally
    Rng rng(9);
    LabeledGrid r;
    r.nx = r.ny = r.nz = 6;
    r.label.resize(216);
    r.num_grains = 5;
    for (auto& v : r.label) v = static_cast<int32_t>(rng.uniform_int(6));  // 0 = background
    std::map<int32_t, std::size_t> counts;
    for (auto v : r.label)
        if (v > 0) counts[v]++;
    REQUIRE(counts.size() == 5);
    double expect = 0.0;
    for (auto& [gid, c] : counts) expect += std::cbrt(6.0 * static_cast<double>(c) / M_PI);
    expect /= 5.0;
    auto dr = mean_equivalent_diameter(r, 1.0);
    REQUIRE(dr.has_value());
    CHECK(*dr == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("extract_surface counts separating faces") {
    PhaseGrid uniform = new_grid(4, 4, 4, 1.0, Phase::Ni);
    CHECK(extract_surface(uniform).quads.empty());

    // two half-domains split by a plane
    PhaseGrid halves = new_grid(4, 4, 4, 1.0, Phase::Ni);
    for (int z = 2; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) halves.set(x, y, z, Phase::Pore);
    SurfaceMesh mesh = extract_surface(halves);
    CHECK(mesh.quads.size() == 16);

    Rng rng(31);
    PhaseGrid r = oracle::random_grid(7, 6, 5, rng);
    std::size_t expect = 0;
    for (int z = 0; z < r.nz; ++z)
        for (int y = 0; y < r.ny; ++y)
            for (int x = 0; x < r.nx; ++x) {
                if (x + 1 < r.nx && r.at(x, y, z) != r.at(x + 1, y, z)) ++expect;
                if (y + 1 < r.ny && r.at(x, y, z) != r.at(x, y + 1, z)) ++expect;
                if (z + 1 < r.nz && r.at(x, y, z) != r.at(x, y, z + 1)) ++expect;
            }
    CHECK(extract_surface(r).quads.size() == expect);
}

TEST_CASE("tpb extraction on the four-column fixture") {
    const int nz = 6;
    PhaseGrid g = four_column_grid(nz, 1.0);
    std::array<PercolationMap, 3> perc;
    for (int p = 0; p < 3; ++p)
        perc[static_cast<std::size_t>(p)] = percolation(mask_of(g, static_cast<Phase>(p)));
    SurfaceMesh mesh = extract_surface(g);
    TpbNetwork net = extract_tpb(g, mesh, perc);
    CHECK(net.segments.size() == static_cast<std::size_t>(nz));
    for (auto a : net.active) CHECK(a == 1);

    // every segment lies on the central vertical edge
    for (auto& s : net.segments) {
        CHECK(mesh.positions[static_cast<std::size_t>(s[0])].x == doctest::Approx(1.0));
        CHECK(mesh.positions[static_cast<std::size_t>(s[0])].y == doctest::Approx(1.0));
    }
}

TEST_CASE("two-phase grid has no tpb") {
    PhaseGrid g = new_grid(4, 4, 4, 1.0, Phase::Ni);
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y) g.set(0, y, z, Phase::Pore);
    std::array<PercolationMap, 3> perc;
    for (int p = 0; p < 3; ++p)
        perc[static_cast<std::size_t>(p)] = percolation(mask_of(g, static_cast<Phase>(p)));
    SurfaceMesh mesh = extract_surface(g);
    CHECK(extract_tpb(g, mesh, perc).segments.empty());
    TpbDensity d = tpb_length_density(g);
    CHECK(d.total == 0.0);
    CHECK(d.active == 0.0);
}

TEST_CASE("isolated interior blob makes its tpb segments inactive") {
    PhaseGrid g = new_grid(5, 5, 5, 1.0, Phase::Pore);
    for (int z = 0; z < 5; ++z)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 2; ++x) g.set(x, y, z, Phase::Ysz);
    g.set(2, 2, 2, Phase::Ni);  // interior ni voxel touching ysz and pore
    std::array<PercolationMap, 3> perc;
    for (int p = 0; p < 3; ++p)
        perc[static_cast<std::size_t>(p)] = percolation(mask_of(g, static_cast<Phase>(p)));
    SurfaceMesh mesh = extract_surface(g);
    TpbNetwork net = extract_tpb(g, mesh, perc);
    REQUIRE_FALSE(net.segments.empty());
    for (auto a : net.active) CHECK(a == 0);  // the ni blob does not reach the boundary
}

TEST_CASE("laplacian smoothing formula on a single free vertex") {
    // free vertex between two fixed neighbors at 0 and 2, start 1.5
    SurfaceMesh mesh;
    mesh.positions = {{0, 0, 0}, {1.5, 0, 0}, {2, 0, 0}};
    mesh.fixed = {1, 0, 1};
    TpbNetwork net;
    net.segments = {{0, 1}, {1, 2}};
    net.active = {1, 1};
    net.on_tpb = {1, 1, 1};
    auto pos = laplacian_smooth(mesh, net);
    CHECK(pos[1].x == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(pos[0].x == 0.0);
    CHECK(pos[2].x == 2.0);
}

TEST_CASE("smoothing keeps a straight tpb line and all-fixed meshes") {
    const int nz = 8;
    PhaseGrid g = four_column_grid(nz, 1.0);
    std::array<PercolationMap, 3> perc;
    for (int p = 0; p < 3; ++p)
        perc[static_cast<std::size_t>(p)] = percolation(mask_of(g, static_cast<Phase>(p)));
    SurfaceMesh mesh = extract_surface(g);
    TpbNetwork net = extract_tpb(g, mesh, perc);
    auto pos = laplacian_smooth(mesh, net);
    double before = polyline_length(mesh.positions, net, false);
    double after = polyline_length(pos, net, false);
    CHECK(after == doctest::Approx(before).epsilon(1e-15));

    // all vertices fixed: identity everywhere
    SurfaceMesh frozen = mesh;
    std::fill(frozen.fixed.begin(), frozen.fixed.end(), 1);
    auto pos2 = laplacian_smooth(frozen, net);
    for (std::size_t v = 0; v < pos2.size(); ++v) {
        CHECK(pos2[v].x == frozen.positions[v].x);
        CHECK(pos2[v].y == frozen.positions[v].y);
        CHECK(pos2[v].z == frozen.positions[v].z);
    }
}

TEST_CASE("staircase tpb line shortens under smoothing") {
    SurfaceMesh mesh;
    TpbNetwork net;
    for (int i = 0; i <= 6; ++i) {
        mesh.positions.push_back({static_cast<double>(i), (i % 2) ? 1.0 : 0.0, 0.0});
        mesh.fixed.push_back(i == 0 || i == 6 ? 1 : 0);
        net.on_tpb.push_back(1);
        if (i > 0) {
            net.segments.push_back({i - 1, i});
            net.active.push_back(1);
        }
    }
    double before = polyline_length(mesh.positions, net, false);
    auto pos = laplacian_smooth(mesh, net);
    double after = polyline_length(pos, net, false);
    CHECK(after < before);
}

TEST_CASE("tpb density on the four-column fixture") {
    for (double pitch : {1.0, 0.0357}) {
        PhaseGrid g = four_column_grid(8, pitch);
        TpbDensity d = tpb_length_density(g);
        CHECK(d.total == doctest::Approx(1.0 / (4.0 * pitch * pitch)).epsilon(1e-12));
        CHECK(d.active == doctest::Approx(d.total).epsilon(1e-12));
    }
}

TEST_CASE("active tpb never exceeds total") {
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        PhaseGrid g = oracle::random_grid(16, 16, 16, rng);
        TpbDensity d = tpb_length_density(g);
        CHECK(d.active >= 0.0);
        CHECK(d.active <= d.total + 1e-15);
    }
}

TEST_CASE("tortuosity of dense and channel domains") {
    PhaseMask dense = make_mask(8, 8, 8);
    std::fill(dense.bits.begin(), dense.bits.end(), 1);
    TortuosityResult r = tortuosity_factor(dense);
    REQUIRE(r.tau.has_value());
    CHECK(*r.tau == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.flux_mismatch <= 1e-4);

    PhaseMask chan = make_mask(6, 6, 10);
    for (int z = 0; z < 10; ++z)
        for (int y = 2; y < 4; ++y)
            for (int x = 2; x < 4; ++x) chan.bits[vox(chan, x, y, z)] = 1;
    TortuosityResult rc = tortuosity_factor(chan);
    REQUIRE(rc.tau.has_value());
    CHECK(*rc.tau == doctest::Approx(1.0).epsilon(1e-3));
    double eps = 4.0 / 36.0;
    CHECK(rc.d_eff_over_d == doctest::Approx(eps).epsilon(1e-3));
}

TEST_CASE("tortuosity undefined for non-percolating phase") {
    PhaseMask m = make_mask(6, 6, 6);
    m.bits[vox(m, 3, 3, 3)] = 1;
    TortuosityResult r = tortuosity_factor(m);
    CHECK_FALSE(r.tau.has_value());
}

namespace {

// dense direct solve of the same finite-volume system, assembled test-side
double direct_solve_tau(const PhaseMask& m, int axis) {
    std::vector<int> ref = oracle::bfs_components(m);
    const int dims[3] = {m.nx, m.ny, m.nz};
    const int L = dims[axis];

    std::set<int> lo_touch, hi_touch;
    for (int z = 0; z < m.nz; ++z)
        for (int y = 0; y < m.ny; ++y)
            for (int x = 0; x < m.nx; ++x) {
                std::size_t i = m.index(x, y, z);
                if (ref[i] < 0) continue;
                int c[3] = {x, y, z};
                if (c[axis] == 0) lo_touch.insert(ref[i]);
                if (c[axis] == L - 1) hi_touch.insert(ref[i]);
            }
    std::vector<std::size_t> keep;
    std::vector<int32_t> unknown(m.bits.size(), -1);
    for (int z = 0; z < m.nz; ++z)
        for (int y = 0; y < m.ny; ++y)
            for (int x = 0; x < m.nx; ++x) {
                std::size_t i = m.index(x, y, z);
                if (ref[i] < 0 || !lo_touch.count(ref[i]) || !hi_touch.count(ref[i])) continue;
                unknown[i] = static_cast<int32_t>(keep.size());
                keep.push_back(i);
            }
    const std::size_t n = keep.size();
    REQUIRE(n > 0);
    std::vector<std::vector<double>> A(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t u = 0; u < n; ++u) {
        std::size_t i = keep[u];
        int x = static_cast<int>(i % m.nx);
        int y = static_cast<int>((i / m.nx) % m.ny);
        int z = static_cast<int>(i / (static_cast<std::size_t>(m.nx) * m.ny));
        const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (auto& dd : d) {
            int xx = x + dd[0], yy = y + dd[1], zz = z + dd[2];
            if (xx < 0 || yy < 0 || zz < 0 || xx >= m.nx || yy >= m.ny || zz >= m.nz) continue;
            int32_t v = unknown[m.index(xx, yy, zz)];
            if (v < 0) continue;
            A[u][u] += 1.0;
            A[u][static_cast<std::size_t>(v)] -= 1.0;
        }
        int c[3] = {x, y, z};
        if (c[axis] == 0) {
            A[u][u] += 2.0;
            A[u][n] += 2.0;
        }
        if (c[axis] == L - 1) A[u][u] += 2.0;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r2 = col + 1; r2 < n; ++r2)
            if (std::abs(A[r2][col]) > std::abs(A[piv][col])) piv = r2;
        std::swap(A[col], A[piv]);
        for (std::size_t r2 = 0; r2 < n; ++r2) {
            if (r2 == col || A[r2][col] == 0.0) continue;
            double f = A[r2][col] / A[col][col];
            for (std::size_t cc = col; cc <= n; ++cc) A[r2][cc] -= f * A[col][cc];
        }
    }
    std::vector<double> c(n);
    for (std::size_t u = 0; u < n; ++u) c[u] = A[u][n] / A[u][u];

    double phi_in = 0.0, phi_out = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        std::size_t i = keep[u];
        int x = static_cast<int>(i % m.nx);
        int y = static_cast<int>((i / m.nx) % m.ny);
        int z = static_cast<int>(i / (static_cast<std::size_t>(m.nx) * m.ny));
        int cc[3] = {x, y, z};
        if (cc[axis] == 0) phi_in += 2.0 * (1.0 - c[u]);
        if (cc[axis] == L - 1) phi_out += 2.0 * c[u];
    }
    double cross = 1.0;
    for (int a = 0; a < 3; ++a)
        if (a != axis) cross *= dims[a];
    double phi_bulk = cross / static_cast<double>(L);
    double eps = static_cast<double>(m.count()) / static_cast<double>(m.bits.size());
    return eps * phi_bulk / (0.5 * (phi_in + phi_out));
}

}  // namespace

TEST_CASE("tortuosity matches a dense direct solve on an L-conduit") {
    PhaseMask m = make_mask(8, 8, 8);
    // bent conduit: a 2x2 column up in z with a lateral jog halfway
    for (int z = 0; z < 4; ++z)
        for (int y = 2; y < 4; ++y)
            for (int x = 2; x < 4; ++x) m.bits[vox(m, x, y, z)] = 1;
    for (int y = 2; y < 6; ++y)
        for (int x = 2; x < 4; ++x) m.bits[vox(m, x, y, 3)] = 1;
    for (int z = 3; z < 8; ++z)
        for (int y = 4; y < 6; ++y)
            for (int x = 2; x < 4; ++x) m.bits[vox(m, x, y, z)] = 1;

    TortuosityOptions opts;
    opts.rel_residual = 1e-12;
    TortuosityResult r = tortuosity_factor(m, opts);
    REQUIRE(r.tau.has_value());
    double ref = direct_solve_tau(m, 2);
    CHECK(*r.tau == doctest::Approx(ref).epsilon(1e-6));
    CHECK(*r.tau >= 1.0 - 1e-7);
}

TEST_CASE("characterize composes the descriptor vector") {
    // straight pore channel through a ni block: tau_pore = 1, no tpb
    PhaseGrid g = new_grid(6, 6, 8, 1.0, Phase::Ni);
    for (int z = 0; z < 8; ++z)
        for (int y = 2; y < 4; ++y)
            for (int x = 2; x < 4; ++x) g.set(x, y, z, Phase::Pore);
    DescriptorVector d = characterize(g);
    REQUIRE(d.tau_pore.has_value());
    CHECK(*d.tau_pore == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(d.l_tpb == 0.0);
    CHECK_FALSE(d.tau_ysz.has_value());  // no ysz present
    CHECK(d.vf_ni + d.vf_ysz + d.vf_pore == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("characterize invariants on a generated structure" * doctest::timeout(600)) {
    GeneratorConfig cfg;
    cfg.target_fractions = {0.35, 0.35, 0.30};
    cfg.mean_particle_radius = 4.0;
    cfg.ca_iterations = 2;
    cfg.seed = 5;
    PhaseGrid g = generate_microstructure(cfg, 48, 48, 48, 7.14 / 200.0);
    DescriptorVector d = characterize(g);
    REQUIRE(d.d_ni.has_value());
    REQUIRE(d.d_ysz.has_value());
    REQUIRE(d.d_pore.has_value());
    CHECK(*d.d_ni > 0.0);
    CHECK(*d.d_ysz > 0.0);
    CHECK(*d.d_pore > 0.0);
    CHECK(d.l_tpb_active >= 0.0);
    CHECK(d.l_tpb_active <= d.l_tpb);
    for (auto* t : {&d.tau_ni, &d.tau_ysz, &d.tau_pore})
        if (t->has_value()) CHECK(**t >= 1.0 - 1e-4);
    CHECK(d.vf_ni + d.vf_ysz + d.vf_pore == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("descriptors are invariant under 90-degree rotation") {
    GeneratorConfig cfg;
    cfg.target_fractions = {0.35, 0.35, 0.30};
    cfg.mean_particle_radius = 3.0;
    cfg.ca_iterations = 1;
    cfg.seed = 8;
    PhaseGrid g = generate_microstructure(cfg, 12, 12, 12, 1.0);
    PhaseGrid r = oracle::rotate_z90(g);  // transport axis z unchanged

    TortuosityOptions tight;
    tight.rel_residual = 1e-13;
    DescriptorVector a = characterize(g, tight);
    DescriptorVector b = characterize(r, tight);
    REQUIRE(a.d_ni.has_value());
    REQUIRE(b.d_ni.has_value());
    CHECK(*a.d_ni == doctest::Approx(*b.d_ni).epsilon(1e-9));
    CHECK(*a.d_ysz == doctest::Approx(*b.d_ysz).epsilon(1e-9));
    CHECK(*a.d_pore == doctest::Approx(*b.d_pore).epsilon(1e-9));
    CHECK(a.l_tpb == doctest::Approx(b.l_tpb).epsilon(1e-9));
    CHECK(a.l_tpb_active == doctest::Approx(b.l_tpb_active).epsilon(1e-9));
    CHECK(a.tau_pore.has_value() == b.tau_pore.has_value());
    if (a.tau_pore && b.tau_pore)
        CHECK(*a.tau_pore == doctest::Approx(*b.tau_pore).epsilon(1e-9));

    // axis-swapping symmetry: tau along the mapped axis must agree
    PhaseGrid sw = oracle::apply_symmetry(g, {{2, 1, 0}, {false, false, false}});
    TortuosityOptions along_x = tight;
    along_x.axis = 0;
    DescriptorVector c = characterize(sw, along_x);
    REQUIRE(c.d_ni.has_value());
    CHECK(*a.d_ni == doctest::Approx(*c.d_ni).epsilon(1e-9));
    CHECK(a.l_tpb == doctest::Approx(c.l_tpb).epsilon(1e-9));
    CHECK(a.tau_ni.has_value() == c.tau_ni.has_value());
    if (a.tau_ni && c.tau_ni) CHECK(*a.tau_ni == doctest::Approx(*c.tau_ni).epsilon(1e-9));
}

TEST_CASE("descriptor csv round trip") {
    DescriptorVector d;
    d.d_ni = 1.5;
    d.d_ysz = 2.5;
    d.l_tpb = 3.25;
    d.l_tpb_active = 3.0;
    d.tau_ni = 1.25;
    d.vf_ni = 0.4;
    d.vf_ysz = 0.35;
    d.vf_pore = 0.25;
    std::string row = descriptor_csv_row("s0001", d);
    std::string text = std::string(kDescriptorCsvHeader) + "\n" + row + "\n";
    std::string path = "test_descriptors.csv";
    {
        std::ofstream out(path);
        out << text;
    }
    DescriptorTable t = read_descriptor_csv(path);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.sample_ids[0] == "s0001");
    CHECK(t.rows[0].d_ni == d.d_ni);
    CHECK_FALSE(t.rows[0].d_pore.has_value());
    CHECK_FALSE(t.rows[0].tau_ysz.has_value());
    CHECK(t.rows[0].l_tpb == 3.25);
    std::filesystem::remove(path);
}
