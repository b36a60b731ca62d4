#include "mstk/tpb.hpp"

#include <algorithm>
#include <cmath>

namespace mstk {

namespace {

struct VertexInterner {
    int nx, ny, nz;
    std::vector<int32_t> id;  // corner linear index -> mesh vertex id
    SurfaceMesh* mesh;
    double pitch;

    VertexInterner(const PhaseGrid& g, SurfaceMesh* m)
        : nx(g.nx), ny(g.ny), nz(g.nz),
          id(static_cast<std::size_t>(g.nx + 1) * (g.ny + 1) * (g.nz + 1), -1),
          mesh(m),
          pitch(g.voxel_size) {}

    int32_t intern(int cx, int cy, int cz) {
        std::size_t k = (static_cast<std::size_t>(cz) * (ny + 1) + cy) * (nx + 1) + cx;
        if (id[k] >= 0) return id[k];
        int32_t v = static_cast<int32_t>(mesh->positions.size());
        mesh->positions.push_back({cx * pitch, cy * pitch, cz * pitch});
        bool boundary = cx == 0 || cy == 0 || cz == 0 || cx == nx || cy == ny || cz == nz;
        mesh->fixed.push_back(boundary ? 1 : 0);
        id[k] = v;
        return v;
    }

    int32_t lookup(int cx, int cy, int cz) const {
        std::size_t k = (static_cast<std::size_t>(cz) * (ny + 1) + cy) * (nx + 1) + cx;
        return id[k];
    }
};

}  // namespace

SurfaceMesh extract_surface(const PhaseGrid& g) {
    SurfaceMesh mesh;
    VertexInterner vi(g, &mesh);

    auto add_quad = [&](int c0x, int c0y, int c0z, int ax1, int ax2) {
        // corner plus unit steps along two axes spans the face
        int d1[3] = {ax1 == 0, ax1 == 1, ax1 == 2};
        int d2[3] = {ax2 == 0, ax2 == 1, ax2 == 2};
        std::array<int32_t, 4> q;
        q[0] = vi.intern(c0x, c0y, c0z);
        q[1] = vi.intern(c0x + d1[0], c0y + d1[1], c0z + d1[2]);
        q[2] = vi.intern(c0x + d1[0] + d2[0], c0y + d1[1] + d2[1], c0z + d1[2] + d2[2]);
        q[3] = vi.intern(c0x + d2[0], c0y + d2[1], c0z + d2[2]);
        mesh.quads.push_back(q);
    };

    for (int z = 0; z < g.nz; ++z)
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x) {
                Phase p = g.at(x, y, z);
                if (x + 1 < g.nx && g.at(x + 1, y, z) != p) add_quad(x + 1, y, z, 1, 2);
                if (y + 1 < g.ny && g.at(x, y + 1, z) != p) add_quad(x, y + 1, z, 0, 2);
                if (z + 1 < g.nz && g.at(x, y, z + 1) != p) add_quad(x, y, z + 1, 0, 1);
            }
    return mesh;
}

TpbNetwork extract_tpb(const PhaseGrid& g, const SurfaceMesh& mesh,
                       const std::array<PercolationMap, 3>& perc) {
    TpbNetwork net;
    net.on_tpb.assign(mesh.positions.size(), 0);
    // Rebuild the corner -> mesh-vertex map; corner index = position / pitch.
    VertexInterner vi(g, nullptr);
    for (std::size_t v = 0; v < mesh.positions.size(); ++v) {
        const Vec3& p = mesh.positions[v];
        int cx = static_cast<int>(std::lround(p.x / g.voxel_size));
        int cy = static_cast<int>(std::lround(p.y / g.voxel_size));
        int cz = static_cast<int>(std::lround(p.z / g.voxel_size));
        std::size_t k =
            (static_cast<std::size_t>(cz) * (g.ny + 1) + cy) * (g.nx + 1) + cx;
        vi.id[k] = static_cast<int32_t>(v);
    }

    // Edge along `axis` starting at corner (cx,cy,cz): incident voxels are the
    // <=4 voxels sharing it. TPB iff all three phases appear among them.
    auto check_edge = [&](int cx, int cy, int cz, int axis) {
        int present = 0;
        bool all_perc = true;
        auto visit = [&](int x, int y, int z) {
            if (x < 0 || y < 0 || z < 0 || x >= g.nx || y >= g.ny || z >= g.nz) return;
            std::size_t i = g.index(x, y, z);
            int ph = g.data[i];
            present |= 1 << ph;
            if (!perc[static_cast<std::size_t>(ph)].voxel_percolated(i)) all_perc = false;
        };
        if (axis == 0) {
            visit(cx, cy - 1, cz - 1);
            visit(cx, cy, cz - 1);
            visit(cx, cy - 1, cz);
            visit(cx, cy, cz);
        } else if (axis == 1) {
            visit(cx - 1, cy, cz - 1);
            visit(cx, cy, cz - 1);
            visit(cx - 1, cy, cz);
            visit(cx, cy, cz);
        } else {
            visit(cx - 1, cy - 1, cz);
            visit(cx, cy - 1, cz);
            visit(cx - 1, cy, cz);
            visit(cx, cy, cz);
        }
        if (present != 0b111) return;
        int d[3] = {axis == 0, axis == 1, axis == 2};
        int32_t a = vi.lookup(cx, cy, cz);
        int32_t b = vi.lookup(cx + d[0], cy + d[1], cz + d[2]);
        net.segments.push_back({a, b});
        net.active.push_back(all_perc ? 1 : 0);
        net.on_tpb[static_cast<std::size_t>(a)] = 1;
        net.on_tpb[static_cast<std::size_t>(b)] = 1;
    };

    for (int cz = 0; cz <= g.nz; ++cz)
        for (int cy = 0; cy <= g.ny; ++cy)
            for (int cx = 0; cx <= g.nx; ++cx) {
                if (cx < g.nx) check_edge(cx, cy, cz, 0);
                if (cy < g.ny) check_edge(cx, cy, cz, 1);
                if (cz < g.nz) check_edge(cx, cy, cz, 2);
            }
    return net;
}

std::vector<Vec3> laplacian_smooth(const SurfaceMesh& mesh, const TpbNetwork& tpb) {
    const std::size_t n = mesh.positions.size();
    std::vector<Vec3> pos = mesh.positions;

    // unique mesh edges
    std::vector<std::pair<int32_t, int32_t>> edges;
    edges.reserve(mesh.quads.size() * 4);
    for (const auto& q : mesh.quads)
        for (int e = 0; e < 4; ++e) {
            int32_t a = q[static_cast<std::size_t>(e)];
            int32_t b = q[static_cast<std::size_t>((e + 1) % 4)];
            edges.emplace_back(std::min(a, b), std::max(a, b));
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    auto run_pass = [&](const std::vector<std::pair<int32_t, int32_t>>& es, double lambda,
                        int iterations, auto&& movable) {
        std::vector<Vec3> sum(n);
        std::vector<int> deg(n);
        for (int it = 0; it < iterations; ++it) {
            std::fill(sum.begin(), sum.end(), Vec3{});
            std::fill(deg.begin(), deg.end(), 0);
            for (const auto& [a, b] : es) {
                sum[a].x += pos[b].x;
                sum[a].y += pos[b].y;
                sum[a].z += pos[b].z;
                sum[b].x += pos[a].x;
                sum[b].y += pos[a].y;
                sum[b].z += pos[a].z;
                deg[a]++;
                deg[b]++;
            }
            for (std::size_t v = 0; v < n; ++v) {
                if (!movable(v) || deg[v] == 0) continue;
                double inv = 1.0 / deg[v];
                pos[v].x += lambda * (sum[v].x * inv - pos[v].x);
                pos[v].y += lambda * (sum[v].y * inv - pos[v].y);
                pos[v].z += lambda * (sum[v].z * inv - pos[v].z);
            }
        }
    };

    // Surface pass: TPB vertices are feature-constrained and stay put here;
    // they move only in the dedicated polyline pass below.
    run_pass(edges, 0.4, 2, [&](std::size_t v) {
        return !mesh.fixed[v] && !(v < tpb.on_tpb.size() && tpb.on_tpb[v]);
    });

    std::vector<std::pair<int32_t, int32_t>> line_edges;
    line_edges.reserve(tpb.segments.size());
    for (const auto& s : tpb.segments)
        line_edges.emplace_back(std::min(s[0], s[1]), std::max(s[0], s[1]));
    std::sort(line_edges.begin(), line_edges.end());
    line_edges.erase(std::unique(line_edges.begin(), line_edges.end()), line_edges.end());

    run_pass(line_edges, 0.5, 1, [&](std::size_t v) { return !mesh.fixed[v]; });

    return pos;
}

double polyline_length(const std::vector<Vec3>& pos, const TpbNetwork& tpb, bool active_only) {
    double len = 0.0;
    for (std::size_t s = 0; s < tpb.segments.size(); ++s) {
        if (active_only && !tpb.active[s]) continue;
        const Vec3& a = pos[static_cast<std::size_t>(tpb.segments[s][0])];
        const Vec3& b = pos[static_cast<std::size_t>(tpb.segments[s][1])];
        double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
        len += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return len;
}

TpbDensity tpb_length_density(const PhaseGrid& g) {
    std::array<PercolationMap, 3> perc;
    for (int p = 0; p < 3; ++p)
        perc[static_cast<std::size_t>(p)] = percolation(phase_mask(g, static_cast<Phase>(p)));
    SurfaceMesh mesh = extract_surface(g);
    TpbNetwork net = extract_tpb(g, mesh, perc);
    std::vector<Vec3> smoothed = laplacian_smooth(mesh, net);
    double vol = g.volume();
    TpbDensity d;
    d.total = polyline_length(smoothed, net, false) / vol;
    d.active = polyline_length(smoothed, net, true) / vol;
    return d;
}

}  // namespace mstk
