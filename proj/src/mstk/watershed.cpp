#include "mstk/watershed.hpp"

#include <cmath>
#include <queue>

#include "mstk/edt.hpp"

namespace mstk {

namespace {

// Flood entries carry rotation-invariant tie keys so the segmentation does
// not depend on grid orientation: distance level first, then the source
// marker's peak height, then the exact squared distance to the marker
// plateau, then the plateau size. The voxel index is a last-resort tie key.
struct QueueEntry {
    double level;
    double peak;
    int64_t dist2;
    int32_t plateau_size;
    std::size_t voxel;
    int32_t marker;

    bool operator<(const QueueEntry& o) const {
        if (level != o.level) return level < o.level;            // higher level first
        if (peak != o.peak) return peak < o.peak;                // higher peak first
        if (dist2 != o.dist2) return dist2 > o.dist2;            // closer marker first
        if (plateau_size != o.plateau_size) return plateau_size > o.plateau_size;
        if (voxel != o.voxel) return voxel > o.voxel;
        return marker > o.marker;
    }
};

struct Marker {
    double peak = 0.0;
    int32_t size = 0;
    std::vector<std::array<int, 3>> plateau;
};

}  // namespace

LabeledGrid watershed_grains(const PhaseMask& m, double voxel_size) {
    LabeledGrid out;
    out.nx = m.nx;
    out.ny = m.ny;
    out.nz = m.nz;
    const std::size_t n = m.bits.size();
    out.label.assign(n, 0);

    std::vector<double> dist = distance_transform(m, voxel_size);

    auto idx = [&](int x, int y, int z) {
        return (static_cast<std::size_t>(z) * m.ny + y) * m.nx + x;
    };
    auto coords = [&](std::size_t i, int& x, int& y, int& z) {
        x = static_cast<int>(i % m.nx);
        y = static_cast<int>((i / m.nx) % m.ny);
        z = static_cast<int>(i / (static_cast<std::size_t>(m.nx) * m.ny));
    };
    auto for_neighbors26 = [&](int x, int y, int z, auto&& fn) {
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0 && dz == 0) continue;
                    int xx = x + dx, yy = y + dy, zz = z + dz;
                    if (xx < 0 || yy < 0 || zz < 0 || xx >= m.nx || yy >= m.ny || zz >= m.nz)
                        continue;
                    fn(idx(xx, yy, zz));
                }
    };

    // Regional maxima: flood equal-valued 26-connected plateaus, discard any
    // plateau with a strictly greater in-mask neighbor.
    std::vector<int32_t> plateau(n, 0);  // 0 unvisited, >0 marker id, -1 rejected
    std::vector<Marker> markers(1);      // 1-based ids
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (!m.bits[start] || plateau[start] != 0) continue;
        double v = dist[start];
        int32_t id = static_cast<int32_t>(markers.size());
        bool is_max = true;
        stack.assign(1, start);
        plateau[start] = id;
        std::vector<std::size_t> members;
        while (!stack.empty()) {
            std::size_t cur = stack.back();
            stack.pop_back();
            members.push_back(cur);
            int cx, cy, cz;
            coords(cur, cx, cy, cz);
            for_neighbors26(cx, cy, cz, [&](std::size_t nb) {
                if (!m.bits[nb]) return;
                if (dist[nb] > v) is_max = false;
                if (dist[nb] == v && plateau[nb] == 0) {
                    plateau[nb] = id;
                    stack.push_back(nb);
                }
            });
        }
        if (!is_max) {
            for (std::size_t mb : members) plateau[mb] = -1;
            continue;
        }
        Marker mk;
        mk.peak = v;
        mk.size = static_cast<int32_t>(members.size());
        for (std::size_t mb : members) {
            int cx, cy, cz;
            coords(mb, cx, cy, cz);
            mk.plateau.push_back({cx, cy, cz});
        }
        markers.push_back(std::move(mk));
    }

    const int32_t num_markers = static_cast<int32_t>(markers.size()) - 1;
    if (num_markers == 0) return out;  // empty mask

    auto marker_dist2 = [&](int32_t id, int x, int y, int z) {
        int64_t best = INT64_MAX;
        for (const auto& p : markers[static_cast<std::size_t>(id)].plateau) {
            int64_t dx = p[0] - x, dy = p[1] - y, dz = p[2] - z;
            int64_t d2 = dx * dx + dy * dy + dz * dz;
            if (d2 < best) best = d2;
        }
        return best;
    };

    std::priority_queue<QueueEntry> pq;
    auto push = [&](std::size_t voxel, int32_t marker) {
        int x, y, z;
        coords(voxel, x, y, z);
        const Marker& mk = markers[static_cast<std::size_t>(marker)];
        pq.push({dist[voxel], mk.peak, marker_dist2(marker, x, y, z), mk.size, voxel, marker});
    };

    for (std::size_t i = 0; i < n; ++i)
        if (plateau[i] > 0) push(i, plateau[i]);

    while (!pq.empty()) {
        QueueEntry e = pq.top();
        pq.pop();
        if (out.label[e.voxel] != 0) continue;
        out.label[e.voxel] = e.marker;
        int cx, cy, cz;
        coords(e.voxel, cx, cy, cz);
        for_neighbors26(cx, cy, cz, [&](std::size_t nb) {
            if (!m.bits[nb] || out.label[nb] != 0) return;
            push(nb, e.marker);
        });
    }
    out.num_grains = num_markers;
    return out;
}

std::optional<double> mean_equivalent_diameter(const LabeledGrid& l, double voxel_size) {
    if (l.num_grains == 0) return std::nullopt;
    std::vector<std::size_t> voxels(static_cast<std::size_t>(l.num_grains) + 1, 0);
    for (int32_t v : l.label)
        if (v > 0) voxels[static_cast<std::size_t>(v)]++;
    double vox_vol = voxel_size * voxel_size * voxel_size;
    double sum = 0.0;
    for (int gid = 1; gid <= l.num_grains; ++gid) {
        double vol = static_cast<double>(voxels[static_cast<std::size_t>(gid)]) * vox_vol;
        sum += std::cbrt(6.0 * vol / M_PI);
    }
    return sum / l.num_grains;
}

}  // namespace mstk
