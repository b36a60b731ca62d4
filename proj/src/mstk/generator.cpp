#include "mstk/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mstk/rng.hpp"

namespace mstk {

namespace {

constexpr uint8_t kUnassigned = 0xFF;

struct Seed {
    int x, y, z;
    uint8_t phase;
};

// Bucketed nearest-seed lookup; exact, with expanding Chebyshev shells.
class SeedIndex {
public:
    SeedIndex(const std::vector<Seed>& seeds, int nx, int ny, int nz)
        : seeds_(seeds), cell_(8) {
        bx_ = (nx + cell_ - 1) / cell_;
        by_ = (ny + cell_ - 1) / cell_;
        bz_ = (nz + cell_ - 1) / cell_;
        buckets_.resize(static_cast<std::size_t>(bx_) * by_ * bz_);
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            const Seed& s = seeds[i];
            buckets_[bucket(s.x / cell_, s.y / cell_, s.z / cell_)].push_back(
                static_cast<int>(i));
        }
    }

    // Nearest by squared center distance; ties resolved to the earliest seed.
    int nearest(int x, int y, int z) const {
        int cx = x / cell_, cy = y / cell_, cz = z / cell_;
        long best_d2 = -1;
        int best = -1;
        int max_ring = std::max(bx_, std::max(by_, bz_));
        for (int ring = 0; ring <= max_ring; ++ring) {
            scan_ring(cx, cy, cz, ring, x, y, z, best_d2, best);
            if (best >= 0) {
                long safe = static_cast<long>(ring) * cell_;
                if (best_d2 <= safe * safe) break;
            }
        }
        return best;
    }

private:
    std::size_t bucket(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * by_ + j) * bx_ + i;
    }

    void consider(int i, int j, int k, int x, int y, int z, long& best_d2, int& best) const {
        if (i < 0 || j < 0 || k < 0 || i >= bx_ || j >= by_ || k >= bz_) return;
        for (int idx : buckets_[bucket(i, j, k)]) {
            const Seed& s = seeds_[idx];
            long dx = s.x - x, dy = s.y - y, dz = s.z - z;
            long d2 = dx * dx + dy * dy + dz * dz;
            if (best < 0 || d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                best_d2 = d2;
                best = idx;
            }
        }
    }

    void scan_ring(int cx, int cy, int cz, int ring, int x, int y, int z, long& best_d2,
                   int& best) const {
        if (ring == 0) {
            consider(cx, cy, cz, x, y, z, best_d2, best);
            return;
        }
        for (int dk = -ring; dk <= ring; ++dk)
            for (int dj = -ring; dj <= ring; ++dj)
                for (int di = -ring; di <= ring; ++di) {
                    if (std::max(std::abs(di), std::max(std::abs(dj), std::abs(dk))) != ring)
                        continue;
                    consider(cx + di, cy + dj, cz + dk, x, y, z, best_d2, best);
                }
    }

    const std::vector<Seed>& seeds_;
    int cell_;
    int bx_, by_, bz_;
    std::vector<std::vector<int>> buckets_;
};

void majority_step(const PhaseGrid& in, PhaseGrid& out) {
    for (int z = 0; z < in.nz; ++z)
        for (int y = 0; y < in.ny; ++y)
            for (int x = 0; x < in.nx; ++x) {
                int counts[3] = {0, 0, 0};
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (dx == 0 && dy == 0 && dz == 0) continue;
                            int xx = x + dx, yy = y + dy, zz = z + dz;
                            if (xx < 0 || yy < 0 || zz < 0 || xx >= in.nx || yy >= in.ny ||
                                zz >= in.nz)
                                continue;
                            counts[in.data[in.index(xx, yy, zz)]]++;
                        }
                uint8_t cur = in.data[in.index(x, y, z)];
                int best = counts[0], best_p = 0;
                bool unique = true;
                for (int p = 1; p < 3; ++p) {
                    if (counts[p] > best) {
                        best = counts[p];
                        best_p = p;
                        unique = true;
                    } else if (counts[p] == best) {
                        unique = false;
                    }
                }
                out.data[out.index(x, y, z)] =
                    (unique && best_p != cur) ? static_cast<uint8_t>(best_p) : cur;
            }
}

}  // namespace

void validate(const GeneratorConfig& cfg) {
    double sum = 0.0;
    for (double f : cfg.target_fractions) {
        if (!(f > 0.0 && f < 1.0))
            throw std::invalid_argument("target fractions must lie in (0,1)");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("target fractions must sum to 1");
    if (!(cfg.mean_particle_radius >= 1.0))
        throw std::invalid_argument("mean particle radius must be >= 1 voxel");
    if (cfg.ca_iterations < 0) throw std::invalid_argument("ca_iterations must be >= 0");
}

PhaseGrid generate_microstructure(const GeneratorConfig& cfg, int nx, int ny, int nz,
                                  double voxel_size) {
    validate(cfg);
    PhaseGrid g = new_grid(nx, ny, nz, voxel_size, Phase::Pore);
    std::fill(g.data.begin(), g.data.end(), kUnassigned);

    const std::size_t total = g.size();
    Rng rng(cfg.seed);

    std::size_t target[3];
    std::size_t assigned[3] = {0, 0, 0};
    for (int p = 0; p < 3; ++p)
        target[p] = static_cast<std::size_t>(
            std::llround(cfg.target_fractions[p] * static_cast<double>(total)));

    std::vector<Seed> seeds;
    std::size_t remaining = total;
    const long max_attempts =
        200000 + static_cast<long>(16.0 * total / cfg.mean_particle_radius);
    long attempts = 0;
    for (;;) {
        int phase = -1;
        double worst = 0.0;
        for (int p = 0; p < 3; ++p) {
            double deficit = static_cast<double>(target[p]) - static_cast<double>(assigned[p]);
            if (deficit > worst) {
                worst = deficit;
                phase = p;
            }
        }
        if (phase < 0 || remaining == 0) break;
        if (++attempts > max_attempts)
            throw std::runtime_error("generation failed: target fractions unreachable at these dims");

        int cx = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(nx)));
        int cy = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(ny)));
        int cz = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(nz)));
        double r = cfg.mean_particle_radius * rng.uniform(0.6, 1.4);
        double r2 = r * r;
        int ir = static_cast<int>(std::ceil(r));
        seeds.push_back({cx, cy, cz, static_cast<uint8_t>(phase)});

        for (int z = std::max(0, cz - ir); z <= std::min(nz - 1, cz + ir); ++z)
            for (int y = std::max(0, cy - ir); y <= std::min(ny - 1, cy + ir); ++y)
                for (int x = std::max(0, cx - ir); x <= std::min(nx - 1, cx + ir); ++x) {
                    double dx = x - cx, dy = y - cy, dz = z - cz;
                    if (dx * dx + dy * dy + dz * dz > r2) continue;
                    std::size_t i = g.index(x, y, z);
                    if (g.data[i] == kUnassigned) {
                        g.data[i] = static_cast<uint8_t>(phase);
                        assigned[phase]++;
                        remaining--;
                    }
                }
    }

    if (remaining > 0) {
        SeedIndex index(seeds, nx, ny, nz);
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y)
                for (int x = 0; x < nx; ++x) {
                    std::size_t i = g.index(x, y, z);
                    if (g.data[i] != kUnassigned) continue;
                    int s = index.nearest(x, y, z);
                    g.data[i] = seeds[static_cast<std::size_t>(s)].phase;
                }
    }

    PhaseGrid buf = g;
    for (int it = 0; it < cfg.ca_iterations; ++it) {
        majority_step(g, buf);
        std::swap(g.data, buf.data);
    }

    auto vf = volume_fractions(g);
    for (int p = 0; p < 3; ++p)
        if (vf[p] == 0.0)
            throw std::runtime_error("generation failed: phase vanished, fractions infeasible");
    return g;
}

}  // namespace mstk
