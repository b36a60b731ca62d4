#include "mstk/grid.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mstk {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Pore: return "pore";
        case Phase::Ni: return "ni";
        case Phase::Ysz: return "ysz";
    }
    return "?";
}

Phase phase_from_name(const std::string& name) {
    if (name == "pore") return Phase::Pore;
    if (name == "ni") return Phase::Ni;
    if (name == "ysz") return Phase::Ysz;
    throw std::invalid_argument("unknown phase name: " + name);
}

double PhaseGrid::volume() const {
    return static_cast<double>(nx) * ny * nz * voxel_size * voxel_size * voxel_size;
}

std::size_t PhaseMask::count() const {
    std::size_t c = 0;
    for (uint8_t b : bits) c += b;
    return c;
}

PhaseGrid new_grid(int nx, int ny, int nz, double voxel_size, Phase fill) {
    if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("grid dims must be >= 1");
    if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel_size must be > 0");
    PhaseGrid g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.voxel_size = voxel_size;
    g.data.assign(static_cast<std::size_t>(nx) * ny * nz, static_cast<uint8_t>(fill));
    return g;
}

PhaseGrid crop_interior(const PhaseGrid& g, int margin) {
    if (margin < 0) throw std::invalid_argument("margin must be >= 0");
    if (margin == 0) return g;
    int m = std::min(g.nx, std::min(g.ny, g.nz));
    if (2 * margin >= m) throw std::invalid_argument("margin too large for grid");
    PhaseGrid out = new_grid(g.nx - 2 * margin, g.ny - 2 * margin, g.nz - 2 * margin,
                             g.voxel_size, Phase::Pore);
    for (int z = 0; z < out.nz; ++z)
        for (int y = 0; y < out.ny; ++y) {
            const uint8_t* src = &g.data[g.index(margin, y + margin, z + margin)];
            uint8_t* dst = &out.data[out.index(0, y, z)];
            std::memcpy(dst, src, static_cast<std::size_t>(out.nx));
        }
    return out;
}

PhaseMask phase_mask(const PhaseGrid& g, Phase phase) {
    PhaseMask m;
    m.nx = g.nx;
    m.ny = g.ny;
    m.nz = g.nz;
    m.bits.resize(g.size());
    const uint8_t want = static_cast<uint8_t>(phase);
    for (std::size_t i = 0; i < g.size(); ++i) m.bits[i] = (g.data[i] == want) ? 1 : 0;
    return m;
}

std::array<double, 3> volume_fractions(const PhaseGrid& g) {
    std::array<std::size_t, 3> counts = {0, 0, 0};
    for (uint8_t b : g.data) counts[b]++;
    std::array<double, 3> f;
    double total = static_cast<double>(g.size());
    for (int i = 0; i < 3; ++i) f[i] = static_cast<double>(counts[i]) / total;
    return f;
}

namespace {

template <typename T>
void put_le(std::ofstream& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::ifstream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void write_grid(const PhaseGrid& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write("MSTR", 4);
    put_le<uint32_t>(out, 1u);
    put_le<uint32_t>(out, static_cast<uint32_t>(g.nx));
    put_le<uint32_t>(out, static_cast<uint32_t>(g.ny));
    put_le<uint32_t>(out, static_cast<uint32_t>(g.nz));
    put_le<double>(out, g.voxel_size);
    out.write(reinterpret_cast<const char*>(g.data.data()),
              static_cast<std::streamsize>(g.data.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

PhaseGrid read_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open grid file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "MSTR", 4) != 0)
        throw std::runtime_error("bad magic in grid file: " + path);
    uint32_t version = get_le<uint32_t>(in);
    if (version != 1) throw std::runtime_error("unsupported grid file version");
    uint32_t nx = get_le<uint32_t>(in);
    uint32_t ny = get_le<uint32_t>(in);
    uint32_t nz = get_le<uint32_t>(in);
    double vs = get_le<double>(in);
    if (!in || nx == 0 || ny == 0 || nz == 0 || !(vs > 0.0))
        throw std::runtime_error("corrupt grid header: " + path);
    PhaseGrid g = new_grid(static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz),
                           vs, Phase::Pore);
    in.read(reinterpret_cast<char*>(g.data.data()), static_cast<std::streamsize>(g.size()));
    if (static_cast<std::size_t>(in.gcount()) != g.size())
        throw std::runtime_error("truncated grid file: " + path);
    for (uint8_t b : g.data)
        if (b > 2) throw std::runtime_error("invalid phase label in grid file: " + path);
    return g;
}

}  // namespace mstk
