#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mstk/cubical.hpp"
#include "mstk/persistence.hpp"
#include "mstk/persistence_image.hpp"
#include "oracles.hpp"

using namespace mstk;

namespace {

PhaseMask make_mask(int nx, int ny, int nz) {
    PhaseMask m;
    m.nx = nx;
    m.ny = ny;
    m.nz = nz;
    m.bits.assign(static_cast<std::size_t>(nx) * ny * nz, 0);
    return m;
}

std::vector<std::array<double, 3>> flatten_diagrams(const std::array<PersistenceDiagram, 3>& dg) {
    std::vector<std::array<double, 3>> out;
    for (int k = 0; k < 3; ++k)
        for (const auto& p : dg[static_cast<std::size_t>(k)].pairs)
            out.push_back({static_cast<double>(k), p.birth, p.death});
    std::sort(out.begin(), out.end());
    return out;
}

// integral of N(mu, sigma) over [lo, hi]: composite Simpson on the clipped
// support window, dense enough for 1e-9 accuracy at any sigma
double simpson_gauss_mass(double lo, double hi, double mu, double sigma) {
    double a = std::max(lo, mu - 10.0 * sigma);
    double b = std::min(hi, mu + 10.0 * sigma);
    if (b <= a) return 0.0;
    const int n = 1024;
    double h = (b - a) / n;
    auto f = [&](double x) {
        double u = (x - mu) / sigma;
        return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * M_PI));
    };
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

TEST_CASE("signed distance filtration signs and magnitudes") {
    PhaseMask m = make_mask(3, 1, 1);
    m.bits[1] = 1;
    FiltrationField f = signed_distance_filtration(m);
    CHECK(f.value[0] == doctest::Approx(1.0));
    CHECK(f.value[1] == doctest::Approx(-1.0));
    CHECK(f.value[2] == doctest::Approx(1.0));
    CHECK_FALSE(f.degenerate);

    PhaseMask slab = make_mask(5, 5, 5);
    for (int z = 0; z < 5; ++z)
        for (int y = 0; y < 5; ++y)
            for (int x = 1; x <= 3; ++x) slab.bits[slab.index(x, y, z)] = 1;
    FiltrationField fs = signed_distance_filtration(slab);
    CHECK(fs.value[slab.index(2, 2, 2)] == doctest::Approx(-2.0));

    PhaseMask full = make_mask(2, 2, 2);
    std::fill(full.bits.begin(), full.bits.end(), 1);
    CHECK(signed_distance_filtration(full).degenerate);
    CHECK(signed_distance_filtration(make_mask(2, 2, 2)).degenerate);
}

TEST_CASE("signed distance filtration matches brute force on random masks") {
    Rng rng(3);
    PhaseMask m = oracle::random_mask(12, 12, 12, 0.5, rng);
    FiltrationField f = signed_distance_filtration(m);
    std::vector<uint8_t> inv(m.bits.size());
    for (std::size_t i = 0; i < m.bits.size(); ++i) inv[i] = m.bits[i] ? 0 : 1;
    auto d_bg = oracle::brute_force_squared_edt(inv, 12, 12, 12);
    auto d_fg = oracle::brute_force_squared_edt(m.bits, 12, 12, 12);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        if (m.bits[i]) {
            CHECK(f.value[i] == -std::sqrt(d_bg[i]));
        } else {
            CHECK(f.value[i] == std::sqrt(d_fg[i]));
        }
    }
}

TEST_CASE("complex construction and the min rule") {
    FiltrationField f;
    f.nx = f.ny = f.nz = 1;
    f.value = {2.5};
    CubicalComplex c = build_complex(f);
    CHECK(c.num_cells() == 27);
    for (double v : c.value) CHECK(v == 2.5);

    FiltrationField f2;
    f2.nx = 2;
    f2.ny = f2.nz = 1;
    f2.value = {1.0, 2.0};
    CubicalComplex c2 = build_complex(f2);
    CHECK(c2.num_cells() == 45);
    // shared face between the voxels sits at Khalimsky (2,1,1)
    CHECK(c2.value[c2.cell_index(2, 1, 1)] == 1.0);
    CHECK(c2.value[c2.cell_index(1, 1, 1)] == 1.0);
    CHECK(c2.value[c2.cell_index(3, 1, 1)] == 2.0);
}

TEST_CASE("complex filtration is monotone on random fields") {
    Rng rng(5);
    FiltrationField f;
    f.nx = f.ny = f.nz = 6;
    f.value.resize(216);
    for (auto& v : f.value) v = rng.uniform(-3.0, 3.0);
    CubicalComplex c = build_complex(f);
    std::size_t bd[6];
    for (std::size_t id = 0; id < c.num_cells(); ++id) {
        int nb = c.boundary(id, bd);
        for (int t = 0; t < nb; ++t) CHECK(c.value[bd[t]] <= c.value[id]);
    }
}

TEST_CASE("single isolated voxel has no finite pairs") {
    PhaseMask m = make_mask(3, 3, 3);
    m.bits[m.index(1, 1, 1)] = 1;
    auto dg = phase_diagrams(m);
    CHECK(dg[0].pairs.empty());
    CHECK(dg[1].pairs.empty());
    CHECK(dg[2].pairs.empty());
}

TEST_CASE("two separated voxels merge at the flooding value") {
    PhaseMask m = make_mask(3, 1, 1);
    m.bits[0] = 1;
    m.bits[2] = 1;
    auto dg = phase_diagrams(m);
    REQUIRE(dg[0].pairs.size() == 1);
    CHECK(dg[0].pairs[0].birth == doctest::Approx(-1.0));
    CHECK(dg[0].pairs[0].death == doctest::Approx(1.0));
    CHECK(dg[1].pairs.empty());
    CHECK(dg[2].pairs.empty());
}

TEST_CASE("planar ring yields exactly one finite H1 pair") {
    PhaseMask m = make_mask(5, 5, 1);
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x)
            if (!(x == 2 && y == 2)) m.bits[m.index(x, y, 0)] = 1;
    auto dg = phase_diagrams(m);
    REQUIRE(dg[1].pairs.size() == 1);
    CHECK(dg[1].pairs[0].birth < 0.0);
    CHECK(dg[1].pairs[0].death > 0.0);

    auto brute = brute_force_persistence(build_complex(signed_distance_filtration(m)));
    CHECK(flatten_diagrams(dg) == flatten_diagrams(brute));
}

TEST_CASE("hollow shell yields exactly one finite H2 pair") {
    PhaseMask m = make_mask(5, 5, 5);
    for (int z = 0; z < 5; ++z)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x)
                if (x == 0 || y == 0 || z == 0 || x == 4 || y == 4 || z == 4)
                    m.bits[m.index(x, y, z)] = 1;
    auto dg = phase_diagrams(m);
    REQUIRE(dg[2].pairs.size() == 1);
    CHECK(dg[2].pairs[0].birth < 0.0);
    CHECK(dg[2].pairs[0].death > 0.0);
}

TEST_CASE("solid blob has no finite H1 or H2 pairs") {
    PhaseMask m = make_mask(7, 7, 7);
    for (int z = 2; z <= 4; ++z)
        for (int y = 2; y <= 4; ++y)
            for (int x = 2; x <= 4; ++x) m.bits[m.index(x, y, z)] = 1;
    auto dg = phase_diagrams(m);
    CHECK(dg[1].pairs.empty());
    CHECK(dg[2].pairs.empty());
}

TEST_CASE("reduction equals the brute-force oracle on random masks") {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        int nx = 2 + static_cast<int>(rng.uniform_int(4));
        int ny = 2 + static_cast<int>(rng.uniform_int(4));
        int nz = 2 + static_cast<int>(rng.uniform_int(4));
        PhaseMask m = oracle::random_mask(nx, ny, nz, 0.3 + 0.4 * rng.uniform(), rng);
        CubicalComplex c = build_complex(signed_distance_filtration(m));
        auto fast = compute_persistence(c);
        auto brute = brute_force_persistence(c);
        CHECK(flatten_diagrams(fast) == flatten_diagrams(brute));
    }
}

TEST_CASE("oracle refuses oversized complexes") {
    PhaseMask m = make_mask(16, 16, 16);
    m.bits[0] = 1;
    CubicalComplex c = build_complex(signed_distance_filtration(m));
    CHECK_THROWS(brute_force_persistence(c));
}

TEST_CASE("diagrams are invariant under all 48 cube symmetries") {
    Rng rng(13);
    PhaseMask m = oracle::random_mask(5, 5, 5, 0.45, rng);
    PhaseGrid g = new_grid(5, 5, 5, 1.0, Phase::Pore);
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        g.data[i] = m.bits[i] ? static_cast<uint8_t>(Phase::Ni) : 0;

    auto base = flatten_diagrams(phase_diagrams(phase_mask(g, Phase::Ni)));
    for (const auto& sym : oracle::cube_symmetries()) {
        PhaseGrid t = oracle::apply_symmetry(g, sym);
        auto dg = flatten_diagrams(phase_diagrams(phase_mask(t, Phase::Ni)));
        CHECK(dg == base);
    }
}

TEST_CASE("weight function") {
    CHECK(pi_weight(0.0, 3.0, 2) == 0.0);
    CHECK(pi_weight(1.0, 1.0, 1) == doctest::Approx(M_PI / 4).epsilon(1e-15));
    double prev = -1.0;
    for (double p = 0.0; p <= 4.0; p += 0.25) {
        double w = pi_weight(p, 2.5, 3);
        CHECK(w >= prev);
        CHECK(w >= 0.0);
        CHECK(w < M_PI / 2);
        prev = w;
    }
}

TEST_CASE("persistence surface values") {
    PiConfig cfg;
    cfg.C = 1.5;
    cfg.gamma = 2;
    cfg.sigma = 0.3;
    PersistenceDiagram empty{1, {}};
    CHECK(surface_value(empty, 0.3, 0.7, cfg) == 0.0);

    PersistenceDiagram one{1, {{0.2, 0.9}}};
    double p = 0.7;
    double peak = surface_value(one, 0.2, p, cfg);
    CHECK(peak == doctest::Approx(pi_weight(p, cfg.C, cfg.gamma) /
                                  (2.0 * M_PI * cfg.sigma * cfg.sigma)));

    PersistenceDiagram two{1, {{0.2, 0.9}, {0.5, 0.6}}};
    PersistenceDiagram second{1, {{0.5, 0.6}}};
    double x = 0.4, y = 0.55;
    CHECK(surface_value(two, x, y, cfg) ==
          doctest::Approx(surface_value(one, x, y, cfg) + surface_value(second, x, y, cfg)));
}

TEST_CASE("persistence image integrates the surface exactly") {
    Rng rng(19);
    PiConfig cfg;
    cfg.resolution = 32;
    cfg.birth_range = {-2.0, 2.0};
    cfg.pers_range = {0.0, 3.0};

    for (int trial = 0; trial < 5; ++trial) {
        cfg.C = rng.uniform(0.5, 40.0);
        cfg.gamma = static_cast<int>(rng.uniform_int_incl(1, 6));
        cfg.sigma = rng.log_uniform(1e-3, 5e-2);
        double birth = rng.uniform(-1.5, 1.5);
        double pers = rng.uniform(0.2, 2.5);
        PersistenceDiagram d{1, {{birth, birth + pers}}};
        PersistenceImage img = persistence_image(d, cfg);
        double w = pi_weight(pers, cfg.C, cfg.gamma);

        double bw = (cfg.birth_range.hi - cfg.birth_range.lo) / cfg.resolution;
        double pw = (cfg.pers_range.hi - cfg.pers_range.lo) / cfg.resolution;
        for (int j = 0; j < cfg.resolution; ++j)
            for (int i = 0; i < cfg.resolution; ++i) {
                double blo = cfg.birth_range.lo + i * bw;
                double plo = cfg.pers_range.lo + j * pw;
                double ref = w * simpson_gauss_mass(blo, blo + bw, birth, cfg.sigma) *
                             simpson_gauss_mass(plo, plo + pw, pers, cfg.sigma);
                CHECK(std::abs(img.at(i, j) - ref) <= 1e-6);
            }

        // pair far from the range boundary: total mass equals the weight
        if (birth > cfg.birth_range.lo + 1.0 && birth < cfg.birth_range.hi - 1.0 &&
            pers > cfg.pers_range.lo + 1.0 && pers < cfg.pers_range.hi - 1.0)
            CHECK(img.sum() == doctest::Approx(w).epsilon(1e-6));
    }
}

TEST_CASE("persistence image is linear and bounded by total weight") {
    PiConfig cfg;
    cfg.C = 2.0;
    cfg.gamma = 1;
    cfg.sigma = 0.05;
    cfg.birth_range = {-1.0, 1.0};
    cfg.pers_range = {0.0, 2.0};

    PersistenceDiagram d1{0, {{-0.5, 0.3}, {-0.2, 0.6}}};
    PersistenceDiagram d2{0, {{0.1, 0.9}}};
    PersistenceDiagram both{0, {}};
    both.pairs = d1.pairs;
    both.pairs.insert(both.pairs.end(), d2.pairs.begin(), d2.pairs.end());

    PersistenceImage a = persistence_image(d1, cfg);
    PersistenceImage b = persistence_image(d2, cfg);
    PersistenceImage c = persistence_image(both, cfg);
    for (std::size_t t = 0; t < c.values.size(); ++t)
        CHECK(c.values[t] == a.values[t] + b.values[t]);

    double wsum = 0.0;
    for (const auto& p : both.pairs) wsum += pi_weight(p.persistence(), cfg.C, cfg.gamma);
    CHECK(c.sum() <= wsum + 1e-12);

    PersistenceDiagram empty{0, {}};
    PersistenceImage z = persistence_image(empty, cfg);
    for (double v : z.values) CHECK(v == 0.0);
}

TEST_CASE("pi config validation") {
    PiConfig cfg;
    cfg.C = 0.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg.C = 1.0;
    cfg.gamma = 0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg.gamma = 1;
    cfg.sigma = -1.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg.sigma = 0.1;
    cfg.birth_range = {1.0, 1.0};
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("featurize produces nine channels with fixed shape") {
    PhaseGrid g = new_grid(4, 4, 4, 1.0, Phase::Ni);
    PiConfig cfg;
    cfg.sigma = 0.05;
    FeatureSet fs = featurize(g, cfg);
    for (const auto& ch : fs.channels) {
        CHECK(ch.resolution == 32);
        CHECK(ch.values.size() == 1024);
        for (double v : ch.values) CHECK(v == 0.0);  // uniform grid: no finite pairs
    }
}

TEST_CASE("featurize is rotation invariant") {
    Rng rng(29);
    PhaseGrid g = oracle::random_grid(6, 6, 6, rng);
    PiConfig cfg;
    cfg.C = 3.0;
    cfg.gamma = 2;
    cfg.sigma = 0.02;
    cfg.birth_range = {-4.0, 4.0};
    cfg.pers_range = {0.0, 6.0};
    FeatureSet a = featurize(g, cfg);
    FeatureSet b = featurize(oracle::rotate_z90(g), cfg);
    for (int ch = 0; ch < kNumChannels; ++ch)
        for (std::size_t t = 0; t < a.channels[0].values.size(); ++t) {
            double va = a.channels[static_cast<std::size_t>(ch)].values[t];
            double vb = b.channels[static_cast<std::size_t>(ch)].values[t];
            CHECK(std::abs(va - vb) <= 1e-9 * std::max(1.0, std::abs(va)));
        }
}

TEST_CASE("featurize is deterministic") {
    Rng rng(31);
    PhaseGrid g = oracle::random_grid(5, 5, 5, rng);
    PiConfig cfg;
    FeatureSet a = featurize(g, cfg);
    FeatureSet b = featurize(g, cfg);
    for (int ch = 0; ch < kNumChannels; ++ch)
        CHECK(a.channels[static_cast<std::size_t>(ch)].values ==
              b.channels[static_cast<std::size_t>(ch)].values);
}

TEST_CASE("channel range fitting pads by two sigma") {
    GridDiagrams gd;
    for (int p = 0; p < 3; ++p)
        for (int k = 0; k < 3; ++k)
            gd[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)].k = k;
    gd[0][0].pairs = {{-2.0, 1.0}, {-1.0, 3.0}};
    std::vector<const GridDiagrams*> samples = {&gd};
    ChannelRanges r = fit_channel_ranges(samples, 0.5);
    CHECK(r.birth[0].lo == doctest::Approx(-3.0));
    CHECK(r.birth[0].hi == doctest::Approx(0.0));
    CHECK(r.pers[0].lo == doctest::Approx(2.0));
    CHECK(r.pers[0].hi == doctest::Approx(5.0));
    // empty channel still gets a usable window
    CHECK(r.birth[1].lo == doctest::Approx(-1.0));
    CHECK(r.birth[1].hi == doctest::Approx(1.0));
}
