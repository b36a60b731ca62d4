#include "mstk/descriptors.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mstk/tpb.hpp"
#include "mstk/util.hpp"
#include "mstk/watershed.hpp"

namespace mstk {

std::optional<double> DescriptorVector::by_name(const std::string& name) const {
    if (name == "d_ni") return d_ni;
    if (name == "d_ysz") return d_ysz;
    if (name == "d_pore") return d_pore;
    if (name == "l_tpb") return l_tpb;
    if (name == "l_tpb_active") return l_tpb_active;
    if (name == "tau_ni") return tau_ni;
    if (name == "tau_ysz") return tau_ysz;
    if (name == "tau_pore") return tau_pore;
    if (name == "vf_ni") return vf_ni;
    if (name == "vf_ysz") return vf_ysz;
    if (name == "vf_pore") return vf_pore;
    throw std::invalid_argument("unknown attribute: " + name);
}

DescriptorVector characterize(const PhaseGrid& g, const TortuosityOptions& tort) {
    DescriptorVector d;
    auto vf = volume_fractions(g);
    d.vf_pore = vf[0];
    d.vf_ni = vf[1];
    d.vf_ysz = vf[2];

    std::optional<double>* diam[3] = {&d.d_pore, &d.d_ni, &d.d_ysz};
    std::optional<double>* tau[3] = {&d.tau_pore, &d.tau_ni, &d.tau_ysz};
    for (int p = 0; p < 3; ++p) {
        PhaseMask m = phase_mask(g, static_cast<Phase>(p));
        *diam[p] = mean_equivalent_diameter(watershed_grains(m, g.voxel_size), g.voxel_size);
        *tau[p] = tortuosity_factor(m, tort).tau;
    }

    TpbDensity t = tpb_length_density(g);
    d.l_tpb = t.total;
    d.l_tpb_active = t.active;
    return d;
}

namespace {

std::string opt_field(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream ss;
    ss.precision(17);
    ss << *v;
    return ss.str();
}

std::optional<double> parse_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
}

}  // namespace

std::string descriptor_csv_row(const std::string& sample_id, const DescriptorVector& d) {
    std::ostringstream ss;
    ss.precision(17);
    ss << sample_id << ',' << opt_field(d.d_ni) << ',' << opt_field(d.d_ysz) << ','
       << opt_field(d.d_pore) << ',' << d.l_tpb << ',' << d.l_tpb_active << ','
       << opt_field(d.tau_ni) << ',' << opt_field(d.tau_ysz) << ',' << opt_field(d.tau_pore)
       << ',' << d.vf_ni << ',' << d.vf_ysz << ',' << d.vf_pore;
    return ss.str();
}

DescriptorTable read_descriptor_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open descriptor csv: " + path);
    DescriptorTable table;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!header_seen) {
            if (line.rfind("sample_id,", 0) != 0)
                throw std::runtime_error("descriptor csv missing header: " + path);
            header_seen = true;
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 12)
            throw std::runtime_error("descriptor csv row has wrong field count: " + path);
        DescriptorVector d;
        d.d_ni = parse_opt(f[1]);
        d.d_ysz = parse_opt(f[2]);
        d.d_pore = parse_opt(f[3]);
        d.l_tpb = std::stod(f[4]);
        d.l_tpb_active = std::stod(f[5]);
        d.tau_ni = parse_opt(f[6]);
        d.tau_ysz = parse_opt(f[7]);
        d.tau_pore = parse_opt(f[8]);
        d.vf_ni = std::stod(f[9]);
        d.vf_ysz = std::stod(f[10]);
        d.vf_pore = std::stod(f[11]);
        table.sample_ids.push_back(f[0]);
        table.rows.push_back(d);
    }
    if (!header_seen) throw std::runtime_error("descriptor csv empty: " + path);
    return table;
}

}  // namespace mstk
