#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mstk/grid.hpp"
#include "mstk/tortuosity.hpp"

namespace mstk {

/// The eight regression targets plus auxiliary volume fractions. Tortuosity
/// entries are empty when the phase does not percolate along the axis.
struct DescriptorVector {
    std::optional<double> d_ni, d_ysz, d_pore;           // um
    double l_tpb = 0.0, l_tpb_active = 0.0;              // um^-2
    std::optional<double> tau_ni, tau_ysz, tau_pore;     // dimensionless
    double vf_ni = 0.0, vf_ysz = 0.0, vf_pore = 0.0;

    std::optional<double> by_name(const std::string& name) const;
};

inline const std::array<const char*, 8> kAttributeNames = {
    "d_ni", "d_ysz", "d_pore", "l_tpb", "l_tpb_active", "tau_ni", "tau_ysz", "tau_pore"};

DescriptorVector characterize(const PhaseGrid& g, const TortuosityOptions& tort = {});

inline constexpr const char* kDescriptorCsvHeader =
    "sample_id,d_ni,d_ysz,d_pore,l_tpb,l_tpb_active,tau_ni,tau_ysz,tau_pore,vf_ni,vf_ysz,vf_pore";

std::string descriptor_csv_row(const std::string& sample_id, const DescriptorVector& d);

struct DescriptorTable {
    std::vector<std::string> sample_ids;
    std::vector<DescriptorVector> rows;
};

DescriptorTable read_descriptor_csv(const std::string& path);

}  // namespace mstk
