#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mstk/rng.hpp"

namespace mstk {

enum class DimKind { Uniform, LogUniform, Integer, Categorical };

struct Dimension {
    std::string name;
    DimKind kind = DimKind::Uniform;
    double lo = 0.0, hi = 1.0;          // numeric kinds
    std::vector<std::string> options;   // categorical
};

struct SearchSpace {
    std::vector<Dimension> dims;
};

void validate(const SearchSpace& space);

using ParamValue = std::variant<double, int64_t, std::string>;
using Assignment = std::map<std::string, ParamValue>;

double as_double(const ParamValue& v);

struct TrialRecord {
    int index = -1;
    std::string phase;  // "random" or "tpe"
    Assignment params;
    double objective = 0.0;
    bool ok = false;
    std::string error;
};

Assignment sample_random(const SearchSpace& space, Rng& rng);

struct TpeOptions {
    int n_startup = 10;
    double gamma = 0.25;       // good/bad split quantile
    int n_candidates = 24;
    double bandwidth_floor = 0.01;  // fraction of the dimension span
};

// Below n_startup completed trials this falls back to random sampling;
// otherwise candidates drawn from the good-set Parzen estimator are ranked
// by the density ratio l(x)/g(x). Failed trials never enter the densities.
Assignment tpe_suggest(const std::vector<TrialRecord>& history, const SearchSpace& space,
                       Rng& rng, const TpeOptions& opts = {});

using Objective = std::function<double(const Assignment&)>;

struct HpoResult {
    Assignment best;
    double best_objective = 0.0;
    std::vector<TrialRecord> trials;
};

// Two-phase search: `n1` random trials over space1 pick the phase-1 winner
// (PI parameters frozen from it), then `n2` TPE trials over space2 merged on
// top of that winner. Trials already present in `resume` are not rerun;
// on_trial fires after each fresh evaluation (for incremental logging).
HpoResult run_hpo(const Objective& objective, const SearchSpace& space1,
                  const SearchSpace& space2, int n1, int n2, uint64_t seed,
                  const std::vector<TrialRecord>& resume = {},
                  const std::function<void(const TrialRecord&)>& on_trial = {});

// JSON-lines trial log.
std::string trial_to_jsonl(const TrialRecord& t);
TrialRecord trial_from_jsonl(const std::string& line);
std::vector<TrialRecord> read_trial_log(const std::string& path);

}  // namespace mstk
