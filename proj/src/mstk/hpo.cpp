#include "mstk/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "mstk/util.hpp"

namespace mstk {

using nlohmann::json;

void validate(const SearchSpace& space) {
    for (const Dimension& d : space.dims) {
        if (d.name.empty()) throw std::invalid_argument("dimension needs a name");
        switch (d.kind) {
            case DimKind::Categorical:
                if (d.options.empty())
                    throw std::invalid_argument("categorical dimension needs options: " + d.name);
                break;
            case DimKind::LogUniform:
                if (!(d.lo > 0.0))
                    throw std::invalid_argument("log-uniform needs lo > 0: " + d.name);
                [[fallthrough]];
            default:
                if (!(d.lo < d.hi))
                    throw std::invalid_argument("dimension needs lo < hi: " + d.name);
        }
    }
}

double as_double(const ParamValue& v) {
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<int64_t>(v)) return static_cast<double>(std::get<int64_t>(v));
    throw std::invalid_argument("categorical value has no numeric form");
}

Assignment sample_random(const SearchSpace& space, Rng& rng) {
    Assignment a;
    for (const Dimension& d : space.dims) {
        switch (d.kind) {
            case DimKind::Uniform: a[d.name] = rng.uniform(d.lo, d.hi); break;
            case DimKind::LogUniform: a[d.name] = rng.log_uniform(d.lo, d.hi); break;
            case DimKind::Integer:
                a[d.name] = rng.uniform_int_incl(static_cast<int64_t>(d.lo),
                                                 static_cast<int64_t>(d.hi));
                break;
            case DimKind::Categorical:
                a[d.name] = d.options[rng.uniform_int(d.options.size())];
                break;
        }
    }
    return a;
}

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// One-dimensional Parzen estimator over a bounded transformed domain.
struct ParzenDim {
    const Dimension* dim;
    double lo, hi;                   // transformed bounds
    double bw = 0.0;
    std::vector<double> centers;     // numeric kinds
    std::vector<double> cat_prob;    // categorical

    void fit(const std::vector<double>& values, const TpeOptions& opts) {
        if (dim->kind == DimKind::Categorical) {
            std::vector<double> counts(dim->options.size(), 1.0);  // add-one smoothing
            for (double v : values) counts[static_cast<std::size_t>(v)] += 1.0;
            double total = 0.0;
            for (double c : counts) total += c;
            cat_prob.resize(counts.size());
            for (std::size_t i = 0; i < counts.size(); ++i) cat_prob[i] = counts[i] / total;
            return;
        }
        centers = values;
        double span = hi - lo;
        bw = span / std::sqrt(static_cast<double>(std::max<std::size_t>(1, values.size())));
        bw = std::max(bw, opts.bandwidth_floor * span);
    }

    double pdf(double t) const {
        if (dim->kind == DimKind::Categorical)
            return cat_prob[static_cast<std::size_t>(t)];
        double acc = 0.0;
        for (double c : centers) {
            double z = norm_cdf((hi - c) / bw) - norm_cdf((lo - c) / bw);
            double u = (t - c) / bw;
            acc += std::exp(-0.5 * u * u) / (bw * std::sqrt(2.0 * M_PI) * z);
        }
        return acc / static_cast<double>(centers.size());
    }

    double sample(Rng& rng) const {
        if (dim->kind == DimKind::Categorical) {
            double u = rng.uniform();
            double cum = 0.0;
            for (std::size_t i = 0; i < cat_prob.size(); ++i) {
                cum += cat_prob[i];
                if (u < cum) return static_cast<double>(i);
            }
            return static_cast<double>(cat_prob.size() - 1);
        }
        double c = centers[rng.uniform_int(centers.size())];
        for (int tries = 0; tries < 100; ++tries) {
            double x = c + bw * rng.normal();
            if (x >= lo && x <= hi) return x;
        }
        return std::clamp(c, lo, hi);
    }
};

double to_t_space(const Dimension& d, const ParamValue& v) {
    switch (d.kind) {
        case DimKind::Uniform: return as_double(v);
        case DimKind::LogUniform: return std::log(as_double(v));
        case DimKind::Integer: return as_double(v);
        case DimKind::Categorical: {
            const std::string& s = std::get<std::string>(v);
            auto it = std::find(d.options.begin(), d.options.end(), s);
            if (it == d.options.end())
                throw std::invalid_argument("unknown categorical option: " + s);
            return static_cast<double>(it - d.options.begin());
        }
    }
    return 0.0;
}

ParamValue from_t_space(const Dimension& d, double t) {
    switch (d.kind) {
        case DimKind::Uniform: return t;
        case DimKind::LogUniform: return std::exp(t);
        case DimKind::Integer: {
            int64_t v = static_cast<int64_t>(std::llround(t));
            v = std::max<int64_t>(static_cast<int64_t>(d.lo),
                                  std::min<int64_t>(static_cast<int64_t>(d.hi), v));
            return v;
        }
        case DimKind::Categorical:
            return d.options[static_cast<std::size_t>(t)];
    }
    return t;
}

std::pair<double, double> t_bounds(const Dimension& d) {
    if (d.kind == DimKind::LogUniform) return {std::log(d.lo), std::log(d.hi)};
    return {d.lo, d.hi};
}

}  // namespace

Assignment tpe_suggest(const std::vector<TrialRecord>& history, const SearchSpace& space,
                       Rng& rng, const TpeOptions& opts) {
    validate(space);
    std::vector<const TrialRecord*> completed;
    for (const TrialRecord& t : history)
        if (t.ok && std::isfinite(t.objective)) completed.push_back(&t);
    if (static_cast<int>(completed.size()) < opts.n_startup) return sample_random(space, rng);

    std::sort(completed.begin(), completed.end(),
              [](const TrialRecord* a, const TrialRecord* b) {
                  if (a->objective != b->objective) return a->objective < b->objective;
                  return a->index < b->index;
              });
    std::size_t n_good = static_cast<std::size_t>(
        std::ceil(opts.gamma * static_cast<double>(completed.size())));
    n_good = std::max<std::size_t>(1, std::min(n_good, completed.size() - 1));

    std::vector<ParzenDim> good(space.dims.size()), bad(space.dims.size());
    for (std::size_t di = 0; di < space.dims.size(); ++di) {
        const Dimension& d = space.dims[di];
        auto [lo, hi] = t_bounds(d);
        good[di].dim = &d;
        good[di].lo = lo;
        good[di].hi = hi;
        bad[di] = good[di];
        std::vector<double> gv, bv;
        for (std::size_t i = 0; i < completed.size(); ++i) {
            double t = to_t_space(d, completed[i]->params.at(d.name));
            (i < n_good ? gv : bv).push_back(t);
        }
        good[di].fit(gv, opts);
        bad[di].fit(bv, opts);
    }

    double best_score = -std::numeric_limits<double>::infinity();
    Assignment best;
    for (int c = 0; c < opts.n_candidates; ++c) {
        Assignment cand;
        double score = 0.0;
        for (std::size_t di = 0; di < space.dims.size(); ++di) {
            const Dimension& d = space.dims[di];
            double t = good[di].sample(rng);
            if (d.kind == DimKind::Integer)
                t = to_t_space(d, from_t_space(d, t));  // score the rounded value
            score += std::log(std::max(good[di].pdf(t), 1e-300)) -
                     std::log(std::max(bad[di].pdf(t), 1e-300));
            cand[d.name] = from_t_space(d, t);
        }
        if (score > best_score) {
            best_score = score;
            best = std::move(cand);
        }
    }
    return best;
}

HpoResult run_hpo(const Objective& objective, const SearchSpace& space1,
                  const SearchSpace& space2, int n1, int n2, uint64_t seed,
                  const std::vector<TrialRecord>& resume,
                  const std::function<void(const TrialRecord&)>& on_trial) {
    validate(space1);
    validate(space2);
    HpoResult res;
    res.trials = resume;

    auto has_index = [&](int idx) {
        for (const TrialRecord& t : res.trials)
            if (t.index == idx) return true;
        return false;
    };
    auto evaluate = [&](int idx, const std::string& phase, Assignment a) {
        TrialRecord t;
        t.index = idx;
        t.phase = phase;
        t.params = std::move(a);
        try {
            t.objective = objective(t.params);
            t.ok = std::isfinite(t.objective);
            if (!t.ok) t.error = "non-finite objective";
        } catch (const std::exception& e) {
            t.ok = false;
            t.error = e.what();
        }
        res.trials.push_back(t);
        if (on_trial) on_trial(res.trials.back());
    };

    for (int i = 0; i < n1; ++i) {
        if (has_index(i)) continue;
        Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
        evaluate(i, "random", sample_random(space1, rng));
    }

    const TrialRecord* best1 = nullptr;
    for (const TrialRecord& t : res.trials)
        if (t.phase == "random" && t.ok && (!best1 || t.objective < best1->objective))
            best1 = &t;
    if (!best1) throw std::runtime_error("hpo: every phase-1 trial failed");
    Assignment frozen = best1->params;

    std::vector<TrialRecord> history2;
    for (const TrialRecord& t : res.trials)
        if (t.phase == "tpe") history2.push_back(t);

    for (int i = n1; i < n1 + n2; ++i) {
        if (has_index(i)) continue;
        Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
        Assignment suggested = tpe_suggest(history2, space2, rng);
        Assignment merged = frozen;
        for (auto& [k, v] : suggested) merged[k] = v;
        evaluate(i, "tpe", std::move(merged));
        history2.push_back(res.trials.back());
    }

    const TrialRecord* best = nullptr;
    for (const TrialRecord& t : res.trials)
        if (t.ok && (!best || t.objective < best->objective)) best = &t;
    if (!best) throw std::runtime_error("hpo: every trial failed");
    res.best = best->params;
    res.best_objective = best->objective;
    return res;
}

std::string trial_to_jsonl(const TrialRecord& t) {
    json j;
    j["index"] = t.index;
    j["phase"] = t.phase;
    json params = json::object();
    for (const auto& [k, v] : t.params) {
        if (std::holds_alternative<double>(v))
            params[k] = std::get<double>(v);
        else if (std::holds_alternative<int64_t>(v))
            params[k] = std::get<int64_t>(v);
        else
            params[k] = std::get<std::string>(v);
    }
    j["params"] = params;
    j["objective"] = t.objective;
    j["ok"] = t.ok;
    if (!t.error.empty()) j["error"] = t.error;
    return j.dump();
}

TrialRecord trial_from_jsonl(const std::string& line) {
    json j = json::parse(line);
    TrialRecord t;
    t.index = j.at("index").get<int>();
    t.phase = j.at("phase").get<std::string>();
    for (auto& [k, v] : j.at("params").items()) {
        if (v.is_number_integer())
            t.params[k] = v.get<int64_t>();
        else if (v.is_number_float())
            t.params[k] = v.get<double>();
        else
            t.params[k] = v.get<std::string>();
    }
    t.objective = j.at("objective").get<double>();
    t.ok = j.at("ok").get<bool>();
    t.error = j.value("error", "");
    return t;
}

std::vector<TrialRecord> read_trial_log(const std::string& path) {
    std::ifstream in(path);
    std::vector<TrialRecord> out;
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(trial_from_jsonl(line));
    }
    return out;
}

}  // namespace mstk
