#include "mstk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mstk/rng.hpp"
#include "mstk/util.hpp"

namespace mstk {

namespace fs = std::filesystem;
using nlohmann::json;

std::string config_hash_of_json(const std::string& json_text) {
    json j = json::parse(json_text);
    return to_hex(fnv1a64(j.dump()));  // nlohmann objects serialize with sorted keys
}

std::vector<SampleSpec> plan_samples(int n, uint64_t master_seed) {
    std::vector<SampleSpec> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(master_seed, static_cast<uint64_t>(i)));
        SampleSpec s;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "s%04d", i);
        s.id = buf;
        double ni = rng.uniform(0.25, 0.40);
        double ysz = rng.uniform(0.25, 0.40);
        s.cfg.target_fractions[static_cast<std::size_t>(Phase::Ni)] = ni;
        s.cfg.target_fractions[static_cast<std::size_t>(Phase::Ysz)] = ysz;
        s.cfg.target_fractions[static_cast<std::size_t>(Phase::Pore)] = 1.0 - ni - ysz;
        s.cfg.mean_particle_radius = rng.uniform(2.5, 6.5);
        s.cfg.ca_iterations = static_cast<int>(rng.uniform_int_incl(1, 3));
        s.cfg.seed = rng.next_u64();
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

json generate_options_json(const GenerateOptions& o) {
    return json{{"command", "generate"}, {"n", o.n},       {"dims", o.dims},
                {"voxel_size", o.voxel_size}, {"seed", o.seed}};
}

}  // namespace

std::vector<std::string> run_generate(const GenerateOptions& opts) {
    fs::create_directories(opts.out_dir);
    auto specs = plan_samples(opts.n, opts.seed);
    std::string hash = config_hash_of_json(generate_options_json(opts).dump());

    std::vector<std::string> files(specs.size());
    parallel_for(specs.size(), opts.jobs, [&](std::size_t i) {
        const SampleSpec& s = specs[i];
        PhaseGrid g = generate_microstructure(s.cfg, opts.dims, opts.dims, opts.dims,
                                              opts.voxel_size);
        std::string file = s.id + ".mstr";
        write_grid(g, (fs::path(opts.out_dir) / file).string());
        files[i] = file;
    });

    json manifest;
    manifest["format"] = "mstk-manifest-v1";
    manifest["config_hash"] = hash;
    manifest["seed"] = opts.seed;
    manifest["dims"] = opts.dims;
    manifest["voxel_size"] = opts.voxel_size;
    json samples = json::array();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& cfg = specs[i].cfg;
        samples.push_back({{"id", specs[i].id},
                           {"file", files[i]},
                           {"seed", cfg.seed},
                           {"target_fractions", cfg.target_fractions},
                           {"mean_particle_radius", cfg.mean_particle_radius},
                           {"ca_iterations", cfg.ca_iterations}});
    }
    manifest["samples"] = samples;
    write_text_file((fs::path(opts.out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return files;
}

std::vector<ManifestEntry> read_manifest(const std::string& dir) {
    std::string path = (fs::path(dir) / "manifest.json").string();
    json j = json::parse(read_text_file(path));
    std::vector<ManifestEntry> out;
    for (const auto& s : j.at("samples")) {
        ManifestEntry e;
        e.id = s.at("id").get<std::string>();
        e.file = s.at("file").get<std::string>();
        e.seed = s.at("seed").get<uint64_t>();
        out.push_back(std::move(e));
    }
    return out;
}

int run_characterize(const CharacterizeOptions& opts) {
    auto entries = read_manifest(opts.in_dir);
    TortuosityOptions tort;
    tort.axis = opts.axis;

    std::vector<std::optional<DescriptorVector>> rows(entries.size());
    std::mutex log_mutex;
    parallel_for(entries.size(), opts.jobs, [&](std::size_t i) {
        try {
            PhaseGrid g = read_grid((fs::path(opts.in_dir) / entries[i].file).string());
            rows[i] = characterize(g, tort);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lk(log_mutex);
            std::cerr << "warning: skipping " << entries[i].file << ": " << e.what() << "\n";
        }
    });

    std::ostringstream csv;
    csv << kDescriptorCsvHeader << "\n";
    int skipped = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!rows[i]) {
            ++skipped;
            continue;
        }
        csv << descriptor_csv_row(entries[i].id, *rows[i]) << "\n";
    }
    write_text_file(opts.out_csv, csv.str());

    json meta = {{"command", "characterize"}, {"axis", opts.axis}, {"skipped", skipped}};
    meta["config_hash"] = config_hash_of_json(meta.dump());
    write_text_file(opts.out_csv + ".meta.json", meta.dump(2) + "\n");
    return skipped;
}

namespace {

json pi_to_json(const PiConfig& pi) {
    return json{{"C", pi.C}, {"gamma", pi.gamma}, {"sigma", pi.sigma},
                {"resolution", pi.resolution}};
}

PiConfig pi_from_json(const json& j) {
    PiConfig pi;
    pi.C = j.at("C").get<double>();
    pi.gamma = j.at("gamma").get<int>();
    pi.sigma = j.at("sigma").get<double>();
    pi.resolution = j.at("resolution").get<int>();
    return pi;
}

json ranges_to_json(const ChannelRanges& r) {
    json arr = json::array();
    for (int ch = 0; ch < kNumChannels; ++ch)
        arr.push_back({{"channel", channel_name(ch)},
                       {"birth", {r.birth[static_cast<std::size_t>(ch)].lo,
                                  r.birth[static_cast<std::size_t>(ch)].hi}},
                       {"pers", {r.pers[static_cast<std::size_t>(ch)].lo,
                                 r.pers[static_cast<std::size_t>(ch)].hi}}});
    return arr;
}

ChannelRanges ranges_from_json(const json& arr) {
    ChannelRanges r;
    for (int ch = 0; ch < kNumChannels; ++ch) {
        const json& e = arr.at(ch);
        r.birth[static_cast<std::size_t>(ch)] = {e.at("birth").at(0).get<double>(),
                                                 e.at("birth").at(1).get<double>()};
        r.pers[static_cast<std::size_t>(ch)] = {e.at("pers").at(0).get<double>(),
                                                e.at("pers").at(1).get<double>()};
    }
    return r;
}

}  // namespace

void write_feature_file(const std::string& path, const std::string& sample_id,
                        const FeatureSet& fs_, const PiConfig& pi, const ChannelRanges& ranges,
                        const std::string& config_hash) {
    json j;
    j["format"] = "mstk-features-v1";
    j["sample_id"] = sample_id;
    j["config_hash"] = config_hash;
    j["pi"] = pi_to_json(pi);
    json channels = json::array();
    for (int ch = 0; ch < kNumChannels; ++ch) {
        const PersistenceImage& img = fs_.channels[static_cast<std::size_t>(ch)];
        channels.push_back({{"channel", channel_name(ch)},
                            {"birth", {ranges.birth[static_cast<std::size_t>(ch)].lo,
                                       ranges.birth[static_cast<std::size_t>(ch)].hi}},
                            {"pers", {ranges.pers[static_cast<std::size_t>(ch)].lo,
                                      ranges.pers[static_cast<std::size_t>(ch)].hi}},
                            {"values", img.values}});
    }
    j["channels"] = channels;
    write_text_file(path, j.dump() + "\n");
}

FeatureFile read_feature_file(const std::string& path) {
    json j = json::parse(read_text_file(path));
    FeatureFile f;
    f.sample_id = j.at("sample_id").get<std::string>();
    int res = j.at("pi").at("resolution").get<int>();
    for (int ch = 0; ch < kNumChannels; ++ch) {
        PersistenceImage& img = f.features.channels[static_cast<std::size_t>(ch)];
        img.resolution = res;
        img.values = j.at("channels").at(ch).at("values").get<std::vector<double>>();
        if (img.values.size() != static_cast<std::size_t>(res) * res)
            throw std::runtime_error("feature file has wrong channel size: " + path);
    }
    return f;
}

void write_diagram_csv(const std::string& path, const std::vector<std::string>& sample_ids,
                       const std::vector<GridDiagrams>& diagrams) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "sample_id,phase,k,birth,death\n";
    for (std::size_t i = 0; i < sample_ids.size(); ++i)
        for (int p = 0; p < 3; ++p)
            for (int k = 0; k < 3; ++k)
                for (const auto& pr :
                     diagrams[i][static_cast<std::size_t>(p)][static_cast<std::size_t>(k)].pairs)
                    csv << sample_ids[i] << ',' << phase_name(static_cast<Phase>(p)) << ',' << k
                        << ',' << pr.birth << ',' << pr.death << "\n";
    write_text_file(path, csv.str());
}

std::vector<std::pair<std::string, GridDiagrams>> read_diagram_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open diagram csv: " + path);
    std::vector<std::pair<std::string, GridDiagrams>> out;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 5) throw std::runtime_error("bad diagram csv row: " + path);
        auto [it, inserted] = index.try_emplace(f[0], out.size());
        if (inserted) {
            out.emplace_back(f[0], GridDiagrams{});
            for (int p = 0; p < 3; ++p)
                for (int k = 0; k < 3; ++k)
                    out.back().second[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)].k =
                        k;
        }
        GridDiagrams& gd = out[it->second].second;
        int p = static_cast<int>(phase_from_name(f[1]));
        int k = std::stoi(f[2]);
        gd[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)].pairs.push_back(
            {std::stod(f[3]), std::stod(f[4])});
    }
    return out;
}

void run_featurize(const FeaturizeOptions& opts) {
    validate(opts.pi);
    auto entries = read_manifest(opts.in_dir);
    fs::create_directories(opts.out_dir);

    std::vector<GridDiagrams> diagrams(entries.size());
    parallel_for(entries.size(), opts.jobs, [&](std::size_t i) {
        PhaseGrid g = read_grid((fs::path(opts.in_dir) / entries[i].file).string());
        diagrams[i] = grid_diagrams(g);
    });

    SplitIndex sp = split(entries.size(), opts.split_seed);
    std::vector<const GridDiagrams*> train_diagrams;
    for (std::size_t i : sp.train) train_diagrams.push_back(&diagrams[i]);
    ChannelRanges ranges = fit_channel_ranges(train_diagrams, opts.pi.sigma);

    json options_json = {{"command", "featurize"}, {"pi", pi_to_json(opts.pi)},
                         {"split_seed", opts.split_seed}};
    std::string hash = config_hash_of_json(options_json.dump());

    std::vector<std::string> ids(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) ids[i] = entries[i].id;

    parallel_for(entries.size(), opts.jobs, [&](std::size_t i) {
        FeatureSet fs_ = render_features(diagrams[i], opts.pi, ranges);
        write_feature_file((fs::path(opts.out_dir) / (ids[i] + ".features.json")).string(),
                           ids[i], fs_, opts.pi, ranges, hash);
    });

    write_diagram_csv((fs::path(opts.out_dir) / "diagrams.csv").string(), ids, diagrams);

    json manifest;
    manifest["format"] = "mstk-features-manifest-v1";
    manifest["config_hash"] = hash;
    manifest["pi"] = pi_to_json(opts.pi);
    manifest["split_seed"] = opts.split_seed;
    manifest["channel_ranges"] = ranges_to_json(ranges);
    json samples = json::array();
    for (const std::string& id : ids)
        samples.push_back({{"id", id}, {"file", id + ".features.json"}});
    manifest["samples"] = samples;
    write_text_file((fs::path(opts.out_dir) / "features_manifest.json").string(),
                    manifest.dump(2) + "\n");
}

FeatureStore load_features(const std::string& dir) {
    json manifest = json::parse(read_text_file((fs::path(dir) / "features_manifest.json").string()));
    FeatureStore store;
    store.pi = pi_from_json(manifest.at("pi"));
    store.ranges = ranges_from_json(manifest.at("channel_ranges"));
    store.split_seed = manifest.at("split_seed").get<uint64_t>();
    for (const auto& s : manifest.at("samples")) {
        FeatureFile f = read_feature_file((fs::path(dir) / s.at("file").get<std::string>()).string());
        store.sample_ids.push_back(f.sample_id);
        store.features.push_back(std::move(f.features));
    }
    return store;
}

AttributeData prepare_attribute_data(const FeatureStore& store, const DescriptorTable& desc,
                                     const std::string& target, uint64_t split_seed) {
    std::map<std::string, std::size_t> desc_index;
    for (std::size_t i = 0; i < desc.sample_ids.size(); ++i)
        desc_index[desc.sample_ids[i]] = i;

    const std::size_t n = store.sample_ids.size();
    std::vector<std::optional<double>> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = desc_index.find(store.sample_ids[i]);
        if (it == desc_index.end()) continue;
        auto v = desc.rows[it->second].by_name(target);
        if (v && std::isfinite(*v)) raw[i] = v;
    }

    SplitIndex sp = split(n, split_seed);
    auto filter = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::size_t> out;
        for (std::size_t i : idx)
            if (raw[i]) out.push_back(i);
        return out;
    };

    AttributeData data;
    data.train = filter(sp.train);
    data.val = filter(sp.val);
    data.test = filter(sp.test);
    if (data.train.size() < 3)
        throw std::runtime_error("attribute " + target + " has fewer than 3 usable train samples");

    std::vector<double> train_raw;
    for (std::size_t i : data.train) train_raw.push_back(*raw[i]);
    data.transform = fit_transform(train_raw);

    data.dataset.features.resize(n);
    data.dataset.targets.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < n; ++i) {
        data.dataset.features[i] = &store.features[i];
        if (raw[i]) data.dataset.targets[i] = apply_transform(*raw[i], data.transform);
    }
    return data;
}

TrainRunResult run_training(const FeatureStore& store, const DescriptorTable& desc,
                            const TrainRunOptions& opts, uint64_t split_seed,
                            const std::string& config_hash) {
    AttributeData data = prepare_attribute_data(store, desc, opts.target, split_seed);

    NindenConfig model = opts.model;
    model.channel_size = store.pi.resolution * store.pi.resolution;
    if (opts.drop_phase)
        model.phase_active[static_cast<std::size_t>(*opts.drop_phase)] = false;

    TrainRunResult out;
    for (int r = 0; r < opts.runs; ++r) {
        TrainConfig tc = opts.train;
        tc.seed = derive_seed(opts.base_seed, static_cast<uint64_t>(r));
        TrainResult res = train(model, tc, data.dataset, data.train, data.val);

        std::vector<double> pred = predict_all(res.params, data.dataset, data.test);
        std::vector<double> truth;
        for (std::size_t i : data.test) truth.push_back(data.dataset.targets[i]);
        RunMetrics rm;
        rm.run = r;
        rm.row = metrics(pred, truth);
        out.test_metrics.push_back(rm);

        Checkpoint ck;
        ck.params = std::move(res.params);
        ck.transform = data.transform;
        ck.pi_config = store.pi;
        ck.ranges = store.ranges;
        ck.target = opts.target;
        ck.seed = tc.seed;
        ck.best_epoch = res.history.best_epoch;
        ck.config_hash = config_hash;
        out.checkpoints.push_back(std::move(ck));
        out.histories.push_back(std::move(res.history));
    }
    return out;
}

std::vector<std::pair<std::string, std::vector<double>>> metric_samples(
    const std::vector<RunMetrics>& runs) {
    std::vector<std::pair<std::string, std::vector<double>>> out = {
        {"mse", {}}, {"mae", {}}, {"r2", {}}, {"pearson", {}}, {"spearman", {}}};
    for (const RunMetrics& r : runs) {
        out[0].second.push_back(r.row.mse);
        out[1].second.push_back(r.row.mae);
        if (r.row.r2) out[2].second.push_back(*r.row.r2);
        if (r.row.pearson) out[3].second.push_back(*r.row.pearson);
        if (r.row.spearman) out[4].second.push_back(*r.row.spearman);
    }
    return out;
}

SearchSpace hpo_phase1_space() {
    SearchSpace s;
    s.dims.push_back({"C", DimKind::Uniform, 0.5, 40.0, {}});
    s.dims.push_back({"sigma", DimKind::LogUniform, 1e-3, 5e-2, {}});
    s.dims.push_back({"p", DimKind::Integer, 1, 6, {}});
    s.dims.push_back({"encoding_log2", DimKind::Integer, 4, 7, {}});
    s.dims.push_back({"lr", DimKind::Uniform, 1e-3, 1e-2, {}});
    s.dims.push_back({"main_log2", DimKind::Integer, 5, 10, {}});
    s.dims.push_back({"main_dropout", DimKind::Uniform, 0.1, 0.4, {}});
    s.dims.push_back({"pi_log2", DimKind::Integer, 7, 9, {}});
    s.dims.push_back({"pi_dropout", DimKind::Uniform, 0.1, 0.4, {}});
    s.dims.push_back({"phase_log2", DimKind::Integer, 7, 10, {}});
    s.dims.push_back({"weight_decay", DimKind::Uniform, 1e-2, 1.0, {}});
    return s;
}

SearchSpace hpo_phase2_space() {
    SearchSpace s;
    s.dims.push_back({"activation", DimKind::Categorical, 0, 0, {"selu", "gelu", "mish"}});
    s.dims.push_back({"encoding_log2", DimKind::Integer, 3, 6, {}});
    s.dims.push_back({"lr", DimKind::Uniform, 1e-3, 1e-2, {}});
    s.dims.push_back({"main_dropout", DimKind::Uniform, 0.2, 0.4, {}});
    s.dims.push_back({"pi_dropout", DimKind::Uniform, 0.2, 0.4, {}});
    s.dims.push_back({"t_mult", DimKind::Integer, 1, 5, {}});
    s.dims.push_back({"weight_decay", DimKind::Uniform, 0.1, 1.0, {}});
    return s;
}

namespace {

int exp2_width(const Assignment& a, const std::string& key, int fallback) {
    auto it = a.find(key);
    if (it == a.end()) return fallback;
    return 1 << std::get<int64_t>(it->second);
}

}  // namespace

void apply_assignment(const Assignment& a, PiConfig& pi, NindenConfig& model,
                      TrainConfig& train) {
    if (a.count("C")) pi.C = as_double(a.at("C"));
    if (a.count("sigma")) pi.sigma = as_double(a.at("sigma"));
    if (a.count("p")) pi.gamma = static_cast<int>(std::get<int64_t>(a.at("p")));

    if (a.count("activation"))
        model.activation = activation_from_name(std::get<std::string>(a.at("activation")));
    model.encoding_length = exp2_width(a, "encoding_log2", model.encoding_length);
    int pi_w = exp2_width(a, "pi_log2", 0);
    if (pi_w) model.pi_branch_widths = {pi_w, std::max(1, pi_w / 2)};
    int phase_w = exp2_width(a, "phase_log2", 0);
    if (phase_w) model.phase_branch_widths = {phase_w, std::max(1, phase_w / 2)};
    int main_w = exp2_width(a, "main_log2", 0);
    if (main_w)
        model.head_widths = {main_w, std::max(1, main_w / 2), std::max(1, main_w / 4)};
    if (a.count("pi_dropout")) model.dropout_pi = as_double(a.at("pi_dropout"));
    if (a.count("main_dropout")) model.dropout_main = as_double(a.at("main_dropout"));

    if (a.count("lr")) train.lr0 = as_double(a.at("lr"));
    if (a.count("weight_decay")) train.weight_decay = as_double(a.at("weight_decay"));
    if (a.count("t_mult")) train.t_mult = static_cast<int>(std::get<int64_t>(a.at("t_mult")));
}

Objective make_hpo_objective(const std::vector<std::pair<std::string, GridDiagrams>>& diagrams,
                             const DescriptorTable& desc, const HpoObjectiveOptions& opts) {
    return [&diagrams, &desc, opts](const Assignment& a) -> double {
        PiConfig pi;
        pi.resolution = 32;
        NindenConfig model;
        TrainConfig train_cfg;
        train_cfg.max_epochs = opts.max_epochs;
        train_cfg.batch_size = opts.batch_size;
        train_cfg.patience = opts.patience;
        train_cfg.t0 = opts.t0;
        train_cfg.seed = opts.train_seed;
        apply_assignment(a, pi, model, train_cfg);
        validate(pi);

        FeatureStore store;
        store.pi = pi;
        store.split_seed = opts.split_seed;
        SplitIndex sp = split(diagrams.size(), opts.split_seed);
        std::vector<const GridDiagrams*> train_dg;
        for (std::size_t i : sp.train) train_dg.push_back(&diagrams[i].second);
        store.ranges = fit_channel_ranges(train_dg, pi.sigma);
        store.sample_ids.resize(diagrams.size());
        store.features.resize(diagrams.size());
        parallel_for(diagrams.size(), opts.jobs, [&](std::size_t i) {
            store.sample_ids[i] = diagrams[i].first;
            store.features[i] = render_features(diagrams[i].second, pi, store.ranges);
        });

        AttributeData data = prepare_attribute_data(store, desc, opts.target, opts.split_seed);
        model.channel_size = pi.resolution * pi.resolution;
        TrainResult res = train(model, train_cfg, data.dataset, data.train, data.val);
        return res.history.best_val;
    };
}

}  // namespace mstk
