// mstk: batch pipeline for three-phase voxel microstructures. Generates
// synthetic volumes, computes ground-truth descriptors, encodes structures as
// persistence images and trains per-attribute NINDEN regressors.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mstk/pipeline.hpp"
#include "mstk/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mstk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string metrics_csv(const std::string& target, const std::vector<RunMetrics>& runs) {
    std::ostringstream out;
    out.precision(10);
    out << "target,run,mse,mae,r2,pearson,spearman\n";
    auto field = [&](const std::optional<double>& v) -> std::string {
        if (!v) return "";
        std::ostringstream ss;
        ss.precision(10);
        ss << *v;
        return ss.str();
    };
    for (const RunMetrics& r : runs)
        out << target << ',' << r.run << ',' << r.row.mse << ',' << r.row.mae << ','
            << field(r.row.r2) << ',' << field(r.row.pearson) << ','
            << field(r.row.spearman) << "\n";

    auto agg = metric_samples(runs);
    for (bool want_std : {false, true}) {
        out << target << ',' << (want_std ? "std" : "mean");
        for (auto& [name, values] : agg) {
            (void)name;
            out << ',';
            if (values.empty()) continue;
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            if (!want_std) {
                out << mean;
            } else {
                double var = 0.0;
                for (double v : values) var += (v - mean) * (v - mean);
                out << std::sqrt(values.size() > 1 ? var / double(values.size() - 1) : 0.0);
            }
        }
        out << "\n";
    }
    return out.str();
}

void write_run_artifacts(const std::string& out_dir, const TrainRunResult& result,
                         const std::string& target, const std::string& hash) {
    fs::create_directories(out_dir);
    for (std::size_t r = 0; r < result.checkpoints.size(); ++r) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "run_%03zu", r);
        fs::path dir = fs::path(out_dir) / buf;
        fs::create_directories(dir);
        save_checkpoint(result.checkpoints[r], (dir / "checkpoint.json").string());

        const TrainHistory& h = result.histories[r];
        json hist;
        hist["config_hash"] = hash;
        hist["best_epoch"] = h.best_epoch;
        hist["best_val"] = h.best_val;
        hist["stopped_epoch"] = h.stopped_epoch;
        hist["train_loss"] = h.train_loss;
        hist["val_loss"] = h.val_loss;
        hist["lr"] = h.lr;
        write_text_file((dir / "history.json").string(), hist.dump(2) + "\n");
    }
    write_text_file((fs::path(out_dir) / "metrics.csv").string(),
                    metrics_csv(target, result.test_metrics));

    json summary;
    summary["config_hash"] = hash;
    summary["target"] = target;
    summary["runs"] = result.checkpoints.size();
    json rows = json::array();
    for (const RunMetrics& r : result.test_metrics) {
        json row;
        row["run"] = r.run;
        row["mse"] = r.row.mse;
        row["mae"] = r.row.mae;
        if (r.row.r2) row["r2"] = *r.row.r2;
        if (r.row.pearson) row["pearson"] = *r.row.pearson;
        if (r.row.spearman) row["spearman"] = *r.row.spearman;
        rows.push_back(row);
    }
    summary["test_metrics"] = rows;
    write_text_file((fs::path(out_dir) / "train_summary.json").string(),
                    summary.dump(2) + "\n");
}

std::vector<RunMetrics> evaluate_run_dir(const std::string& dir, const FeatureStore& store,
                                         const DescriptorTable& desc, const std::string& target,
                                         uint64_t split_seed) {
    std::vector<RunMetrics> out;
    AttributeData data = prepare_attribute_data(store, desc, target, split_seed);
    for (int r = 0;; ++r) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "run_%03d", r);
        fs::path ck_path = fs::path(dir) / buf / "checkpoint.json";
        if (!fs::exists(ck_path)) break;
        Checkpoint ck = load_checkpoint(ck_path.string());
        std::vector<double> pred = predict_all(ck.params, data.dataset, data.test);
        std::vector<double> truth;
        for (std::size_t i : data.test) truth.push_back(data.dataset.targets[i]);
        RunMetrics rm;
        rm.run = r;
        rm.row = metrics(pred, truth);
        out.push_back(rm);
    }
    if (out.empty()) throw std::runtime_error("no run_*/checkpoint.json under " + dir);
    return out;
}

NindenConfig model_from_json(const json& j) {
    NindenConfig m;
    if (j.contains("activation"))
        m.activation = activation_from_name(j.at("activation").get<std::string>());
    if (j.contains("pi_branch_widths"))
        m.pi_branch_widths = j.at("pi_branch_widths").get<std::vector<int>>();
    if (j.contains("phase_branch_widths"))
        m.phase_branch_widths = j.at("phase_branch_widths").get<std::vector<int>>();
    if (j.contains("head_widths")) {
        auto hw = j.at("head_widths").get<std::vector<int>>();
        for (std::size_t i = 0; i < 3 && i < hw.size(); ++i)
            m.head_widths[i] = hw[i];
    }
    if (j.contains("encoding_length")) m.encoding_length = j.at("encoding_length").get<int>();
    if (j.contains("dropout_pi")) m.dropout_pi = j.at("dropout_pi").get<double>();
    if (j.contains("dropout_main")) m.dropout_main = j.at("dropout_main").get<double>();
    return m;
}

TrainConfig train_from_json(const json& j) {
    TrainConfig t;
    if (j.contains("lr0")) t.lr0 = j.at("lr0").get<double>();
    if (j.contains("weight_decay")) t.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("patience")) t.patience = j.at("patience").get<int>();
    if (j.contains("t0")) t.t0 = j.at("t0").get<int>();
    if (j.contains("t_mult")) t.t_mult = j.at("t_mult").get<int>();
    if (j.contains("batch_size")) t.batch_size = j.at("batch_size").get<int>();
    if (j.contains("max_epochs")) t.max_epochs = j.at("max_epochs").get<int>();
    return t;
}

int axis_from_name(const std::string& s) {
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
    throw std::invalid_argument("--axis must be x, y or z");
}

struct Cli {
    CLI::App app{"microstructure topology toolkit"};
    int exit_code = kExitOk;

    // generate
    GenerateOptions gopt;
    std::string gen_config;
    // characterize
    CharacterizeOptions copt;
    std::string chr_axis = "z";
    // featurize
    FeaturizeOptions fopt;
    // train / ablate shared
    std::string t_features, t_desc, t_target, t_out, t_config, t_drop;
    int t_runs = 1;
    uint64_t t_seed = 0, t_split_seed = 0;
    CLI::Option* t_split_opt = nullptr;
    // evaluate
    std::string e_features, e_desc, e_runs_dir, e_out, e_target;
    uint64_t e_split_seed = 0;
    CLI::Option* e_split_opt = nullptr;
    // hpo
    std::string h_features, h_desc, h_log, h_target = "l_tpb_active";
    int h_n1 = 50, h_n2 = 50, h_epochs = 40, h_jobs = 1;
    uint64_t h_seed = 0;
    // ablate
    std::string a_features, a_desc, a_target, a_drop, a_full, a_out, a_config;
    int a_runs = 10;
    uint64_t a_seed = 0, a_split_seed = 0;
    CLI::Option* a_split_opt = nullptr;

    Cli() {
        app.require_subcommand(1);

        auto* gen = app.add_subcommand("generate", "Generate synthetic three-phase grids");
        gen->add_option("--n", gopt.n, "number of structures");
        gen->add_option("--dims", gopt.dims, "cubic edge length in voxels");
        gen->add_option("--voxel-size", gopt.voxel_size, "pitch in micrometers");
        gen->add_option("--seed", gopt.seed, "master seed");
        gen->add_option("--jobs", gopt.jobs, "parallel workers");
        gen->add_option("--config", gen_config, "JSON config file (flags override)");
        gen->add_option("--out", gopt.out_dir, "output directory")->required();
        gen->callback([this, gen] { run_generate_cmd(gen); });

        auto* chr = app.add_subcommand("characterize", "Compute ground-truth descriptors");
        chr->add_option("--in", copt.in_dir, "grid directory (with manifest.json)")->required();
        chr->add_option("--out", copt.out_csv, "descriptor CSV path")->required();
        chr->add_option("--axis", chr_axis, "transport axis: x, y or z");
        chr->add_option("--jobs", copt.jobs, "parallel workers");
        chr->callback([this] {
            copt.axis = axis_from_name(chr_axis);
            int skipped = run_characterize(copt);
            std::cout << "descriptors written to " << copt.out_csv;
            if (skipped) std::cout << " (" << skipped << " samples skipped)";
            std::cout << "\n";
            if (skipped) exit_code = kExitData;
        });

        auto* fea = app.add_subcommand("featurize", "Encode grids as persistence images");
        fea->add_option("--in", fopt.in_dir, "grid directory")->required();
        fea->add_option("--out", fopt.out_dir, "feature directory")->required();
        fea->add_option("--C", fopt.pi.C, "weight scale C");
        fea->add_option("--gamma", fopt.pi.gamma, "weight exponent (positive integer)");
        fea->add_option("--sigma", fopt.pi.sigma, "kernel std");
        fea->add_option("--res", fopt.pi.resolution, "image resolution");
        fea->add_option("--split-seed", fopt.split_seed, "split seed for range fitting");
        fea->add_option("--jobs", fopt.jobs, "parallel workers");
        fea->callback([this] {
            run_featurize(fopt);
            std::cout << "features written to " << fopt.out_dir << "\n";
        });

        auto* trn = app.add_subcommand("train", "Train NINDEN for one attribute");
        trn->add_option("--features", t_features, "feature directory")->required();
        trn->add_option("--descriptors", t_desc, "descriptor CSV")->required();
        trn->add_option("--target", t_target, "attribute name")->required();
        trn->add_option("--out", t_out, "output directory")->required();
        trn->add_option("--runs", t_runs, "independent runs");
        trn->add_option("--seed", t_seed, "base seed");
        t_split_opt = trn->add_option("--split-seed", t_split_seed,
                                      "dataset split seed (default: from features)");
        trn->add_option("--config", t_config, "JSON model/training config");
        trn->add_option("--drop-phase", t_drop, "ablation: drop this phase (pore, ni or ysz)");
        trn->callback([this] { run_train_cmd(); });

        auto* evl = app.add_subcommand("evaluate",
                                       "Evaluate trained checkpoints on the test split");
        evl->add_option("--features", e_features, "feature directory")->required();
        evl->add_option("--descriptors", e_desc, "descriptor CSV")->required();
        evl->add_option("--runs-dir", e_runs_dir, "directory with run_*/checkpoint.json")
            ->required();
        evl->add_option("--target", e_target, "attribute (default: from checkpoints)");
        evl->add_option("--out", e_out, "report CSV path")->required();
        e_split_opt = evl->add_option("--split-seed", e_split_seed, "dataset split seed");
        evl->callback([this] { run_evaluate_cmd(); });

        auto* hp = app.add_subcommand("hpo", "Two-phase hyperparameter optimization");
        hp->add_option("--features", h_features, "feature directory (diagrams.csv is used)")
            ->required();
        hp->add_option("--descriptors", h_desc, "descriptor CSV")->required();
        hp->add_option("--log", h_log, "trial log (JSON lines); resumes if present")
            ->required();
        hp->add_option("--target", h_target, "pretext attribute");
        hp->add_option("--trials1", h_n1, "phase-1 random trials");
        hp->add_option("--trials2", h_n2, "phase-2 TPE trials");
        hp->add_option("--max-epochs", h_epochs, "epoch cap per trial");
        hp->add_option("--seed", h_seed, "hpo seed");
        hp->add_option("--jobs", h_jobs, "render workers");
        hp->callback([this] { run_hpo_cmd(); });

        auto* abl = app.add_subcommand("ablate", "Retrain without one phase and compare");
        abl->add_option("--features", a_features, "feature directory")->required();
        abl->add_option("--descriptors", a_desc, "descriptor CSV")->required();
        abl->add_option("--target", a_target, "attribute name")->required();
        abl->add_option("--drop-phase", a_drop, "phase to remove (pore, ni or ysz)")
            ->required();
        abl->add_option("--full-dir", a_full, "trained full-model run directory")->required();
        abl->add_option("--out", a_out, "report path prefix")->required();
        abl->add_option("--runs", a_runs, "variant runs");
        abl->add_option("--seed", a_seed, "base seed");
        abl->add_option("--config", a_config, "JSON model/training config");
        a_split_opt = abl->add_option("--split-seed", a_split_seed, "dataset split seed");
        abl->callback([this] { run_ablate_cmd(); });
    }

    void run_generate_cmd(CLI::App* gen) {
        if (!gen_config.empty()) {
            json cfg = json::parse(read_text_file(gen_config));
            auto fill = [&](const char* flag, const char* key, auto& value) {
                using T = std::decay_t<decltype(value)>;
                if (gen->get_option(flag)->count() == 0 && cfg.contains(key))
                    value = cfg.at(key).get<T>();
            };
            fill("--n", "n", gopt.n);
            fill("--dims", "dims", gopt.dims);
            fill("--voxel-size", "voxel_size", gopt.voxel_size);
            fill("--seed", "seed", gopt.seed);
            fill("--jobs", "jobs", gopt.jobs);
        }
        if (gopt.n < 1 || gopt.dims < 2)
            throw std::invalid_argument("need --n >= 1 and --dims >= 2");
        run_generate(gopt);
        std::cout << "wrote " << gopt.n << " grids to " << gopt.out_dir << "\n";
    }

    void run_train_cmd() {
        FeatureStore store = load_features(t_features);
        DescriptorTable desc = read_descriptor_csv(t_desc);
        TrainRunOptions opts;
        opts.target = t_target;
        opts.runs = t_runs;
        opts.base_seed = t_seed;
        if (!t_config.empty()) {
            json cfg = json::parse(read_text_file(t_config));
            if (cfg.contains("model")) opts.model = model_from_json(cfg.at("model"));
            if (cfg.contains("train")) opts.train = train_from_json(cfg.at("train"));
        }
        if (!t_drop.empty()) opts.drop_phase = phase_from_name(t_drop);
        uint64_t split_seed = t_split_opt->count() ? t_split_seed : store.split_seed;
        json hash_doc = {{"command", "train"},       {"target", t_target},
                         {"runs", t_runs},           {"seed", t_seed},
                         {"split_seed", split_seed}, {"drop_phase", t_drop}};
        std::string hash = config_hash_of_json(hash_doc.dump());
        TrainRunResult result = run_training(store, desc, opts, split_seed, hash);
        write_run_artifacts(t_out, result, t_target, hash);
        std::cout << "trained " << t_runs << " run(s) for " << t_target << " -> " << t_out
                  << "\n";
    }

    void run_evaluate_cmd() {
        FeatureStore store = load_features(e_features);
        DescriptorTable desc = read_descriptor_csv(e_desc);
        uint64_t split_seed = e_split_opt->count() ? e_split_seed : store.split_seed;
        std::string target = e_target;
        if (target.empty()) {
            Checkpoint ck = load_checkpoint(
                (fs::path(e_runs_dir) / "run_000" / "checkpoint.json").string());
            target = ck.target;
        }
        auto runs = evaluate_run_dir(e_runs_dir, store, desc, target, split_seed);
        write_text_file(e_out, metrics_csv(target, runs));
        json meta = {{"command", "evaluate"}, {"target", target}, {"runs", runs.size()}};
        meta["config_hash"] = config_hash_of_json(meta.dump());
        write_text_file(e_out + ".meta.json", meta.dump(2) + "\n");
        std::cout << "report written to " << e_out << "\n";
    }

    void run_hpo_cmd() {
        auto diagrams = read_diagram_csv((fs::path(h_features) / "diagrams.csv").string());
        DescriptorTable desc = read_descriptor_csv(h_desc);
        FeatureStore probe = load_features(h_features);
        HpoObjectiveOptions oopts;
        oopts.target = h_target;
        oopts.split_seed = probe.split_seed;
        oopts.train_seed = h_seed;
        oopts.max_epochs = h_epochs;
        oopts.jobs = h_jobs;
        Objective obj = make_hpo_objective(diagrams, desc, oopts);

        std::vector<TrialRecord> resume = read_trial_log(h_log);
        std::ofstream log(h_log, std::ios::app);
        auto on_trial = [&log](const TrialRecord& t) {
            log << trial_to_jsonl(t) << "\n";
            log.flush();
        };
        HpoResult res = run_hpo(obj, hpo_phase1_space(), hpo_phase2_space(), h_n1, h_n2,
                                h_seed, resume, on_trial);

        json best;
        for (auto& [k, v] : res.best) {
            if (std::holds_alternative<double>(v)) best[k] = std::get<double>(v);
            else if (std::holds_alternative<int64_t>(v)) best[k] = std::get<int64_t>(v);
            else best[k] = std::get<std::string>(v);
        }
        json out = {{"best", best},
                    {"best_objective", res.best_objective},
                    {"trials", res.trials.size()}};
        out["config_hash"] = config_hash_of_json(out.dump());
        write_text_file(h_log + ".best.json", out.dump(2) + "\n");
        std::cout << "hpo finished: best validation mse " << res.best_objective << "\n";
    }

    void run_ablate_cmd() {
        FeatureStore store = load_features(a_features);
        DescriptorTable desc = read_descriptor_csv(a_desc);
        uint64_t split_seed = a_split_opt->count() ? a_split_seed : store.split_seed;

        auto full_runs = evaluate_run_dir(a_full, store, desc, a_target, split_seed);

        TrainRunOptions opts;
        opts.target = a_target;
        opts.runs = a_runs;
        opts.base_seed = a_seed;
        opts.drop_phase = phase_from_name(a_drop);
        if (!a_config.empty()) {
            json cfg = json::parse(read_text_file(a_config));
            if (cfg.contains("model")) opts.model = model_from_json(cfg.at("model"));
            if (cfg.contains("train")) opts.train = train_from_json(cfg.at("train"));
        }
        json hash_doc = {{"command", "ablate"},
                         {"target", a_target},
                         {"drop", a_drop},
                         {"runs", a_runs},
                         {"seed", a_seed}};
        std::string hash = config_hash_of_json(hash_doc.dump());
        TrainRunResult variant = run_training(store, desc, opts, split_seed, hash);
        write_run_artifacts(a_out + ".variant", variant, a_target, hash);

        auto report =
            ablation_compare(metric_samples(full_runs), metric_samples(variant.test_metrics));
        std::ostringstream csv;
        csv.precision(10);
        // delta_mu and d are oriented variant minus full
        csv << "target,drop_phase,metric,p,tier,delta_mu,cohens_d,ci_lo,ci_hi\n";
        json jrep = json::array();
        for (const AblationEntry& e : report) {
            csv << a_target << ',' << a_drop << ',' << e.metric << ',' << e.p << ',' << e.tier
                << ',' << e.delta_mu << ',' << e.d << ',' << e.ci.lo << ',' << e.ci.hi << "\n";
            jrep.push_back({{"metric", e.metric},
                            {"p", e.p},
                            {"tier", e.tier},
                            {"delta_mu", e.delta_mu},
                            {"cohens_d", e.d},
                            {"ci", {e.ci.lo, e.ci.hi}}});
        }
        write_text_file(a_out + ".csv", csv.str());
        json jout = {{"target", a_target},
                     {"drop_phase", a_drop},
                     {"comparisons", jrep},
                     {"orientation", "variant_minus_full"},
                     {"config_hash", hash}};
        write_text_file(a_out + ".json", jout.dump(2) + "\n");
        std::cout << "ablation report written to " << a_out << ".csv\n";
    }
};

}  // namespace

int main(int argc, char** argv) {
    Cli cli;
    try {
        try {
            cli.app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            int code = cli.app.exit(e);
            return code == 0 ? kExitOk : kExitUsage;
        }
        return cli.exit_code;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const UndefinedMetric& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
