#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mstk/descriptors.hpp"
#include "mstk/generator.hpp"
#include "mstk/hpo.hpp"
#include "mstk/persistence_image.hpp"
#include "mstk/preprocess.hpp"
#include "mstk/stats.hpp"
#include "mstk/train.hpp"

namespace mstk {

/// End-to-end plumbing shared by the CLI and the integration suite: sample
/// generation with manifests, feature files, per-attribute training runs and
/// report assembly.

// Stable digest of a canonicalized JSON document (sorted keys, fixed float
// formatting via the serializer).
std::string config_hash_of_json(const std::string& json_text);

struct SampleSpec {
    std::string id;
    GeneratorConfig cfg;
};

// Per-sample generator settings derived from one master seed: target
// fractions, particle radius and CA rounds vary across samples so the
// descriptor targets span a useful range.
std::vector<SampleSpec> plan_samples(int n, uint64_t master_seed);

struct GenerateOptions {
    int n = 8;
    int dims = 48;
    double voxel_size = 7.14 / 200.0;
    uint64_t seed = 0;
    int jobs = 1;
    std::string out_dir;
};

// Writes grid files + manifest.json; returns the written file names.
std::vector<std::string> run_generate(const GenerateOptions& opts);

struct ManifestEntry {
    std::string id;
    std::string file;
    uint64_t seed = 0;
};

std::vector<ManifestEntry> read_manifest(const std::string& dir);

struct CharacterizeOptions {
    std::string in_dir;
    std::string out_csv;
    int axis = 2;
    int jobs = 1;
};

// One CSV row per sample; corrupt grid files are skipped with a warning.
// Returns the number of skipped samples.
int run_characterize(const CharacterizeOptions& opts);

struct FeaturizeOptions {
    std::string in_dir;
    std::string out_dir;
    PiConfig pi;           // ranges ignored; fitted per channel
    uint64_t split_seed = 0;
    int jobs = 1;
};

// Per-sample diagrams -> channel ranges on the training split -> feature
// files; also writes diagrams.csv and features_manifest.json.
void run_featurize(const FeaturizeOptions& opts);

struct FeatureFile {
    std::string sample_id;
    FeatureSet features;
};

struct FeatureStore {
    PiConfig pi;
    ChannelRanges ranges;
    uint64_t split_seed = 0;
    std::vector<std::string> sample_ids;
    std::vector<FeatureSet> features;
};

FeatureStore load_features(const std::string& dir);

void write_feature_file(const std::string& path, const std::string& sample_id,
                        const FeatureSet& fs, const PiConfig& pi, const ChannelRanges& ranges,
                        const std::string& config_hash);
FeatureFile read_feature_file(const std::string& path);

// Diagram CSV: sample_id,phase,k,birth,death
void write_diagram_csv(const std::string& path,
                       const std::vector<std::string>& sample_ids,
                       const std::vector<GridDiagrams>& diagrams);
std::vector<std::pair<std::string, GridDiagrams>> read_diagram_csv(const std::string& path);

struct TrainRunOptions {
    std::string target;
    int runs = 1;
    uint64_t base_seed = 0;
    NindenConfig model;
    TrainConfig train;
    std::optional<Phase> drop_phase;  // ablation variant
};

struct AttributeData {
    Dataset dataset;  // features + transformed targets over the usable samples
    std::vector<std::size_t> train, val, test;
    TransformParams transform;
};

// Splits on the full sample list, then drops per-attribute missing targets
// within each subset; the transform is fitted on the surviving train targets.
AttributeData prepare_attribute_data(const FeatureStore& store, const DescriptorTable& desc,
                                     const std::string& target, uint64_t split_seed);

struct RunMetrics {
    int run = 0;
    MetricsRow row;
};

struct TrainRunResult {
    std::vector<Checkpoint> checkpoints;
    std::vector<TrainHistory> histories;
    std::vector<RunMetrics> test_metrics;  // in transformed target space
};

TrainRunResult run_training(const FeatureStore& store, const DescriptorTable& desc,
                            const TrainRunOptions& opts, uint64_t split_seed,
                            const std::string& config_hash);

// Metric samples over runs keyed "mse", "mae", "r2", "pearson", "spearman".
std::vector<std::pair<std::string, std::vector<double>>> metric_samples(
    const std::vector<RunMetrics>& runs);

// Search spaces of the two optimization phases. Width and encoding dimensions
// are sampled as base-2 exponents; phase 1 also owns the image parameters
// C, sigma and the integer weight exponent p.
SearchSpace hpo_phase1_space();
SearchSpace hpo_phase2_space();

// Materializes an assignment onto concrete configs; keys absent from the
// assignment leave the corresponding field untouched.
void apply_assignment(const Assignment& a, PiConfig& pi, NindenConfig& model,
                      TrainConfig& train);

struct HpoObjectiveOptions {
    std::string target = "l_tpb_active";  // pretext task
    uint64_t split_seed = 0;
    uint64_t train_seed = 0;
    int max_epochs = 40;
    int batch_size = 32;
    int patience = 4;
    int t0 = 25;
    int jobs = 1;
};

// Validation MSE of a short training run; persistence images are re-rendered
// from the stored diagrams with the trial's image parameters.
Objective make_hpo_objective(const std::vector<std::pair<std::string, GridDiagrams>>& diagrams,
                             const DescriptorTable& desc, const HpoObjectiveOptions& opts);

}  // namespace mstk
