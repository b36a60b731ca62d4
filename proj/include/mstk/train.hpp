#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mstk/ninden.hpp"
#include "mstk/preprocess.hpp"

namespace mstk {

struct TrainConfig {
    double lr0 = 1.2e-3;
    double lr_min = 0.0;
    double weight_decay = 1.72e-1;
    int patience = 4;
    int t0 = 25;      // initial restart cycle length, epochs
    int t_mult = 2;   // cycle growth factor
    int batch_size = 32;
    int max_epochs = 200;
    uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

// eta_min + (eta_max - eta_min) * (1 + cos(pi t / T)) / 2
double cosine_lr(double t_in_cycle, double cycle_len, double lr0, double lr_min);

// Maps an epoch index (0-based) onto the warm-restart schedule: cycles of
// length t0, t0*t_mult, t0*t_mult^2, ...
double schedule_lr(int epoch, const TrainConfig& cfg);

/// Decoupled AdamW: theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta),
/// decay applied to weight matrices only.
struct AdamWState {
    std::vector<std::vector<double>> m, v;
    long step = 0;
};

AdamWState make_adamw_state(const ModelParams& p);
void adamw_step(ModelParams& params, const ModelParams& grads, AdamWState& state, double lr,
                double weight_decay);

struct TrainHistory {
    std::vector<double> train_loss, val_loss, lr;
    int best_epoch = -1;
    double best_val = 0.0;
    int stopped_epoch = -1;
};

/// Per-attribute training set: features aligned with transformed targets.
struct Dataset {
    std::vector<const FeatureSet*> features;
    std::vector<double> targets;
};

struct TrainResult {
    ModelParams params;
    TrainHistory history;
};

// Early stopping on validation loss; returns the best-validation parameters.
// Deterministic for a fixed seed. Remainder batches of size 1 are skipped
// (batch statistics are undefined there).
TrainResult train(const NindenConfig& cfg, const TrainConfig& tcfg, const Dataset& data,
                  const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx);

double eval_mse(const ModelParams& p, const Dataset& data,
                const std::vector<std::size_t>& idx);
std::vector<double> predict_all(const ModelParams& p, const Dataset& data,
                                const std::vector<std::size_t>& idx);

/// Checkpoint = JSON manifest plus a raw little-endian float64 sidecar with
/// every parameter array in visit_params order.
struct Checkpoint {
    ModelParams params;
    TransformParams transform;
    PiConfig pi_config;
    ChannelRanges ranges;
    std::string target;
    uint64_t seed = 0;
    int best_epoch = -1;
    std::string config_hash;
};

void save_checkpoint(const Checkpoint& ck, const std::string& json_path);
Checkpoint load_checkpoint(const std::string& json_path);

}  // namespace mstk
