#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mstk/linalg.hpp"
#include "mstk/persistence_image.hpp"

namespace mstk {

enum class Activation { Selu, Gelu, Mish };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& s);

/// Nine-input dense network: one FF branch per persistence-image channel,
/// channels of a phase concatenate into a phase branch, phase encodings
/// concatenate into a three-block head with a final linear output.
/// Every FF block is linear -> batchnorm -> activation -> dropout.
struct NindenConfig {
    Activation activation = Activation::Selu;
    std::vector<int> pi_branch_widths = {256, 128};
    std::vector<int> phase_branch_widths = {256, 128};
    std::array<int, 3> head_widths = {128, 64, 32};
    int encoding_length = 64;
    double dropout_pi = 1.2e-3;
    double dropout_main = 1.2e-3;
    std::array<bool, 3> phase_active = {true, true, true};  // ablation drops a phase
    int channel_size = 32 * 32;

    int num_active_phases() const;
    std::vector<int> active_phases() const;
};

void validate(const NindenConfig& cfg);

struct DenseLayer {
    Matrix w;  // out x in
    std::vector<double> b;
};

struct BatchNormLayer {
    std::vector<double> scale, shift;
    std::vector<double> running_mean, running_var;
};

struct FFBlock {
    DenseLayer dense;
    BatchNormLayer bn;
};

struct Branch {
    std::vector<FFBlock> blocks;
};

struct ModelParams {
    NindenConfig cfg;
    std::vector<Branch> pi_branches;     // 3 per active phase, degree-major k=0,1,2
    std::vector<Branch> phase_branches;  // one per active phase
    Branch head;
    DenseLayer out;
};

enum class ParamKind { Weight, Bias, BnScale, BnShift };

// Visits every trainable array in a fixed declared order.
void visit_params(ModelParams& p,
                  const std::function<void(std::vector<double>&, ParamKind)>& fn);
void visit_params(const ModelParams& p,
                  const std::function<void(const std::vector<double>&, ParamKind)>& fn);

std::size_t num_parameters(const ModelParams& p);
ModelParams zeros_like(const ModelParams& p);

// LeCun-normal weights (std = 1/sqrt(fan_in)), zero biases, unit batchnorm.
ModelParams init(const NindenConfig& cfg, uint64_t seed);

struct Batch {
    int size = 0;
    std::array<Matrix, kNumChannels> channels;  // each size x channel_size
};

Batch make_batch(const std::vector<const FeatureSet*>& samples);

// Eval-mode forward: running statistics, no dropout.
std::vector<double> predict(const ModelParams& p, const Batch& batch);

// Training-mode forward + exact reverse-mode MSE gradients. Batch statistics
// are used for normalization and running statistics are updated in place.
// Dropout masks derive from dropout_seed, so a fixed seed replays exactly.
double loss_and_gradients(ModelParams& p, const Batch& batch,
                          const std::vector<double>& targets, uint64_t dropout_seed,
                          ModelParams& grads);

// Training-mode loss only (same masks for the same seed); finite-difference
// checks run the same path the gradients are derived from.
double training_loss(ModelParams& p, const Batch& batch, const std::vector<double>& targets,
                     uint64_t dropout_seed);

}  // namespace mstk
