#include "mstk/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "mstk/rng.hpp"
#include "mstk/util.hpp"

namespace mstk {

using nlohmann::json;

void validate(const TrainConfig& cfg) {
    if (!(cfg.lr0 > 0.0)) throw std::invalid_argument("lr0 must be > 0");
    if (cfg.patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (cfg.t0 < 1) throw std::invalid_argument("t0 must be >= 1");
    if (cfg.t_mult < 1) throw std::invalid_argument("t_mult must be >= 1");
    if (cfg.batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
    if (cfg.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
}

double cosine_lr(double t_in_cycle, double cycle_len, double lr0, double lr_min) {
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(M_PI * t_in_cycle / cycle_len));
}

double schedule_lr(int epoch, const TrainConfig& cfg) {
    long t = epoch;
    long cycle = cfg.t0;
    while (t >= cycle) {
        t -= cycle;
        cycle *= cfg.t_mult;
    }
    return cosine_lr(static_cast<double>(t), static_cast<double>(cycle), cfg.lr0, cfg.lr_min);
}

AdamWState make_adamw_state(const ModelParams& p) {
    AdamWState s;
    visit_params(p, [&](const std::vector<double>& v, ParamKind) {
        s.m.emplace_back(v.size(), 0.0);
        s.v.emplace_back(v.size(), 0.0);
    });
    return s;
}

void adamw_step(ModelParams& params, const ModelParams& grads, AdamWState& state, double lr,
                double weight_decay) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    state.step += 1;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

    std::vector<std::pair<std::vector<double>*, ParamKind>> pv;
    visit_params(params, [&](std::vector<double>& v, ParamKind k) { pv.emplace_back(&v, k); });
    std::vector<const std::vector<double>*> gv;
    visit_params(grads, [&](const std::vector<double>& v, ParamKind) { gv.push_back(&v); });

    for (std::size_t t = 0; t < pv.size(); ++t) {
        auto& [vec, kind] = pv[t];
        const std::vector<double>& g = *gv[t];
        std::vector<double>& m = state.m[t];
        std::vector<double>& v2 = state.v[t];
        const bool decay = (kind == ParamKind::Weight);
        for (std::size_t i = 0; i < vec->size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v2[i] = beta2 * v2[i] + (1.0 - beta2) * g[i] * g[i];
            double mh = m[i] / bc1;
            double vh = v2[i] / bc2;
            double upd = mh / (std::sqrt(vh) + eps);
            if (decay) upd += weight_decay * (*vec)[i];
            (*vec)[i] -= lr * upd;
        }
    }
}

std::vector<double> predict_all(const ModelParams& p, const Dataset& data,
                                const std::vector<std::size_t>& idx) {
    std::vector<const FeatureSet*> fs;
    fs.reserve(idx.size());
    for (std::size_t i : idx) fs.push_back(data.features[i]);
    return predict(p, make_batch(fs));
}

double eval_mse(const ModelParams& p, const Dataset& data,
                const std::vector<std::size_t>& idx) {
    std::vector<double> pred = predict_all(p, data, idx);
    double sse = 0.0;
    for (std::size_t t = 0; t < idx.size(); ++t) {
        double e = pred[t] - data.targets[idx[t]];
        sse += e * e;
    }
    return sse / static_cast<double>(idx.size());
}

TrainResult train(const NindenConfig& cfg, const TrainConfig& tcfg, const Dataset& data,
                  const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx) {
    validate(cfg);
    validate(tcfg);
    if (train_idx.empty() || val_idx.empty())
        throw std::invalid_argument("train and validation splits must be nonempty");

    ModelParams params = init(cfg, tcfg.seed);
    AdamWState opt = make_adamw_state(params);
    Rng rng(derive_seed(tcfg.seed, 1));  // data order + dropout stream

    TrainHistory hist;
    hist.best_val = std::numeric_limits<double>::infinity();
    ModelParams best = params;
    int bad_epochs = 0;

    std::vector<std::size_t> order = train_idx;
    for (int epoch = 0; epoch < tcfg.max_epochs; ++epoch) {
        double lr = schedule_lr(epoch, tcfg);
        rng.shuffle(order);

        double sse = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
            std::size_t end = std::min(order.size(), start + tcfg.batch_size);
            if (end - start < 2) continue;  // batch stats need >= 2 samples
            std::vector<const FeatureSet*> fs;
            std::vector<double> targets;
            for (std::size_t i = start; i < end; ++i) {
                fs.push_back(data.features[order[i]]);
                targets.push_back(data.targets[order[i]]);
            }
            Batch batch = make_batch(fs);
            ModelParams grads = zeros_like(params);
            double mse = loss_and_gradients(params, batch, targets, rng.next_u64(), grads);
            adamw_step(params, grads, opt, lr, tcfg.weight_decay);
            sse += mse * static_cast<double>(end - start);
            seen += end - start;
        }

        double val = eval_mse(params, data, val_idx);
        hist.train_loss.push_back(seen ? sse / static_cast<double>(seen) : 0.0);
        hist.val_loss.push_back(val);
        hist.lr.push_back(lr);
        hist.stopped_epoch = epoch;

        if (val < hist.best_val) {
            hist.best_val = val;
            hist.best_epoch = epoch;
            best = params;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= tcfg.patience) break;
        }
    }
    return {std::move(best), std::move(hist)};
}

namespace {

json range_to_json(const Range& r) { return json::array({r.lo, r.hi}); }
Range range_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json config_to_json(const NindenConfig& c) {
    json j;
    j["activation"] = activation_name(c.activation);
    j["pi_branch_widths"] = c.pi_branch_widths;
    j["phase_branch_widths"] = c.phase_branch_widths;
    j["head_widths"] = c.head_widths;
    j["encoding_length"] = c.encoding_length;
    j["dropout_pi"] = c.dropout_pi;
    j["dropout_main"] = c.dropout_main;
    j["phase_active"] = c.phase_active;
    j["channel_size"] = c.channel_size;
    return j;
}

NindenConfig config_from_json(const json& j) {
    NindenConfig c;
    c.activation = activation_from_name(j.at("activation").get<std::string>());
    c.pi_branch_widths = j.at("pi_branch_widths").get<std::vector<int>>();
    c.phase_branch_widths = j.at("phase_branch_widths").get<std::vector<int>>();
    auto hw = j.at("head_widths").get<std::vector<int>>();
    for (std::size_t i = 0; i < 3; ++i) c.head_widths[i] = hw.at(i);
    c.encoding_length = j.at("encoding_length").get<int>();
    c.dropout_pi = j.at("dropout_pi").get<double>();
    c.dropout_main = j.at("dropout_main").get<double>();
    auto pa = j.at("phase_active").get<std::vector<bool>>();
    for (std::size_t i = 0; i < 3; ++i) c.phase_active[i] = pa.at(i);
    c.channel_size = j.at("channel_size").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& json_path) {
    json j;
    j["format"] = "mstk-checkpoint-v1";
    j["config_hash"] = ck.config_hash;
    j["target"] = ck.target;
    j["seed"] = ck.seed;
    j["best_epoch"] = ck.best_epoch;
    j["model"] = config_to_json(ck.params.cfg);
    j["transform"] = {{"lambda", ck.transform.lambda}, {"mean", ck.transform.mean},
                      {"std", ck.transform.std_dev},   {"lo", ck.transform.lo},
                      {"hi", ck.transform.hi}};
    j["pi"] = {{"C", ck.pi_config.C},
               {"gamma", ck.pi_config.gamma},
               {"sigma", ck.pi_config.sigma},
               {"resolution", ck.pi_config.resolution}};
    json ranges = json::array();
    for (int ch = 0; ch < kNumChannels; ++ch)
        ranges.push_back({{"channel", channel_name(ch)},
                          {"birth", range_to_json(ck.ranges.birth[static_cast<std::size_t>(ch)])},
                          {"pers", range_to_json(ck.ranges.pers[static_cast<std::size_t>(ch)])}});
    j["channel_ranges"] = ranges;

    // Flat parameter payload: trainable arrays in visit order, then the
    // batchnorm running statistics in block order.
    std::string bin_path = json_path + ".params.bin";
    j["params_file"] = bin_path.substr(bin_path.find_last_of('/') + 1);
    std::vector<double> flat;
    visit_params(ck.params, [&](const std::vector<double>& v, ParamKind) {
        flat.insert(flat.end(), v.begin(), v.end());
    });
    auto dump_running = [&](const Branch& br) {
        for (const FFBlock& blk : br.blocks) {
            flat.insert(flat.end(), blk.bn.running_mean.begin(), blk.bn.running_mean.end());
            flat.insert(flat.end(), blk.bn.running_var.begin(), blk.bn.running_var.end());
        }
    };
    for (const Branch& br : ck.params.pi_branches) dump_running(br);
    for (const Branch& br : ck.params.phase_branches) dump_running(br);
    dump_running(ck.params.head);
    j["params_count"] = flat.size();

    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + bin_path);
    bin.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write " + json_path);
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + json_path);
    json j = json::parse(in);
    Checkpoint ck;
    ck.config_hash = j.value("config_hash", "");
    ck.target = j.at("target").get<std::string>();
    ck.seed = j.at("seed").get<uint64_t>();
    ck.best_epoch = j.at("best_epoch").get<int>();
    NindenConfig cfg = config_from_json(j.at("model"));
    ck.params = init(cfg, 0);  // shapes only; payload overwritten below
    ck.transform.lambda = j.at("transform").at("lambda").get<double>();
    ck.transform.mean = j.at("transform").at("mean").get<double>();
    ck.transform.std_dev = j.at("transform").at("std").get<double>();
    ck.transform.lo = j.at("transform").at("lo").get<double>();
    ck.transform.hi = j.at("transform").at("hi").get<double>();
    ck.pi_config.C = j.at("pi").at("C").get<double>();
    ck.pi_config.gamma = j.at("pi").at("gamma").get<int>();
    ck.pi_config.sigma = j.at("pi").at("sigma").get<double>();
    ck.pi_config.resolution = j.at("pi").at("resolution").get<int>();
    const json& ranges = j.at("channel_ranges");
    for (int ch = 0; ch < kNumChannels; ++ch) {
        ck.ranges.birth[static_cast<std::size_t>(ch)] = range_from_json(ranges.at(ch).at("birth"));
        ck.ranges.pers[static_cast<std::size_t>(ch)] = range_from_json(ranges.at(ch).at("pers"));
    }

    std::string dir;
    auto slash = json_path.find_last_of('/');
    if (slash != std::string::npos) dir = json_path.substr(0, slash + 1);
    std::string bin_path = dir + j.at("params_file").get<std::string>();
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open checkpoint payload: " + bin_path);
    std::size_t count = j.at("params_count").get<std::size_t>();
    std::vector<double> flat(count);
    bin.read(reinterpret_cast<char*>(flat.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(bin.gcount()) != count * sizeof(double))
        throw std::runtime_error("truncated checkpoint payload: " + bin_path);

    std::size_t off = 0;
    visit_params(ck.params, [&](std::vector<double>& v, ParamKind) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + v.size()), v.begin());
        off += v.size();
    });
    auto load_running = [&](Branch& br) {
        for (FFBlock& blk : br.blocks) {
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                      flat.begin() + static_cast<std::ptrdiff_t>(off + blk.bn.running_mean.size()),
                      blk.bn.running_mean.begin());
            off += blk.bn.running_mean.size();
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                      flat.begin() + static_cast<std::ptrdiff_t>(off + blk.bn.running_var.size()),
                      blk.bn.running_var.begin());
            off += blk.bn.running_var.size();
        }
    };
    for (Branch& br : ck.params.pi_branches) load_running(br);
    for (Branch& br : ck.params.phase_branches) load_running(br);
    load_running(ck.params.head);
    if (off != count) throw std::runtime_error("checkpoint payload size mismatch");
    return ck;
}

}  // namespace mstk
