#include "mstk/ninden.hpp"

#include <cmath>
#include <stdexcept>

#include "mstk/rng.hpp"

namespace mstk {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr double kSeluAlpha = 1.6732632423543772;
constexpr double kSeluLambda = 1.0507009873554805;

double act(Activation a, double x) {
    switch (a) {
        case Activation::Selu:
            return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
        case Activation::Gelu: {
            double phi = 0.5 * std::erfc(-x * M_SQRT1_2);
            return x * phi;
        }
        case Activation::Mish: {
            double sp = x > 30.0 ? x : std::log1p(std::exp(x));
            return x * std::tanh(sp);
        }
    }
    return x;
}

double act_deriv(Activation a, double x) {
    switch (a) {
        case Activation::Selu:
            return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
        case Activation::Gelu: {
            double phi = 0.5 * std::erfc(-x * M_SQRT1_2);
            double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
            return phi + x * pdf;
        }
        case Activation::Mish: {
            double sp = x > 30.0 ? x : std::log1p(std::exp(x));
            double t = std::tanh(sp);
            double sig = 1.0 / (1.0 + std::exp(-x));
            return t + x * (1.0 - t * t) * sig;
        }
    }
    return 1.0;
}

struct BlockCache {
    Matrix x;        // dense input
    Matrix z;        // dense output
    Matrix xhat;     // normalized
    Matrix bn_out;   // pre-activation
    Matrix act_out;  // pre-dropout
    Matrix mask;     // dropout multiplier, empty when rate == 0
    Matrix out;
    std::vector<double> var;
};

Matrix dense_forward(const DenseLayer& l, const Matrix& x) {
    Matrix y;
    gemm_nt(x, l.w, y);
    for (int i = 0; i < y.rows; ++i) {
        double* row = y.row(i);
        for (int j = 0; j < y.cols; ++j) row[j] += l.b[static_cast<std::size_t>(j)];
    }
    return y;
}

Matrix block_forward_train(FFBlock& blk, Activation a, double drop_rate, const Matrix& x,
                           Rng& drop_rng, BlockCache& cache) {
    const int bsz = x.rows;
    const int w = blk.dense.w.rows;
    cache.x = x;
    cache.z = dense_forward(blk.dense, x);

    cache.xhat = Matrix(bsz, w);
    cache.bn_out = Matrix(bsz, w);
    cache.var.assign(static_cast<std::size_t>(w), 0.0);
    for (int j = 0; j < w; ++j) {
        double mu = 0.0;
        for (int i = 0; i < bsz; ++i) mu += cache.z(i, j);
        mu /= bsz;
        double var = 0.0;
        for (int i = 0; i < bsz; ++i) {
            double d = cache.z(i, j) - mu;
            var += d * d;
        }
        var /= bsz;
        cache.var[static_cast<std::size_t>(j)] = var;
        double inv = 1.0 / std::sqrt(var + kBnEps);
        for (int i = 0; i < bsz; ++i) {
            double xh = (cache.z(i, j) - mu) * inv;
            cache.xhat(i, j) = xh;
            cache.bn_out(i, j) = blk.bn.scale[static_cast<std::size_t>(j)] * xh +
                                 blk.bn.shift[static_cast<std::size_t>(j)];
        }
        blk.bn.running_mean[static_cast<std::size_t>(j)] =
            (1.0 - kBnMomentum) * blk.bn.running_mean[static_cast<std::size_t>(j)] +
            kBnMomentum * mu;
        blk.bn.running_var[static_cast<std::size_t>(j)] =
            (1.0 - kBnMomentum) * blk.bn.running_var[static_cast<std::size_t>(j)] +
            kBnMomentum * var;
    }

    cache.act_out = Matrix(bsz, w);
    for (int i = 0; i < bsz; ++i)
        for (int j = 0; j < w; ++j) cache.act_out(i, j) = act(a, cache.bn_out(i, j));

    if (drop_rate > 0.0) {
        double q = 1.0 - drop_rate;
        cache.mask = Matrix(bsz, w);
        cache.out = Matrix(bsz, w);
        for (int i = 0; i < bsz; ++i)
            for (int j = 0; j < w; ++j) {
                double m = drop_rng.uniform() < q ? 1.0 / q : 0.0;
                cache.mask(i, j) = m;
                cache.out(i, j) = cache.act_out(i, j) * m;
            }
    } else {
        cache.out = cache.act_out;
    }
    return cache.out;
}

Matrix block_forward_eval(const FFBlock& blk, Activation a, const Matrix& x) {
    Matrix z = dense_forward(blk.dense, x);
    const int w = z.cols;
    for (int j = 0; j < w; ++j) {
        double inv = 1.0 / std::sqrt(blk.bn.running_var[static_cast<std::size_t>(j)] + kBnEps);
        double mu = blk.bn.running_mean[static_cast<std::size_t>(j)];
        double sc = blk.bn.scale[static_cast<std::size_t>(j)];
        double sh = blk.bn.shift[static_cast<std::size_t>(j)];
        for (int i = 0; i < z.rows; ++i) z(i, j) = act(a, sc * (z(i, j) - mu) * inv + sh);
    }
    return z;
}

// Reverse of block_forward_train; returns gradient w.r.t. the block input.
Matrix block_backward(const FFBlock& blk, Activation a, const BlockCache& cache,
                      const Matrix& dout, FFBlock& grad) {
    const int bsz = dout.rows;
    const int w = dout.cols;

    Matrix d_act = dout;
    if (cache.mask.rows > 0) {
        for (int i = 0; i < bsz; ++i)
            for (int j = 0; j < w; ++j) d_act(i, j) *= cache.mask(i, j);
    }

    Matrix d_bn(bsz, w);
    for (int i = 0; i < bsz; ++i)
        for (int j = 0; j < w; ++j)
            d_bn(i, j) = d_act(i, j) * act_deriv(a, cache.bn_out(i, j));

    Matrix dz(bsz, w);
    for (int j = 0; j < w; ++j) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0, dscale = 0.0, dshift = 0.0;
        double sc = blk.bn.scale[static_cast<std::size_t>(j)];
        for (int i = 0; i < bsz; ++i) {
            double dy = d_bn(i, j);
            double xh = cache.xhat(i, j);
            dscale += dy * xh;
            dshift += dy;
            double dxh = dy * sc;
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh;
        }
        grad.bn.scale[static_cast<std::size_t>(j)] += dscale;
        grad.bn.shift[static_cast<std::size_t>(j)] += dshift;
        double inv = 1.0 / std::sqrt(cache.var[static_cast<std::size_t>(j)] + kBnEps);
        for (int i = 0; i < bsz; ++i) {
            double dxh = d_bn(i, j) * sc;
            dz(i, j) = inv * (dxh - sum_dxhat / bsz - cache.xhat(i, j) * sum_dxhat_xhat / bsz);
        }
    }

    Matrix gw;
    gemm_tn(dz, cache.x, gw);
    for (std::size_t t = 0; t < gw.a.size(); ++t) grad.dense.w.a[t] += gw.a[t];
    for (int j = 0; j < w; ++j) {
        double db = 0.0;
        for (int i = 0; i < bsz; ++i) db += dz(i, j);
        grad.dense.b[static_cast<std::size_t>(j)] += db;
    }

    Matrix dx;
    gemm_nn(dz, blk.dense.w, dx);
    return dx;
}

Matrix concat_cols(const std::vector<const Matrix*>& parts) {
    int rows = parts[0]->rows;
    int cols = 0;
    for (auto* p : parts) cols += p->cols;
    Matrix out(rows, cols);
    int off = 0;
    for (auto* p : parts) {
        for (int i = 0; i < rows; ++i) {
            const double* src = p->row(i);
            double* dst = out.row(i) + off;
            for (int j = 0; j < p->cols; ++j) dst[j] = src[j];
        }
        off += p->cols;
    }
    return out;
}

std::vector<Matrix> split_cols(const Matrix& m, const std::vector<int>& widths) {
    std::vector<Matrix> out;
    int off = 0;
    for (int w : widths) {
        Matrix part(m.rows, w);
        for (int i = 0; i < m.rows; ++i) {
            const double* src = m.row(i) + off;
            double* dst = part.row(i);
            for (int j = 0; j < w; ++j) dst[j] = src[j];
        }
        off += w;
        out.push_back(std::move(part));
    }
    return out;
}

std::vector<int> branch_widths(const std::vector<int>& hidden, int encoding) {
    std::vector<int> w = hidden;
    w.push_back(encoding);
    return w;
}

Branch make_branch(int input, const std::vector<int>& widths, Rng& rng) {
    Branch br;
    int in = input;
    for (int w : widths) {
        FFBlock blk;
        blk.dense.w = Matrix(w, in);
        double std_dev = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& v : blk.dense.w.a) v = rng.normal() * std_dev;
        blk.dense.b.assign(static_cast<std::size_t>(w), 0.0);
        blk.bn.scale.assign(static_cast<std::size_t>(w), 1.0);
        blk.bn.shift.assign(static_cast<std::size_t>(w), 0.0);
        blk.bn.running_mean.assign(static_cast<std::size_t>(w), 0.0);
        blk.bn.running_var.assign(static_cast<std::size_t>(w), 1.0);
        br.blocks.push_back(std::move(blk));
        in = w;
    }
    return br;
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Selu: return "selu";
        case Activation::Gelu: return "gelu";
        case Activation::Mish: return "mish";
    }
    return "?";
}

Activation activation_from_name(const std::string& s) {
    if (s == "selu") return Activation::Selu;
    if (s == "gelu") return Activation::Gelu;
    if (s == "mish") return Activation::Mish;
    throw std::invalid_argument("unknown activation: " + s);
}

int NindenConfig::num_active_phases() const {
    int n = 0;
    for (bool b : phase_active) n += b ? 1 : 0;
    return n;
}

std::vector<int> NindenConfig::active_phases() const {
    std::vector<int> out;
    for (int p = 0; p < 3; ++p)
        if (phase_active[static_cast<std::size_t>(p)]) out.push_back(p);
    return out;
}

void validate(const NindenConfig& cfg) {
    auto check_widths = [](const std::vector<int>& w) {
        for (int x : w)
            if (x < 1) throw std::invalid_argument("layer widths must be >= 1");
    };
    check_widths(cfg.pi_branch_widths);
    check_widths(cfg.phase_branch_widths);
    for (int x : cfg.head_widths)
        if (x < 1) throw std::invalid_argument("layer widths must be >= 1");
    if (cfg.encoding_length < 1) throw std::invalid_argument("encoding_length must be >= 1");
    if (cfg.channel_size < 1) throw std::invalid_argument("channel_size must be >= 1");
    if (!(cfg.dropout_pi >= 0.0 && cfg.dropout_pi < 1.0) ||
        !(cfg.dropout_main >= 0.0 && cfg.dropout_main < 1.0))
        throw std::invalid_argument("dropout rates must lie in [0,1)");
    if (cfg.num_active_phases() < 1)
        throw std::invalid_argument("at least one phase must stay active");
}

void visit_params(ModelParams& p,
                  const std::function<void(std::vector<double>&, ParamKind)>& fn) {
    auto visit_branch = [&](Branch& br) {
        for (FFBlock& blk : br.blocks) {
            fn(blk.dense.w.a, ParamKind::Weight);
            fn(blk.dense.b, ParamKind::Bias);
            fn(blk.bn.scale, ParamKind::BnScale);
            fn(blk.bn.shift, ParamKind::BnShift);
        }
    };
    for (Branch& br : p.pi_branches) visit_branch(br);
    for (Branch& br : p.phase_branches) visit_branch(br);
    visit_branch(p.head);
    fn(p.out.w.a, ParamKind::Weight);
    fn(p.out.b, ParamKind::Bias);
}

void visit_params(const ModelParams& p,
                  const std::function<void(const std::vector<double>&, ParamKind)>& fn) {
    visit_params(const_cast<ModelParams&>(p),
                 [&](std::vector<double>& v, ParamKind k) { fn(v, k); });
}

std::size_t num_parameters(const ModelParams& p) {
    std::size_t n = 0;
    visit_params(p, [&](const std::vector<double>& v, ParamKind) { n += v.size(); });
    return n;
}

ModelParams zeros_like(const ModelParams& p) {
    ModelParams z = p;
    visit_params(z, [](std::vector<double>& v, ParamKind) {
        std::fill(v.begin(), v.end(), 0.0);
    });
    return z;
}

ModelParams init(const NindenConfig& cfg, uint64_t seed) {
    validate(cfg);
    Rng rng(seed);
    ModelParams p;
    p.cfg = cfg;
    const int enc = cfg.encoding_length;
    const int n_phases = cfg.num_active_phases();
    for (int b = 0; b < 3 * n_phases; ++b)
        p.pi_branches.push_back(
            make_branch(cfg.channel_size, branch_widths(cfg.pi_branch_widths, enc), rng));
    for (int b = 0; b < n_phases; ++b)
        p.phase_branches.push_back(
            make_branch(3 * enc, branch_widths(cfg.phase_branch_widths, enc), rng));
    std::vector<int> head_w(cfg.head_widths.begin(), cfg.head_widths.end());
    p.head = make_branch(n_phases * enc, head_w, rng);
    p.out.w = Matrix(1, cfg.head_widths[2]);
    double std_dev = 1.0 / std::sqrt(static_cast<double>(cfg.head_widths[2]));
    for (double& v : p.out.w.a) v = rng.normal() * std_dev;
    p.out.b.assign(1, 0.0);
    return p;
}

Batch make_batch(const std::vector<const FeatureSet*>& samples) {
    if (samples.empty()) throw std::invalid_argument("empty batch");
    Batch b;
    b.size = static_cast<int>(samples.size());
    std::size_t ch_size = samples[0]->channels[0].values.size();
    for (int ch = 0; ch < kNumChannels; ++ch) {
        Matrix m(b.size, static_cast<int>(ch_size));
        for (int i = 0; i < b.size; ++i) {
            const auto& vals = samples[static_cast<std::size_t>(i)]
                                   ->channels[static_cast<std::size_t>(ch)]
                                   .values;
            if (vals.size() != ch_size)
                throw std::invalid_argument("inconsistent channel size in batch");
            std::copy(vals.begin(), vals.end(), m.row(i));
        }
        b.channels[static_cast<std::size_t>(ch)] = std::move(m);
    }
    return b;
}

namespace {

struct NetCache {
    std::vector<std::vector<BlockCache>> pi;
    std::vector<std::vector<BlockCache>> phase;
    std::vector<BlockCache> head;
    Matrix out_in;
};

std::vector<double> forward_train(ModelParams& p, const Batch& batch, uint64_t dropout_seed,
                                  NetCache& cache) {
    const NindenConfig& cfg = p.cfg;
    if (batch.channels[0].cols != cfg.channel_size)
        throw std::invalid_argument("batch channel size does not match model");
    Rng drop_rng(dropout_seed);
    auto phases = cfg.active_phases();
    const int enc = cfg.encoding_length;

    cache.pi.resize(p.pi_branches.size());
    cache.phase.resize(p.phase_branches.size());

    std::vector<Matrix> phase_enc;
    for (std::size_t pi_group = 0; pi_group < phases.size(); ++pi_group) {
        std::vector<Matrix> encodings;
        for (int k = 0; k < 3; ++k) {
            std::size_t bi = pi_group * 3 + static_cast<std::size_t>(k);
            Branch& br = p.pi_branches[bi];
            cache.pi[bi].resize(br.blocks.size());
            int ch = channel_of(static_cast<Phase>(phases[pi_group]), k);
            Matrix cur = batch.channels[static_cast<std::size_t>(ch)];
            for (std::size_t l = 0; l < br.blocks.size(); ++l)
                cur = block_forward_train(br.blocks[l], cfg.activation, cfg.dropout_pi, cur,
                                          drop_rng, cache.pi[bi][l]);
            encodings.push_back(std::move(cur));
        }
        Matrix concat = concat_cols({&encodings[0], &encodings[1], &encodings[2]});
        Branch& br = p.phase_branches[pi_group];
        cache.phase[pi_group].resize(br.blocks.size());
        Matrix cur = std::move(concat);
        for (std::size_t l = 0; l < br.blocks.size(); ++l)
            cur = block_forward_train(br.blocks[l], cfg.activation, cfg.dropout_main, cur,
                                      drop_rng, cache.phase[pi_group][l]);
        phase_enc.push_back(std::move(cur));
        (void)enc;
    }

    std::vector<const Matrix*> parts;
    for (const Matrix& m : phase_enc) parts.push_back(&m);
    Matrix cur = concat_cols(parts);
    cache.head.resize(p.head.blocks.size());
    for (std::size_t l = 0; l < p.head.blocks.size(); ++l)
        cur = block_forward_train(p.head.blocks[l], cfg.activation, cfg.dropout_main, cur,
                                  drop_rng, cache.head[l]);
    cache.out_in = cur;
    Matrix y = dense_forward(p.out, cur);
    std::vector<double> pred(static_cast<std::size_t>(batch.size));
    for (int i = 0; i < batch.size; ++i) pred[static_cast<std::size_t>(i)] = y(i, 0);
    return pred;
}

}  // namespace

std::vector<double> predict(const ModelParams& p, const Batch& batch) {
    const NindenConfig& cfg = p.cfg;
    if (batch.channels[0].cols != cfg.channel_size)
        throw std::invalid_argument("batch channel size does not match model");
    auto phases = cfg.active_phases();

    std::vector<Matrix> phase_enc;
    for (std::size_t pi_group = 0; pi_group < phases.size(); ++pi_group) {
        std::vector<Matrix> encodings;
        for (int k = 0; k < 3; ++k) {
            const Branch& br = p.pi_branches[pi_group * 3 + static_cast<std::size_t>(k)];
            int ch = channel_of(static_cast<Phase>(phases[pi_group]), k);
            Matrix cur = batch.channels[static_cast<std::size_t>(ch)];
            for (const FFBlock& blk : br.blocks)
                cur = block_forward_eval(blk, cfg.activation, cur);
            encodings.push_back(std::move(cur));
        }
        Matrix cur = concat_cols({&encodings[0], &encodings[1], &encodings[2]});
        for (const FFBlock& blk : p.phase_branches[pi_group].blocks)
            cur = block_forward_eval(blk, cfg.activation, cur);
        phase_enc.push_back(std::move(cur));
    }

    std::vector<const Matrix*> parts;
    for (const Matrix& m : phase_enc) parts.push_back(&m);
    Matrix cur = concat_cols(parts);
    for (const FFBlock& blk : p.head.blocks) cur = block_forward_eval(blk, cfg.activation, cur);
    Matrix y = dense_forward(p.out, cur);
    std::vector<double> pred(static_cast<std::size_t>(batch.size));
    for (int i = 0; i < batch.size; ++i) pred[static_cast<std::size_t>(i)] = y(i, 0);
    return pred;
}

double loss_and_gradients(ModelParams& p, const Batch& batch,
                          const std::vector<double>& targets, uint64_t dropout_seed,
                          ModelParams& grads) {
    if (targets.size() != static_cast<std::size_t>(batch.size))
        throw std::invalid_argument("target count does not match batch");
    const NindenConfig& cfg = p.cfg;
    NetCache cache;
    std::vector<double> pred = forward_train(p, batch, dropout_seed, cache);

    const int bsz = batch.size;
    double mse = 0.0;
    Matrix dpred(bsz, 1);
    for (int i = 0; i < bsz; ++i) {
        double e = pred[static_cast<std::size_t>(i)] - targets[static_cast<std::size_t>(i)];
        mse += e * e;
        dpred(i, 0) = 2.0 * e / bsz;
    }
    mse /= bsz;

    // output layer
    Matrix gw;
    gemm_tn(dpred, cache.out_in, gw);
    for (std::size_t t = 0; t < gw.a.size(); ++t) grads.out.w.a[t] += gw.a[t];
    double db = 0.0;
    for (int i = 0; i < bsz; ++i) db += dpred(i, 0);
    grads.out.b[0] += db;
    Matrix d;
    gemm_nn(dpred, p.out.w, d);

    // head
    for (std::size_t l = p.head.blocks.size(); l-- > 0;)
        d = block_backward(p.head.blocks[l], cfg.activation, cache.head[l], d,
                           grads.head.blocks[l]);

    auto phases = cfg.active_phases();
    const int enc = cfg.encoding_length;
    std::vector<int> widths(phases.size(), enc);
    std::vector<Matrix> d_phase = split_cols(d, widths);

    for (std::size_t pg = phases.size(); pg-- > 0;) {
        Matrix dp = std::move(d_phase[pg]);
        Branch& br = p.phase_branches[pg];
        for (std::size_t l = br.blocks.size(); l-- > 0;)
            dp = block_backward(br.blocks[l], cfg.activation, cache.phase[pg][l], dp,
                                grads.phase_branches[pg].blocks[l]);
        std::vector<Matrix> d_enc = split_cols(dp, {enc, enc, enc});
        for (int k = 2; k >= 0; --k) {
            std::size_t bi = pg * 3 + static_cast<std::size_t>(k);
            Matrix dk = std::move(d_enc[static_cast<std::size_t>(k)]);
            Branch& pb = p.pi_branches[bi];
            for (std::size_t l = pb.blocks.size(); l-- > 0;)
                dk = block_backward(pb.blocks[l], cfg.activation, cache.pi[bi][l], dk,
                                    grads.pi_branches[bi].blocks[l]);
        }
    }
    return mse;
}

double training_loss(ModelParams& p, const Batch& batch, const std::vector<double>& targets,
                     uint64_t dropout_seed) {
    NetCache cache;
    std::vector<double> pred = forward_train(p, batch, dropout_seed, cache);
    double mse = 0.0;
    for (int i = 0; i < batch.size; ++i) {
        double e = pred[static_cast<std::size_t>(i)] - targets[static_cast<std::size_t>(i)];
        mse += e * e;
    }
    return mse / batch.size;
}

}  // namespace mstk
