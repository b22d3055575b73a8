#include <cmath>
#include <random>

#include "subguard/errors.hpp"
#include "subguard/toylm.hpp"

namespace subguard {

namespace {

constexpr double kLayerNormEps = 1e-5;
const double kGeluScale = std::sqrt(2.0 / 3.14159265358979323846);

struct LayerNormCache {
    Eigen::MatrixXd normalized;  // x_hat
    Eigen::VectorXd inv_std;
};

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& gain, const Eigen::VectorXd& bias,
                           LayerNormCache* cache) {
    const auto d = static_cast<double>(x.cols());
    Eigen::MatrixXd x_hat(x.rows(), x.cols());
    Eigen::VectorXd inv_std(x.rows());
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        const double mean = x.row(t).sum() / d;
        const double var = (x.row(t).array() - mean).square().sum() / d;
        inv_std[t] = 1.0 / std::sqrt(var + kLayerNormEps);
        x_hat.row(t) = (x.row(t).array() - mean) * inv_std[t];
    }
    Eigen::MatrixXd y = (x_hat.array().rowwise() * gain.transpose().array()).matrix();
    y.rowwise() += bias.transpose();
    if (cache) {
        cache->normalized = std::move(x_hat);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const LayerNormCache& cache,
                                    const Eigen::VectorXd& gain, Eigen::VectorXd& d_gain, Eigen::VectorXd& d_bias) {
    d_gain += (dy.array() * cache.normalized.array()).colwise().sum().transpose().matrix();
    d_bias += dy.colwise().sum().transpose();
    const Eigen::MatrixXd dx_hat = (dy.array().rowwise() * gain.transpose().array()).matrix();
    const auto d = static_cast<double>(dy.cols());
    Eigen::MatrixXd dx(dy.rows(), dy.cols());
    for (Eigen::Index t = 0; t < dy.rows(); ++t) {
        const double mean_dx_hat = dx_hat.row(t).sum() / d;
        const double mean_dot = dx_hat.row(t).dot(cache.normalized.row(t)) / d;
        dx.row(t) = cache.inv_std[t] *
                    (dx_hat.row(t).array() - mean_dx_hat - cache.normalized.row(t).array() * mean_dot).matrix();
    }
    return dx;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x) {
    const double inner = kGeluScale * (x + 0.044715 * x * x * x);
    const double t = std::tanh(inner);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * 0.044715 * x * x);
}

struct BlockCache {
    LayerNormCache ln1;
    Eigen::MatrixXd attn_in;  // LN1 output
    Eigen::MatrixXd qkv;
    std::vector<Eigen::MatrixXd> probs;  // per head, T x T
    Eigen::MatrixXd heads;               // concatenated head outputs
    LayerNormCache ln2;
    Eigen::MatrixXd mlp_in;  // LN2 output
    Eigen::MatrixXd fc_pre;
    Eigen::MatrixXd fc_act;
};

struct ForwardCache {
    std::vector<int> tokens;
    std::vector<BlockCache> blocks;
    LayerNormCache lnf;
    Eigen::MatrixXd final_norm;
};

// Runs the model over `tokens`. Optionally stops after block `stop_after` and returns the residual.
Eigen::MatrixXd run(const ToyLmConfig& cfg, const TransformerParams& p, const std::vector<int>& tokens,
                    const ResidualHook* hook, ForwardCache* cache, int stop_after = -1) {
    const auto T = static_cast<Eigen::Index>(tokens.size());
    if (T == 0) throw DomainError("forward pass over an empty token sequence");
    if (T > cfg.context_len)
        throw DomainError("sequence of " + std::to_string(T) + " tokens exceeds context length " +
                          std::to_string(cfg.context_len));
    const Eigen::Index D = cfg.d_model;
    const Eigen::Index head_dim = D / cfg.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Eigen::MatrixXd x(T, D);
    for (Eigen::Index t = 0; t < T; ++t) {
        const int tok = tokens[static_cast<std::size_t>(t)];
        if (tok < 0 || tok >= cfg.vocab) throw DomainError("token id " + std::to_string(tok) + " out of range");
        x.row(t) = p.token_embedding.row(tok) + p.position_embedding.row(t);
    }
    if (cache) {
        cache->tokens = tokens;
        cache->blocks.assign(p.blocks.size(), {});
    }

    for (std::size_t l = 0; l < p.blocks.size(); ++l) {
        const auto& b = p.blocks[l];
        BlockCache local;
        BlockCache& c = cache ? cache->blocks[l] : local;

        c.attn_in = layer_norm(x, b.ln1_gain, b.ln1_bias, &c.ln1);
        c.qkv = c.attn_in * b.w_qkv;
        c.qkv.rowwise() += b.b_qkv.transpose();
        c.heads.resize(T, D);
        c.probs.resize(static_cast<std::size_t>(cfg.n_heads));
        for (int h = 0; h < cfg.n_heads; ++h) {
            const auto q = c.qkv.middleCols(h * head_dim, head_dim);
            const auto k = c.qkv.middleCols(D + h * head_dim, head_dim);
            const auto v = c.qkv.middleCols(2 * D + h * head_dim, head_dim);
            Eigen::MatrixXd scores = scale * (q * k.transpose());
            auto& probs = c.probs[static_cast<std::size_t>(h)];
            probs = Eigen::MatrixXd::Zero(T, T);
            for (Eigen::Index i = 0; i < T; ++i) {
                const double m = scores.row(i).head(i + 1).maxCoeff();
                double sum = 0.0;
                for (Eigen::Index j = 0; j <= i; ++j) {
                    probs(i, j) = std::exp(scores(i, j) - m);
                    sum += probs(i, j);
                }
                probs.row(i).head(i + 1) /= sum;
            }
            c.heads.middleCols(h * head_dim, head_dim) = probs * v;
        }
        Eigen::MatrixXd attn_out = c.heads * b.w_out;
        attn_out.rowwise() += b.b_out.transpose();
        x += attn_out;

        c.mlp_in = layer_norm(x, b.ln2_gain, b.ln2_bias, &c.ln2);
        c.fc_pre = c.mlp_in * b.w_fc;
        c.fc_pre.rowwise() += b.b_fc.transpose();
        c.fc_act = c.fc_pre.unaryExpr([](double v) { return gelu(v); });
        Eigen::MatrixXd mlp_out = c.fc_act * b.w_proj;
        mlp_out.rowwise() += b.b_proj.transpose();
        x += mlp_out;

        if (static_cast<int>(l) == cfg.hook_layer && hook && *hook) (*hook)(x);
        if (static_cast<int>(l) == stop_after) return x;
    }

    LayerNormCache lnf_local;
    Eigen::MatrixXd f = layer_norm(x, p.lnf_gain, p.lnf_bias, cache ? &cache->lnf : &lnf_local);
    Eigen::MatrixXd logits = f * p.unembedding;
    if (cache) cache->final_norm = std::move(f);
    return logits;
}

void backward(const ToyLmConfig& cfg, const TransformerParams& p, const ForwardCache& cache,
              const Eigen::MatrixXd& d_logits, TransformerParams& g) {
    const Eigen::Index T = d_logits.rows();
    const Eigen::Index D = cfg.d_model;
    const Eigen::Index head_dim = D / cfg.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    g.unembedding.noalias() += cache.final_norm.transpose() * d_logits;
    Eigen::MatrixXd dx = layer_norm_backward(d_logits * p.unembedding.transpose(), cache.lnf, p.lnf_gain, g.lnf_gain,
                                             g.lnf_bias);

    for (std::size_t l = p.blocks.size(); l-- > 0;) {
        const auto& b = p.blocks[l];
        auto& gb = g.blocks[l];
        const auto& c = cache.blocks[l];

        // MLP branch.
        gb.w_proj.noalias() += c.fc_act.transpose() * dx;
        gb.b_proj += dx.colwise().sum().transpose();
        Eigen::MatrixXd d_fc = dx * b.w_proj.transpose();
        d_fc.array() *= c.fc_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
        gb.w_fc.noalias() += c.mlp_in.transpose() * d_fc;
        gb.b_fc += d_fc.colwise().sum().transpose();
        dx += layer_norm_backward(d_fc * b.w_fc.transpose(), c.ln2, b.ln2_gain, gb.ln2_gain, gb.ln2_bias);

        // Attention branch.
        gb.w_out.noalias() += c.heads.transpose() * dx;
        gb.b_out += dx.colwise().sum().transpose();
        const Eigen::MatrixXd d_heads = dx * b.w_out.transpose();
        Eigen::MatrixXd d_qkv(T, 3 * D);
        for (int h = 0; h < cfg.n_heads; ++h) {
            const auto q = c.qkv.middleCols(h * head_dim, head_dim);
            const auto k = c.qkv.middleCols(D + h * head_dim, head_dim);
            const auto v = c.qkv.middleCols(2 * D + h * head_dim, head_dim);
            const auto& probs = c.probs[static_cast<std::size_t>(h)];
            const auto d_out = d_heads.middleCols(h * head_dim, head_dim);
            d_qkv.middleCols(2 * D + h * head_dim, head_dim) = probs.transpose() * d_out;
            const Eigen::MatrixXd d_probs = d_out * v.transpose();
            Eigen::MatrixXd d_scores = probs.array() * d_probs.array();
            const Eigen::VectorXd row_dot = d_scores.rowwise().sum();
            d_scores -= (probs.array().colwise() * row_dot.array()).matrix();
            d_qkv.middleCols(h * head_dim, head_dim) = scale * (d_scores * k);
            d_qkv.middleCols(D + h * head_dim, head_dim) = scale * (d_scores.transpose() * q);
        }
        gb.w_qkv.noalias() += c.attn_in.transpose() * d_qkv;
        gb.b_qkv += d_qkv.colwise().sum().transpose();
        dx += layer_norm_backward(d_qkv * b.w_qkv.transpose(), c.ln1, b.ln1_gain, gb.ln1_gain, gb.ln1_bias);
    }

    for (Eigen::Index t = 0; t < T; ++t) {
        g.token_embedding.row(cache.tokens[static_cast<std::size_t>(t)]) += dx.row(t);
        g.position_embedding.row(t) += dx.row(t);
    }
}

}  // namespace

void ToyLmConfig::validate() const {
    if (vocab < 1) throw ConfigError("vocab", "must be >= 1");
    if (d_model < 1) throw ConfigError("d_model", "must be >= 1");
    if (n_layers < 1) throw ConfigError("n_layers", "must be >= 1");
    if (n_heads < 1 || d_model % n_heads != 0) throw ConfigError("n_heads", "must divide d_model");
    if (mlp_hidden < 1) throw ConfigError("mlp_hidden", "must be >= 1");
    if (context_len < 2) throw ConfigError("context_len", "must be >= 2");
    if (hook_layer < 0 || hook_layer >= n_layers) throw ConfigError("hook_layer", "must be in [0, n_layers)");
}

TransformerParams TransformerParams::zeros(const ToyLmConfig& c) {
    TransformerParams p;
    const Eigen::Index D = c.d_model, F = c.mlp_hidden;
    p.token_embedding = Eigen::MatrixXd::Zero(c.vocab, D);
    p.position_embedding = Eigen::MatrixXd::Zero(c.context_len, D);
    for (int l = 0; l < c.n_layers; ++l) {
        TransformerBlock b;
        b.ln1_gain = Eigen::VectorXd::Zero(D);
        b.ln1_bias = Eigen::VectorXd::Zero(D);
        b.w_qkv = Eigen::MatrixXd::Zero(D, 3 * D);
        b.b_qkv = Eigen::VectorXd::Zero(3 * D);
        b.w_out = Eigen::MatrixXd::Zero(D, D);
        b.b_out = Eigen::VectorXd::Zero(D);
        b.ln2_gain = Eigen::VectorXd::Zero(D);
        b.ln2_bias = Eigen::VectorXd::Zero(D);
        b.w_fc = Eigen::MatrixXd::Zero(D, F);
        b.b_fc = Eigen::VectorXd::Zero(F);
        b.w_proj = Eigen::MatrixXd::Zero(F, D);
        b.b_proj = Eigen::VectorXd::Zero(D);
        p.blocks.push_back(std::move(b));
    }
    p.lnf_gain = Eigen::VectorXd::Zero(D);
    p.lnf_bias = Eigen::VectorXd::Zero(D);
    p.unembedding = Eigen::MatrixXd::Zero(D, c.vocab);
    return p;
}

void TransformerParams::for_each(const std::function<void(const char*, double*, Eigen::Index)>& fn) {
    auto visit = [&](const char* name, auto& tensor) { fn(name, tensor.data(), tensor.size()); };
    visit("token_embedding", token_embedding);
    visit("position_embedding", position_embedding);
    for (auto& b : blocks) {
        visit("ln1_gain", b.ln1_gain);
        visit("ln1_bias", b.ln1_bias);
        visit("w_qkv", b.w_qkv);
        visit("b_qkv", b.b_qkv);
        visit("w_out", b.w_out);
        visit("b_out", b.b_out);
        visit("ln2_gain", b.ln2_gain);
        visit("ln2_bias", b.ln2_bias);
        visit("w_fc", b.w_fc);
        visit("b_fc", b.b_fc);
        visit("w_proj", b.w_proj);
        visit("b_proj", b.b_proj);
    }
    visit("lnf_gain", lnf_gain);
    visit("lnf_bias", lnf_bias);
    visit("unembedding", unembedding);
}

void TransformerParams::for_each(const std::function<void(const char*, const double*, Eigen::Index)>& fn) const {
    const_cast<TransformerParams*>(this)->for_each(
        [&](const char* name, double* data, Eigen::Index size) { fn(name, data, size); });
}

Eigen::Index TransformerParams::parameter_count() const {
    Eigen::Index n = 0;
    for_each([&](const char*, const double*, Eigen::Index size) { n += size; });
    return n;
}

ToyLm::ToyLm(ToyLmConfig config, Vocabulary vocab) : config_(config), vocab_(std::move(vocab)) {
    config_.vocab = static_cast<int>(vocab_.size());
    config_.validate();
    params_ = TransformerParams::zeros(config_);
}

ToyLm ToyLm::initialise(ToyLmConfig config, Vocabulary vocab) {
    ToyLm lm(config, std::move(vocab));
    std::mt19937_64 rng(lm.config_.seed);
    std::normal_distribution<double> normal(0.0, 0.02);
    lm.params_.for_each([&](const char* name, double* data, Eigen::Index size) {
        const std::string n = name;
        const bool gain = n.find("gain") != std::string::npos;
        const bool bias = n.rfind("b_", 0) == 0 || n.find("bias") != std::string::npos;
        for (Eigen::Index i = 0; i < size; ++i) data[i] = gain ? 1.0 : bias ? 0.0 : normal(rng);
    });
    return lm;
}

Eigen::MatrixXd ToyLm::forward(const std::vector<int>& tokens, const ResidualHook* hook) const {
    return run(config_, params_, tokens, hook, nullptr);
}

Eigen::MatrixXd ToyLm::hook_residuals(const std::vector<int>& tokens) const {
    return run(config_, params_, tokens, nullptr, nullptr, config_.hook_layer);
}

double ToyLm::loss_and_gradient(const std::vector<int>& tokens, const std::vector<int>& targets,
                                TransformerParams* grad) const {
    if (targets.size() != tokens.size()) throw DomainError("targets and tokens differ in length");
    ForwardCache cache;
    const Eigen::MatrixXd logits = run(config_, params_, tokens, nullptr, grad ? &cache : nullptr);
    const Eigen::Index T = logits.rows();
    Eigen::MatrixXd d_logits(T, logits.cols());
    double total = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        const int target = targets[static_cast<std::size_t>(t)];
        if (target < 0 || target >= config_.vocab) throw DomainError("target id out of range");
        const double m = logits.row(t).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(t).array() - m).exp().matrix();
        const double sum = e.sum();
        total += std::log(sum) + m - logits(t, target);
        d_logits.row(t) = e / sum;
        d_logits(t, target) -= 1.0;
    }
    d_logits /= static_cast<double>(T);
    if (grad) backward(config_, params_, cache, d_logits, *grad);
    return total / static_cast<double>(T);
}

void ToyLm::round_to_float() {
    params_.for_each([](const char*, double* data, Eigen::Index size) {
        for (Eigen::Index i = 0; i < size; ++i) data[i] = static_cast<float>(data[i]);
    });
}

bool operator==(const ToyLm& a, const ToyLm& b) {
    const auto& ca = a.config_;
    const auto& cb = b.config_;
    if (ca.vocab != cb.vocab || ca.d_model != cb.d_model || ca.n_layers != cb.n_layers || ca.n_heads != cb.n_heads ||
        ca.mlp_hidden != cb.mlp_hidden || ca.context_len != cb.context_len || ca.hook_layer != cb.hook_layer ||
        ca.seed != cb.seed || a.vocab_.symbols() != b.vocab_.symbols())
        return false;
    std::vector<double> flat_a, flat_b;
    a.params_.for_each([&](const char*, const double* d, Eigen::Index n) { flat_a.insert(flat_a.end(), d, d + n); });
    b.params_.for_each([&](const char*, const double* d, Eigen::Index n) { flat_b.insert(flat_b.end(), d, d + n); });
    return flat_a == flat_b;
}

}  // namespace subguard
