#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subguard/intervene.hpp"
#include "subguard/sae.hpp"

namespace subguard {

/// Character vocabulary. Token ids follow ascending code point order.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::u32string symbols);
    static Vocabulary from_text(const std::string& text);

    std::size_t size() const noexcept { return symbols_.size(); }
    const std::u32string& symbols() const noexcept { return symbols_; }

    /// Throws TokenizationError on a character outside the vocabulary.
    std::vector<int> encode(const std::string& text) const;
    std::string decode(const std::vector<int>& tokens) const;
    std::string symbol(int token) const;

private:
    std::u32string symbols_;
};

struct ToyLmConfig {
    int vocab = 0;  // filled from the training corpus
    int d_model = 64;
    int n_layers = 2;
    int n_heads = 4;
    int mlp_hidden = 256;
    int context_len = 64;
    int hook_layer = 0;  // residual stream after this block is the intervention point
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Pre-norm decoder block parameters.
struct TransformerBlock {
    Eigen::VectorXd ln1_gain, ln1_bias;
    Eigen::MatrixXd w_qkv;  // d x 3d
    Eigen::VectorXd b_qkv;
    Eigen::MatrixXd w_out;  // d x d
    Eigen::VectorXd b_out;
    Eigen::VectorXd ln2_gain, ln2_bias;
    Eigen::MatrixXd w_fc;  // d x mlp_hidden
    Eigen::VectorXd b_fc;
    Eigen::MatrixXd w_proj;  // mlp_hidden x d
    Eigen::VectorXd b_proj;
};

struct TransformerParams {
    Eigen::MatrixXd token_embedding;     // vocab x d
    Eigen::MatrixXd position_embedding;  // context_len x d
    std::vector<TransformerBlock> blocks;
    Eigen::VectorXd lnf_gain, lnf_bias;
    Eigen::MatrixXd unembedding;  // d x vocab

    static TransformerParams zeros(const ToyLmConfig& config);

    /// Visits every tensor as a flat array in a fixed order (the checkpoint order).
    void for_each(const std::function<void(const char* name, double* data, Eigen::Index size)>& fn);
    void for_each(const std::function<void(const char* name, const double* data, Eigen::Index size)>& fn) const;
    Eigen::Index parameter_count() const;
};

/// Replaces rows of the hooked residual stream in place. Row t holds window position t.
using ResidualHook = std::function<void(Eigen::MatrixXd& residual)>;

class ToyLm {
public:
    ToyLm(ToyLmConfig config, Vocabulary vocab);
    /// Random init: N(0, 0.02) weights, unit LayerNorm gains, zero biases.
    static ToyLm initialise(ToyLmConfig config, Vocabulary vocab);

    const ToyLmConfig& config() const noexcept { return config_; }
    const Vocabulary& vocab() const noexcept { return vocab_; }
    TransformerParams& params() noexcept { return params_; }
    const TransformerParams& params() const noexcept { return params_; }

    /// Logits for every position of `tokens` (length <= context_len), one row per position.
    /// `hook`, when set, edits the residual stream after block `hook_layer`.
    Eigen::MatrixXd forward(const std::vector<int>& tokens, const ResidualHook* hook = nullptr) const;

    /// Residual stream after block `hook_layer`, one row per position.
    Eigen::MatrixXd hook_residuals(const std::vector<int>& tokens) const;

    /// Mean next-token cross-entropy of `targets[t]` given `tokens[0..t]`. Adds its gradient to `grad` when
    /// non-null.
    double loss_and_gradient(const std::vector<int>& tokens, const std::vector<int>& targets,
                             TransformerParams* grad) const;

    /// Rounds every parameter to binary32, the checkpoint precision.
    void round_to_float();

    friend bool operator==(const ToyLm& a, const ToyLm& b);

private:
    ToyLmConfig config_;
    Vocabulary vocab_;
    TransformerParams params_;
};

/// Intervention applied during decoding on the hook_layer residual.
struct DecodeHook {
    const SaeModel* sae = nullptr;
    InterventionConfig config;
    /// Also intervene on prompt positions; by default only the positions that produce generated tokens
    /// (the last prompt token onwards) are edited.
    bool include_prompt = false;
};

struct ToyLmTrainConfig {
    int steps = 1500;        // optimiser steps before the first memorisation check
    int max_steps = 6000;    // total budget
    int check_every = 500;   // steps between later checks
    int batch_size = 16;
    double learning_rate = 3e-3;  // Adam
    double grad_clip = 1.0;       // global norm
    double min_similarity = 0.8;  // per-passage memorisation bar

    void validate() const;
};

struct MemorizationReport {
    std::vector<double> similarity;  // per protected passage
    int steps = 0;
    double final_loss = 0.0;
};

/// First half of a passage (by characters) is the prompt, the second half the reference continuation.
std::pair<std::string, std::string> split_passage(const std::string& passage);

/// Trains on random context windows of `corpus` until greedy decoding from each protected passage's first half
/// reproduces its second half (normalised Levenshtein similarity >= min_similarity), or throws TrainingError.
ToyLm train_toy_lm(const std::string& corpus, const std::vector<std::string>& protected_passages,
                   const ToyLmConfig& config, const ToyLmTrainConfig& train = {},
                   MemorizationReport* report = nullptr);

/// Per-passage memorisation similarity under greedy decoding.
std::vector<double> memorization_similarity(const ToyLm& lm, const std::vector<std::string>& passages,
                                            const std::optional<DecodeHook>& hook = std::nullopt);

/// Deterministic argmax decoding (ties go to the smaller token id). Returns the continuation only.
/// Windows slide once the sequence exceeds context_len.
std::string decode_greedy(const ToyLm& lm, const std::string& prompt, int max_tokens,
                          const std::optional<DecodeHook>& hook = std::nullopt);

struct LogitLensEntry {
    std::string token;
    int token_id = 0;
    double logit = 0.0;
};

struct LogitLensResult {
    std::vector<LogitLensEntry> promoted;    // largest first
    std::vector<LogitLensEntry> suppressed;  // smallest first
};

/// Projects the SAE decoder column `feature` through the unembedding: logit(t) = (W_U^T v)_t.
/// Ties are ordered by token id.
LogitLensResult logit_lens(const ToyLm& lm, const SaeModel& sae, std::size_t feature, std::size_t top_m);

std::vector<std::uint8_t> encode_toy_lm(const ToyLm& lm);
ToyLm decode_toy_lm(const std::vector<std::uint8_t>& bytes);
void save_toy_lm(const ToyLm& lm, const std::filesystem::path& path);
ToyLm load_toy_lm(const std::filesystem::path& path);

/// Blank-line separated blocks, trimmed of surrounding newlines.
std::vector<std::string> parse_passages(const std::string& text);

/// Deterministic filler prose built from a fixed word list. Never contains digits or quotes.
std::string synthetic_filler(std::size_t n_chars, std::uint64_t seed);

/// Interleaves `repeats` copies of each passage with filler chunks, separated by blank lines.
std::string build_corpus(const std::vector<std::string>& passages, const std::string& filler, int repeats,
                         std::uint64_t seed);

}  // namespace subguard
