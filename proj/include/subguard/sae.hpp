#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subguard/activations.hpp"

namespace subguard {

/// Activation threshold used when none is given.
inline constexpr double kDefaultTau = 5.0;

/// JumpReLU sparse autoencoder.
///
///   z     = JumpReLU_tau(W_enc h + b_e)
///   h_hat = W_dec z + b_d
///
/// JumpReLU passes x through when x > tau and returns 0 otherwise (x == tau maps to 0).
struct SaeModel {
    Eigen::MatrixXd encoder_weight;  // k x d
    Eigen::VectorXd encoder_bias;    // k
    Eigen::MatrixXd decoder_weight;  // d x k
    Eigen::VectorXd decoder_bias;    // d
    double tau = kDefaultTau;

    static SaeModel zeros(Eigen::Index d, Eigen::Index k, double tau = kDefaultTau);

    Eigen::Index input_dim() const noexcept { return decoder_weight.rows(); }
    Eigen::Index dict_size() const noexcept { return encoder_weight.rows(); }

    /// Throws DomainError if shapes disagree, tau <= 0 or a parameter is non-finite.
    void validate() const;
};

/// Parameter-shaped container for loss gradients.
struct SaeGradients {
    Eigen::MatrixXd encoder_weight;
    Eigen::VectorXd encoder_bias;
    Eigen::MatrixXd decoder_weight;
    Eigen::VectorXd decoder_bias;

    static SaeGradients zeros_like(const SaeModel& model);
};

inline double jump_relu(double x, double tau) noexcept { return x > tau ? x : 0.0; }

Eigen::VectorXd pre_activation(const SaeModel& model, const Eigen::VectorXd& h);
Eigen::VectorXd encode(const SaeModel& model, const Eigen::VectorXd& h);
Eigen::VectorXd decode(const SaeModel& model, const Eigen::VectorXd& z);

/// Codes for every token of `sequence`, one row per token (tokens x k).
Eigen::MatrixXd encode_sequence(const SaeModel& model, const DenseSequence& sequence);

/// ||decode(encode(h)) - h||^2 + lambda * ||encode(h)||_1
double loss(const SaeModel& model, const Eigen::VectorXd& h, double lambda);

/// Adds the gradient of `loss(model, h, lambda)` to `grad` and returns the loss.
/// The JumpReLU derivative is taken as H(x - tau); the Dirac term at the jump is dropped.
double accumulate_loss_gradient(const SaeModel& model, const Eigen::VectorXd& h, double lambda, SaeGradients& grad);

struct TrainConfig {
    double lambda = 1e-3;
    double learning_rate = 3e-3;
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 0;
    bool normalize_decoder = false;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct TrainHistory {
    double initial_loss = 0.0;       // mean per-token loss before the first step
    std::vector<double> epoch_loss;  // mean per-token loss after each epoch
};

/// Uniform [-1/sqrt(d), 1/sqrt(d)] weights, zero biases.
SaeModel init_model(Eigen::Index d, Eigen::Index k, double tau, std::uint64_t seed);

/// Mean per-token loss over every token vector of `dataset`.
double mean_loss(const SaeModel& model, const ActivationDataset& dataset, double lambda);

/// Minibatch SGD on every token vector of `dataset`. Deterministic given `config.seed`.
/// Throws DomainError for an empty dataset and TrainingError if the loss becomes non-finite.
SaeModel train(const ActivationDataset& dataset, Eigen::Index k, double tau, const TrainConfig& config,
               TrainHistory* history = nullptr);

/// Same as `train` but starting from an explicit model.
SaeModel train_from(SaeModel model, const ActivationDataset& dataset, const TrainConfig& config,
                    TrainHistory* history = nullptr);

/// Encode each record and max-pool over its tokens.
std::vector<PooledVector> pool_codes(const SaeModel& model, const ActivationDataset& dataset);

std::vector<std::uint8_t> encode_checkpoint(const SaeModel& model);
SaeModel decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const SaeModel& model, const std::filesystem::path& path);
SaeModel load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_fingerprint(const SaeModel& model);

}  // namespace subguard
