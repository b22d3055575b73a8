#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "subguard/errors.hpp"
#include "subguard/sae.hpp"

namespace subguard {

namespace {

Eigen::MatrixXd gather_tokens(const ActivationDataset& dataset) {
    Eigen::Index total = 0;
    for (const auto& r : dataset.records) total += r.vectors.rows();
    Eigen::MatrixXd tokens(dataset.d, total);
    Eigen::Index col = 0;
    for (const auto& r : dataset.records) {
        tokens.middleCols(col, r.vectors.rows()) = r.vectors.cast<double>().transpose();
        col += r.vectors.rows();
    }
    return tokens;
}

// Sum of per-column losses for a d x B block.
double batch_loss(const SaeModel& model, const Eigen::MatrixXd& x, double lambda) {
    Eigen::MatrixXd pre = model.encoder_weight * x;
    pre.colwise() += model.encoder_bias;
    const double tau = model.tau;
    const Eigen::MatrixXd z = pre.unaryExpr([tau](double v) { return jump_relu(v, tau); });
    Eigen::MatrixXd residual = model.decoder_weight * z - x;
    residual.colwise() += model.decoder_bias;
    return residual.squaredNorm() + lambda * z.sum();
}

double dataset_loss(const SaeModel& model, const Eigen::MatrixXd& tokens, double lambda) {
    constexpr Eigen::Index kChunk = 1024;
    double total = 0.0;
    for (Eigen::Index start = 0; start < tokens.cols(); start += kChunk) {
        const auto width = std::min(kChunk, tokens.cols() - start);
        total += batch_loss(model, tokens.middleCols(start, width), lambda);
    }
    return total / static_cast<double>(tokens.cols());
}

void normalize_columns(Eigen::MatrixXd& w) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const double norm = w.col(j).norm();
        if (norm > 0.0) w.col(j) /= norm;
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda", "must be a finite value >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate", "must be a finite value > 0");
    if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
}

SaeModel init_model(Eigen::Index d, Eigen::Index k, double tau, std::uint64_t seed) {
    if (d < 1 || k < 1) throw DomainError("SAE dimensions must be >= 1");
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    SaeModel m = SaeModel::zeros(d, k, tau);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m.encoder_weight(i, j) = uniform(rng);
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = 0; i < d; ++i) m.decoder_weight(i, j) = uniform(rng);
    m.validate();
    return m;
}

double mean_loss(const SaeModel& model, const ActivationDataset& dataset, double lambda) {
    if (dataset.records.empty()) throw DomainError("mean_loss over an empty dataset");
    return dataset_loss(model, gather_tokens(dataset), lambda);
}

SaeModel train(const ActivationDataset& dataset, Eigen::Index k, double tau, const TrainConfig& config,
               TrainHistory* history) {
    config.validate();
    if (dataset.records.empty()) throw DomainError("cannot train an SAE on an empty dataset");
    return train_from(init_model(dataset.d, k, tau, config.seed), dataset, config, history);
}

SaeModel train_from(SaeModel model, const ActivationDataset& dataset, const TrainConfig& config,
                    TrainHistory* history) {
    config.validate();
    model.validate();
    if (dataset.records.empty()) throw DomainError("cannot train an SAE on an empty dataset");
    dataset.validate();
    if (dataset.d != model.input_dim()) throw DomainError("dataset dimension does not match the SAE");

    const Eigen::MatrixXd tokens = gather_tokens(dataset);
    const Eigen::Index n = tokens.cols();
    const double lambda = config.lambda;
    const double tau = model.tau;

    if (config.normalize_decoder) normalize_columns(model.decoder_weight);
    if (history) {
        history->initial_loss = dataset_loss(model, tokens, lambda);
        history->epoch_loss.clear();
    }

    // The shuffle stream is separate from the init stream so that train_from is reproducible on its own.
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    Eigen::MatrixXd x;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            const Eigen::Index b = std::min<Eigen::Index>(config.batch_size, n - start);
            x.resize(tokens.rows(), b);
            for (Eigen::Index c = 0; c < b; ++c) x.col(c) = tokens.col(order[static_cast<std::size_t>(start + c)]);

            Eigen::MatrixXd pre = model.encoder_weight * x;
            pre.colwise() += model.encoder_bias;
            const Eigen::MatrixXd z = pre.unaryExpr([tau](double v) { return jump_relu(v, tau); });
            Eigen::MatrixXd residual = model.decoder_weight * z - x;
            residual.colwise() += model.decoder_bias;

            const double batch = residual.squaredNorm() + lambda * z.sum();
            if (!std::isfinite(batch)) throw TrainingError("SAE loss became non-finite", epoch);

            const double scale = 2.0 / static_cast<double>(b);
            const Eigen::MatrixXd d_recon = scale * residual;
            Eigen::MatrixXd d_pre = model.decoder_weight.transpose() * d_recon;
            const double l1 = lambda / static_cast<double>(b);
            for (Eigen::Index j = 0; j < d_pre.cols(); ++j)
                for (Eigen::Index i = 0; i < d_pre.rows(); ++i)
                    d_pre(i, j) = pre(i, j) > tau ? d_pre(i, j) + l1 : 0.0;

            const double lr = config.learning_rate;
            model.decoder_weight.noalias() -= lr * (d_recon * z.transpose());
            model.decoder_bias.noalias() -= lr * d_recon.rowwise().sum();
            model.encoder_weight.noalias() -= lr * (d_pre * x.transpose());
            model.encoder_bias.noalias() -= lr * d_pre.rowwise().sum();
            if (config.normalize_decoder) normalize_columns(model.decoder_weight);
        }
        const double epoch_loss = dataset_loss(model, tokens, lambda);
        if (!std::isfinite(epoch_loss)) throw TrainingError("SAE loss became non-finite", epoch);
        if (history) history->epoch_loss.push_back(epoch_loss);
    }
    model.validate();
    return model;
}

}  // namespace subguard
