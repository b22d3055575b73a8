#include "subguard/sae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "subguard/errors.hpp"

namespace subguard {

namespace {

constexpr char kCheckpointMagic[4] = {'S', 'C', 'P', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

void check_input(const SaeModel& model, const Eigen::VectorXd& h) {
    if (h.size() != model.input_dim())
        throw DomainError("input has dimension " + std::to_string(h.size()) + ", model expects " +
                          std::to_string(model.input_dim()));
}

void check_code(const SaeModel& model, const Eigen::VectorXd& z) {
    if (z.size() != model.dict_size())
        throw DomainError("code has dimension " + std::to_string(z.size()) + ", model expects " +
                          std::to_string(model.dict_size()));
}

}  // namespace

SaeModel SaeModel::zeros(Eigen::Index d, Eigen::Index k, double tau) {
    SaeModel m;
    m.encoder_weight = Eigen::MatrixXd::Zero(k, d);
    m.encoder_bias = Eigen::VectorXd::Zero(k);
    m.decoder_weight = Eigen::MatrixXd::Zero(d, k);
    m.decoder_bias = Eigen::VectorXd::Zero(d);
    m.tau = tau;
    return m;
}

void SaeModel::validate() const {
    const auto k = encoder_weight.rows();
    const auto d = encoder_weight.cols();
    if (d == 0 || k == 0) throw DomainError("SAE with empty dimensions");
    if (encoder_bias.size() != k || decoder_weight.rows() != d || decoder_weight.cols() != k ||
        decoder_bias.size() != d)
        throw DomainError("SAE parameter shapes disagree");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("SAE tau must be a positive finite number");
    if (!encoder_weight.allFinite() || !encoder_bias.allFinite() || !decoder_weight.allFinite() ||
        !decoder_bias.allFinite())
        throw DomainError("SAE has non-finite parameters");
}

SaeGradients SaeGradients::zeros_like(const SaeModel& model) {
    return {Eigen::MatrixXd::Zero(model.encoder_weight.rows(), model.encoder_weight.cols()),
            Eigen::VectorXd::Zero(model.encoder_bias.size()),
            Eigen::MatrixXd::Zero(model.decoder_weight.rows(), model.decoder_weight.cols()),
            Eigen::VectorXd::Zero(model.decoder_bias.size())};
}

Eigen::VectorXd pre_activation(const SaeModel& model, const Eigen::VectorXd& h) {
    check_input(model, h);
    return model.encoder_weight * h + model.encoder_bias;
}

Eigen::VectorXd encode(const SaeModel& model, const Eigen::VectorXd& h) {
    const double tau = model.tau;
    return pre_activation(model, h).unaryExpr([tau](double x) { return jump_relu(x, tau); });
}

Eigen::VectorXd decode(const SaeModel& model, const Eigen::VectorXd& z) {
    check_code(model, z);
    return model.decoder_weight * z + model.decoder_bias;
}

Eigen::MatrixXd encode_sequence(const SaeModel& model, const DenseSequence& sequence) {
    if (sequence.cols() != model.input_dim())
        throw DomainError("sequence has dimension " + std::to_string(sequence.cols()) + ", model expects " +
                          std::to_string(model.input_dim()));
    const double tau = model.tau;
    Eigen::MatrixXd pre = sequence.cast<double>() * model.encoder_weight.transpose();
    pre.rowwise() += model.encoder_bias.transpose();
    return pre.unaryExpr([tau](double x) { return jump_relu(x, tau); });
}

double loss(const SaeModel& model, const Eigen::VectorXd& h, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
    const Eigen::VectorXd z = encode(model, h);
    const Eigen::VectorXd residual = decode(model, z) - h;
    return residual.squaredNorm() + lambda * z.lpNorm<1>();
}

double accumulate_loss_gradient(const SaeModel& model, const Eigen::VectorXd& h, double lambda,
                                SaeGradients& grad) {
    const Eigen::VectorXd pre = pre_activation(model, h);
    Eigen::VectorXd z(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) z[i] = jump_relu(pre[i], model.tau);
    const Eigen::VectorXd residual = model.decoder_weight * z + model.decoder_bias - h;

    const Eigen::VectorXd d_recon = 2.0 * residual;
    grad.decoder_weight.noalias() += d_recon * z.transpose();
    grad.decoder_bias += d_recon;

    // Active codes are > tau > 0, so d|z|/dz = 1 wherever the gate is open.
    Eigen::VectorXd d_pre = model.decoder_weight.transpose() * d_recon;
    for (Eigen::Index i = 0; i < pre.size(); ++i) d_pre[i] = pre[i] > model.tau ? d_pre[i] + lambda : 0.0;
    grad.encoder_weight.noalias() += d_pre * h.transpose();
    grad.encoder_bias += d_pre;

    return residual.squaredNorm() + lambda * z.lpNorm<1>();
}

std::vector<PooledVector> pool_codes(const SaeModel& model, const ActivationDataset& dataset) {
    std::vector<PooledVector> pooled;
    pooled.reserve(dataset.records.size());
    for (const auto& r : dataset.records) pooled.push_back({r.label, max_pool(encode_sequence(model, r.vectors))});
    return pooled;
}

std::vector<std::uint8_t> encode_checkpoint(const SaeModel& model) {
    model.validate();
    detail::ByteWriter w;
    w.put_bytes(std::string_view(kCheckpointMagic, 4));
    w.put_u32(kCheckpointVersion);
    w.put_u32(static_cast<std::uint32_t>(model.input_dim()));
    w.put_u32(static_cast<std::uint32_t>(model.dict_size()));
    w.put_f32(static_cast<float>(model.tau));
    // Matrices are written row-major.
    for (Eigen::Index i = 0; i < model.encoder_weight.rows(); ++i)
        for (Eigen::Index j = 0; j < model.encoder_weight.cols(); ++j)
            w.put_f32(static_cast<float>(model.encoder_weight(i, j)));
    for (Eigen::Index i = 0; i < model.encoder_bias.size(); ++i) w.put_f32(static_cast<float>(model.encoder_bias[i]));
    for (Eigen::Index i = 0; i < model.decoder_weight.rows(); ++i)
        for (Eigen::Index j = 0; j < model.decoder_weight.cols(); ++j)
            w.put_f32(static_cast<float>(model.decoder_weight(i, j)));
    for (Eigen::Index i = 0; i < model.decoder_bias.size(); ++i) w.put_f32(static_cast<float>(model.decoder_bias[i]));
    return w.bytes();
}

SaeModel decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes);
    if (r.remaining() < 4 || r.get_bytes(4, "magic") != std::string_view(kCheckpointMagic, 4))
        throw FormatError("not an SAE checkpoint (bad magic)");
    const auto version = r.get_u32("version");
    if (version != kCheckpointVersion) throw FormatError("unsupported SAE checkpoint version " + std::to_string(version));
    const auto d = r.get_u32("d");
    const auto k = r.get_u32("k");
    if (d == 0 || k == 0) throw FormatError("SAE checkpoint with zero dimension");
    const double tau = r.get_f32("tau");
    const std::uint64_t expected = 4ULL * (2ULL * d * k + d + k);
    if (r.remaining() != expected)
        throw CorruptionError("SAE checkpoint payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                                  std::to_string(expected),
                              r.offset());
    SaeModel m = SaeModel::zeros(d, k, tau);
    for (Eigen::Index i = 0; i < m.encoder_weight.rows(); ++i)
        for (Eigen::Index j = 0; j < m.encoder_weight.cols(); ++j) m.encoder_weight(i, j) = r.get_f32("W_enc");
    for (Eigen::Index i = 0; i < m.encoder_bias.size(); ++i) m.encoder_bias[i] = r.get_f32("b_e");
    for (Eigen::Index i = 0; i < m.decoder_weight.rows(); ++i)
        for (Eigen::Index j = 0; j < m.decoder_weight.cols(); ++j) m.decoder_weight(i, j) = r.get_f32("W_dec");
    for (Eigen::Index i = 0; i < m.decoder_bias.size(); ++i) m.decoder_bias[i] = r.get_f32("b_d");
    try {
        m.validate();
    } catch (const DomainError& e) {
        throw FormatError(std::string("invalid SAE checkpoint: ") + e.what());
    }
    return m;
}

void save_checkpoint(const SaeModel& model, const std::filesystem::path& path) {
    detail::write_file(path, encode_checkpoint(model));
}

SaeModel load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(detail::read_file(path)); }

std::string checkpoint_fingerprint(const SaeModel& model) {
    return detail::hex64(detail::fnv1a64(encode_checkpoint(model)));
}

}  // namespace subguard
