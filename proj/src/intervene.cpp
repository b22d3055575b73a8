#include "subguard/intervene.hpp"

#include <cmath>

#include "subguard/errors.hpp"

namespace subguard {

namespace {

void check_dims(const Eigen::VectorXd& z, const SubspaceSpec& spec) {
    if (static_cast<std::size_t>(z.size()) != spec.k)
        throw DomainError("code has dimension " + std::to_string(z.size()) + ", subspace expects " +
                          std::to_string(spec.k));
}

}  // namespace

const char* to_string(InterventionMode mode) noexcept {
    switch (mode) {
        case InterventionMode::Clamp: return "clamp";
        case InterventionMode::Amplify: return "amplify";
        case InterventionMode::Passthrough: break;
    }
    return "passthrough";
}

InterventionMode parse_mode(const std::string& text) {
    if (text == "passthrough") return InterventionMode::Passthrough;
    if (text == "clamp") return InterventionMode::Clamp;
    if (text == "amplify") return InterventionMode::Amplify;
    throw DomainError("unknown intervention mode '" + text + "'");
}

void InterventionConfig::validate() const {
    if (mode == InterventionMode::Clamp && !(tau > 0.0 && std::isfinite(tau)))
        throw ConfigError("tau", "must be > 0 in clamp mode");
    if (mode == InterventionMode::Amplify && !(alpha >= 1.0 && std::isfinite(alpha)))
        throw ConfigError("alpha", "must be >= 1 in amplify mode");
    spec.validate();
}

Eigen::VectorXd clamp_code(const Eigen::VectorXd& z, const SubspaceSpec& spec, double tau) {
    check_dims(z, spec);
    if (!(tau > 0.0)) throw DomainError("clamp threshold must be > 0");
    Eigen::VectorXd out = z;
    for (const auto& d : spec.dims) {
        auto& v = out[static_cast<Eigen::Index>(d.index)];
        if (v > tau) v = 0.0;
    }
    return out;
}

Eigen::VectorXd amplify_code(const Eigen::VectorXd& z, const SubspaceSpec& spec, double alpha) {
    check_dims(z, spec);
    if (!(alpha >= 1.0)) throw DomainError("amplification factor must be >= 1");
    Eigen::VectorXd out = z;
    for (const auto& d : spec.dims) out[static_cast<Eigen::Index>(d.index)] *= alpha;
    return out;
}

Eigen::VectorXd intervene_code(const Eigen::VectorXd& z, const InterventionConfig& config) {
    switch (config.mode) {
        case InterventionMode::Clamp: return clamp_code(z, config.spec, config.tau);
        case InterventionMode::Amplify: return amplify_code(z, config.spec, config.alpha);
        case InterventionMode::Passthrough: break;
    }
    return z;
}

Eigen::VectorXd apply_hook(const SaeModel& model, const Eigen::VectorXd& h, const InterventionConfig& config) {
    if (config.mode == InterventionMode::Passthrough) return h;
    if (static_cast<std::size_t>(model.dict_size()) != config.spec.k)
        throw DomainError("subspace k = " + std::to_string(config.spec.k) + " does not match SAE dictionary size " +
                          std::to_string(model.dict_size()));
    const Eigen::VectorXd z = encode(model, h);
    const Eigen::VectorXd changed = intervene_code(z, config);
    Eigen::VectorXd out = h;
    for (const auto& d : config.spec.dims) {
        const auto i = static_cast<Eigen::Index>(d.index);
        const double delta = changed[i] - z[i];
        if (delta != 0.0) out.noalias() += delta * model.decoder_weight.col(i);
    }
    return out;
}

}  // namespace subguard
