#pragma once

#include <Eigen/Core>

#include "subguard/sae.hpp"
#include "subguard/subspace.hpp"

namespace subguard {

enum class InterventionMode { Passthrough, Clamp, Amplify };

const char* to_string(InterventionMode mode) noexcept;
/// Parses "passthrough", "clamp" or "amplify". Throws DomainError otherwise.
InterventionMode parse_mode(const std::string& text);

struct InterventionConfig {
    InterventionMode mode = InterventionMode::Passthrough;
    SubspaceSpec spec;
    double tau = kDefaultTau;  // clamp gate
    double alpha = 1.0;        // amplification factor

    /// Throws ConfigError: alpha >= 1 for Amplify, tau > 0 for Clamp.
    void validate() const;
};

/// z_i <- 0 for subspace dims with z_i > tau; everything else unchanged.
Eigen::VectorXd clamp_code(const Eigen::VectorXd& z, const SubspaceSpec& spec, double tau);

/// z_i <- alpha * z_i for subspace dims. No threshold gate.
Eigen::VectorXd amplify_code(const Eigen::VectorXd& z, const SubspaceSpec& spec, double alpha);

/// Intervened code for `config` (identity in Passthrough mode).
Eigen::VectorXd intervene_code(const Eigen::VectorXd& z, const InterventionConfig& config);

/// Encodes h, intervenes on the code, and re-injects with the reconstruction error:
///
///   out = decode(z') + (h - decode(z)) = h + W_dec (z' - z)
///
/// Returns h unchanged (bit for bit) when the intervention leaves the code untouched.
Eigen::VectorXd apply_hook(const SaeModel& model, const Eigen::VectorXd& h, const InterventionConfig& config);

}  // namespace subguard
