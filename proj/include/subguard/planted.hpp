#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "subguard/activations.hpp"

namespace subguard {

/// Synthetic activations with a known set of "copyright" dictionary atoms.
///
/// Every token is D_true * z_true + N(0, noise_sigma^2), where D_true is a fixed random d x k dictionary with
/// unit-norm columns. Each token activates `density` background atoms drawn from the non-planted dims.
/// Copyrighted samples additionally spread every planted atom over their tokens, so each planted atom is
/// active in at least one token of every copyrighted sample. General samples never touch a planted atom.
/// Active magnitudes are uniform in [scale_min, scale_max].
struct PlantedConfig {
    int d = 64;
    int k = 512;
    std::vector<int> planted = default_planted(16);
    int density = 3;              // active background atoms per token
    int tokens_per_sample = 8;
    double scale_min = 10.0;
    double scale_max = 20.0;
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// Dims 0, 32, 64, ... (count of them), spread across the dictionary.
    static std::vector<int> default_planted(int count, int k = 512);
};

struct PlantedData {
    ActivationDataset dataset;
    std::vector<int> ground_truth;  // sorted planted dims
    Eigen::MatrixXd dictionary;     // D_true, d x k
};

PlantedData generate_planted(const PlantedConfig& config, int n_cr, int n_gen);

/// The dictionary used by `generate_planted` for this config (depends only on d, k and seed).
Eigen::MatrixXd planted_dictionary(const PlantedConfig& config);

/// Fraction of planted atoms recovered by a set of learned features.
///
/// Each selected feature is matched to the true atom whose direction has the largest cosine with the feature's
/// decoder column; matches below `min_cosine` are discarded. Recall counts planted atoms hit by some match.
double planted_recall(const Eigen::MatrixXd& decoder_weight, const std::vector<int>& selected_features,
                      const Eigen::MatrixXd& dictionary, const std::vector<int>& planted, double min_cosine = 0.5);

}  // namespace subguard
