#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "subguard/activations.hpp"

namespace subguard {

/// Per-dimension Copyright Alignment Scores over max-pooled codes.
struct AlignmentReport {
    std::size_t k = 0;
    std::vector<double> scores;
    std::size_t n_cr = 0;
    std::size_t n_gen = 0;

    void validate() const;
};

/// Fraction of (copyrighted, general) pairs where the copyrighted value is strictly larger.
/// Ties count as losses, so this equals AUROC only on tie-free data. O(n_cr * n_gen).
double score_dimension(std::span<const double> cr_values, std::span<const double> gen_values);

/// Same value as `score_dimension`, computed by sorting in O((n_cr + n_gen) log n_gen).
double score_dimension_fast(std::span<const double> cr_values, std::span<const double> gen_values);

/// Scores every dimension of the pooled vectors. Needs at least one vector per label.
AlignmentReport score_report(std::span<const PooledVector> pooled);

/// Mean score over `dims`. Never exceeds the best member score.
double subspace_score(const AlignmentReport& report, std::span<const std::size_t> dims);

/// Per-dimension activation statistics of pooled codes, split by corpus.
struct DimensionStats {
    std::vector<double> mean_cr;
    std::vector<double> mean_gen;
    std::vector<double> active_rate_cr;   // fraction of samples with pooled value > tau
    std::vector<double> active_rate_gen;
    std::vector<double> silent_rate_gen;  // fraction of general samples with pooled value == 0
};

DimensionStats dimension_stats(std::span<const PooledVector> pooled, double tau);

/// CSV: `dim,score,n_cr,n_gen`, scores with 12 significant digits.
void write_report_csv(const AlignmentReport& report, const std::filesystem::path& path);
AlignmentReport read_report_csv(const std::filesystem::path& path);

/// CSV: `dim,mean_cr,mean_gen,active_rate_cr,active_rate_gen,silent_rate_gen`.
void write_stats_csv(const DimensionStats& stats, const std::filesystem::path& path);

}  // namespace subguard
