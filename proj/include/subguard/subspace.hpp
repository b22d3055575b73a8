#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subguard/alignment.hpp"
#include "subguard/sae.hpp"

namespace subguard {

struct ScoredDim {
    std::size_t index = 0;
    double score = 0.0;

    friend bool operator==(const ScoredDim&, const ScoredDim&) = default;
};

/// Selected sparse-space dimensions, best first. The last entry's score is the selection cutoff.
struct SubspaceSpec {
    std::size_t k = 0;
    std::vector<ScoredDim> dims;
    double tau = kDefaultTau;
    std::map<std::string, std::string> provenance;

    std::size_t n() const noexcept { return dims.size(); }
    /// n-th largest score, i.e. the inclusion cutoff. Throws DomainError when empty.
    double cutoff() const;
    std::vector<std::size_t> indices() const;
    bool contains(std::size_t index) const;

    /// Throws DomainError on duplicate/out-of-range indices or increasing scores.
    void validate() const;

    friend bool operator==(const SubspaceSpec&, const SubspaceSpec&) = default;
};

/// Top-n dimensions by score; ties broken by smaller index. Requires 1 <= n <= k.
SubspaceSpec select_top_n(const AlignmentReport& report, std::size_t n, double tau = kDefaultTau);

/// Zeroes every component outside the subspace.
Eigen::VectorXd project(const Eigen::VectorXd& z, const SubspaceSpec& spec);

std::string to_json(const SubspaceSpec& spec);
SubspaceSpec subspace_from_json(const std::string& text);
void save_subspace(const SubspaceSpec& spec, const std::filesystem::path& path);
SubspaceSpec load_subspace(const std::filesystem::path& path);

}  // namespace subguard
