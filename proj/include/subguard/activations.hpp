#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace subguard {

enum class CorpusLabel : std::uint8_t { General = 0, Copyrighted = 1 };

const char* to_string(CorpusLabel label) noexcept;

/// Token-major block of dense hidden states: one row per token, one column per model dimension.
using DenseSequence = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Hidden states of one corpus sample.
struct ActivationRecord {
    CorpusLabel label = CorpusLabel::General;
    DenseSequence vectors;

    std::uint32_t tokens() const noexcept { return static_cast<std::uint32_t>(vectors.rows()); }
    std::uint32_t dim() const noexcept { return static_cast<std::uint32_t>(vectors.cols()); }

    friend bool operator==(const ActivationRecord& a, const ActivationRecord& b);
};

struct ActivationDataset {
    std::uint32_t d = 0;
    std::vector<ActivationRecord> records;
    /// Provenance strings. Keys may not contain '=' or newlines; values may not contain newlines.
    std::map<std::string, std::string> metadata;

    /// Throws DomainError on mixed dimensions, empty records or non-finite values.
    void validate() const;
    std::size_t count(CorpusLabel label) const noexcept;

    friend bool operator==(const ActivationDataset& a, const ActivationDataset& b);
};

/// Max-pooled summary of one sample's code sequence.
struct PooledVector {
    CorpusLabel label = CorpusLabel::General;
    Eigen::VectorXd values;
};

/// Serialises `dataset` in the SCPA dump format. Byte-deterministic.
std::vector<std::uint8_t> encode_dump(const ActivationDataset& dataset);
ActivationDataset decode_dump(const std::vector<std::uint8_t>& bytes);

void save_dump(const ActivationDataset& dataset, const std::filesystem::path& path);
ActivationDataset load_dump(const std::filesystem::path& path);

/// Stable content hash of a dataset (hex FNV-1a over its dump encoding).
std::string dataset_fingerprint(const ActivationDataset& dataset);

/// Component-wise maximum over the rows (timesteps) of `codes`.
Eigen::VectorXd max_pool(const Eigen::MatrixXd& codes);

}  // namespace subguard
