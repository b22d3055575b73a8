#include "subguard/activations.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "subguard/errors.hpp"

namespace subguard {

namespace {

constexpr char kDumpMagic[4] = {'S', 'C', 'P', 'A'};
constexpr std::uint32_t kDumpVersion = 1;

void check_metadata(const std::map<std::string, std::string>& metadata) {
    for (const auto& [key, value] : metadata) {
        if (key.empty() || key.find_first_of("=\n") != std::string::npos)
            throw DomainError("metadata key must be non-empty without '=' or newline: '" + key + "'");
        if (value.find('\n') != std::string::npos)
            throw DomainError("metadata value for '" + key + "' contains a newline");
    }
}

}  // namespace

const char* to_string(CorpusLabel label) noexcept {
    return label == CorpusLabel::Copyrighted ? "COPYRIGHTED" : "GENERAL";
}

bool operator==(const ActivationRecord& a, const ActivationRecord& b) {
    return a.label == b.label && a.vectors.rows() == b.vectors.rows() && a.vectors.cols() == b.vectors.cols() &&
           (a.vectors.array() == b.vectors.array()).all();
}

bool operator==(const ActivationDataset& a, const ActivationDataset& b) {
    return a.d == b.d && a.records == b.records && a.metadata == b.metadata;
}

void ActivationDataset::validate() const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.tokens() == 0) throw DomainError("record " + std::to_string(i) + " has no tokens");
        if (r.dim() != d)
            throw DomainError("record " + std::to_string(i) + " has dimension " + std::to_string(r.dim()) +
                              ", dataset dimension is " + std::to_string(d));
        if (!r.vectors.allFinite()) throw DomainError("record " + std::to_string(i) + " has non-finite values");
        if (r.label != CorpusLabel::General && r.label != CorpusLabel::Copyrighted)
            throw DomainError("record " + std::to_string(i) + " has an unknown label");
    }
    check_metadata(metadata);
}

std::size_t ActivationDataset::count(CorpusLabel label) const noexcept {
    std::size_t n = 0;
    for (const auto& r : records) n += r.label == label ? 1 : 0;
    return n;
}

std::vector<std::uint8_t> encode_dump(const ActivationDataset& dataset) {
    dataset.validate();
    detail::ByteWriter w;
    w.put_bytes(std::string_view(kDumpMagic, 4));
    w.put_u32(kDumpVersion);
    w.put_u32(dataset.d);
    w.put_u64(dataset.records.size());
    for (const auto& r : dataset.records) {
        w.put_u8(static_cast<std::uint8_t>(r.label));
        w.put_u32(r.tokens());
        w.put_f32s(std::span<const float>(r.vectors.data(), static_cast<std::size_t>(r.vectors.size())));
    }
    std::string footer;
    for (const auto& [key, value] : dataset.metadata) footer += key + "=" + value + "\n";
    w.put_u32(static_cast<std::uint32_t>(footer.size()));
    w.put_bytes(footer);
    return w.bytes();
}

ActivationDataset decode_dump(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes);
    if (r.remaining() < 4 || r.get_bytes(4, "magic") != std::string_view(kDumpMagic, 4))
        throw FormatError("not an activation dump (bad magic)");
    const auto version = r.get_u32("version");
    if (version != kDumpVersion) throw FormatError("unsupported dump version " + std::to_string(version));

    ActivationDataset ds;
    ds.d = r.get_u32("dimension");
    const auto count = r.get_u64("record count");
    // Each record needs at least 5 header bytes; reject absurd counts before reserving.
    if (count > r.remaining() / 5) throw CorruptionError("record count exceeds file size", r.offset());
    ds.records.reserve(static_cast<std::size_t>(count));

    for (std::uint64_t i = 0; i < count; ++i) {
        const auto record_offset = r.offset();
        ActivationRecord rec;
        const auto label = r.get_u8("record label");
        if (label > 1) throw CorruptionError("invalid label byte " + std::to_string(label), record_offset);
        rec.label = static_cast<CorpusLabel>(label);
        const auto tokens = r.get_u32("record token count");
        if (tokens == 0) throw CorruptionError("record with zero tokens", record_offset);
        const std::uint64_t n_values = static_cast<std::uint64_t>(tokens) * ds.d;
        r.require(static_cast<std::size_t>(n_values * 4), "record values");
        rec.vectors.resize(tokens, ds.d);
        float* out = rec.vectors.data();
        for (std::uint64_t j = 0; j < n_values; ++j) {
            const auto value_offset = r.offset();
            const float v = r.get_f32("record values");
            if (!std::isfinite(v)) throw FormatError("non-finite activation at byte offset " + std::to_string(value_offset));
            out[j] = v;
        }
        ds.records.push_back(std::move(rec));
    }

    const auto footer_len = r.get_u32("metadata length");
    const auto footer_offset = r.offset();
    const std::string footer = r.get_bytes(footer_len, "metadata");
    std::size_t start = 0;
    while (start < footer.size()) {
        auto end = footer.find('\n', start);
        if (end == std::string::npos) end = footer.size();
        const std::string line = footer.substr(start, end - start);
        if (!line.empty()) {
            const auto eq = line.find('=');
            if (eq == std::string::npos || eq == 0)
                throw CorruptionError("malformed metadata line '" + line + "'", footer_offset + start);
            ds.metadata[line.substr(0, eq)] = line.substr(eq + 1);
        }
        start = end + 1;
    }
    if (r.remaining() != 0) throw CorruptionError("trailing bytes after metadata", r.offset());
    return ds;
}

void save_dump(const ActivationDataset& dataset, const std::filesystem::path& path) {
    const auto bytes = encode_dump(dataset);
    detail::write_file(path, bytes);
}

ActivationDataset load_dump(const std::filesystem::path& path) { return decode_dump(detail::read_file(path)); }

std::string dataset_fingerprint(const ActivationDataset& dataset) {
    return detail::hex64(detail::fnv1a64(encode_dump(dataset)));
}

Eigen::VectorXd max_pool(const Eigen::MatrixXd& codes) {
    if (codes.rows() == 0) throw DomainError("max_pool of an empty sequence");
    return codes.colwise().maxCoeff().transpose();
}

}  // namespace subguard
