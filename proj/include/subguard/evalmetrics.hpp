#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace subguard {

/// 1 - edit_distance(a, b) / max(|a|, |b|) over Unicode code points; 1 when both are empty.
double levenshtein_similarity(std::string_view a, std::string_view b);

/// Unit-cost edit distance over code points.
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

struct MinHashConfig {
    int shingle_words = 3;
    int permutations = 256;
    std::uint64_t seed = 0;
};

/// Lowercased, whitespace-separated word shingles of `shingle_words` words, hashed to 64 bits.
/// A text with fewer words than the shingle size yields a single shingle of all its words.
std::vector<std::uint64_t> shingle_hashes(std::string_view text, int shingle_words);

/// Exact Jaccard similarity of the two shingle sets (1 when both are empty).
double exact_jaccard(std::string_view a, std::string_view b, int shingle_words = 3);

/// Fraction of agreeing min-hash signatures; an estimate of `exact_jaccard`.
/// Returns 1 when both texts are empty and 0 when exactly one is.
double minhash_similarity(std::string_view a, std::string_view b, const MinHashConfig& config = {});

/// Cosine similarity of character n-gram count vectors; 0 when either text has no n-grams.
/// Stand-in for embedding-based semantic similarity; reported as `ngram_cosine`.
double ngram_cosine(std::string_view a, std::string_view b, int n = 3);

/// Generation to be scored against its reference continuation.
struct GenerationRecord {
    std::string method;
    std::string example_id;
    std::string generated;
    std::string reference;
};

/// Similarity values [method][example][metric]. Lower similarity means better mitigation.
struct MetricMatrix {
    std::vector<std::string> methods;
    std::vector<std::string> examples;
    std::vector<std::string> metrics;
    std::vector<double> values;  // row-major: ((method * examples) + example) * metrics + metric

    MetricMatrix() = default;
    MetricMatrix(std::vector<std::string> methods, std::vector<std::string> examples,
                 std::vector<std::string> metrics);

    double& at(std::size_t method, std::size_t example, std::size_t metric);
    double at(std::size_t method, std::size_t example, std::size_t metric) const;
    std::size_t method_index(const std::string& method) const;  // throws DomainError when absent

    void validate() const;
};

inline constexpr const char* kMetricLevenshtein = "levenshtein";
inline constexpr const char* kMetricMinHash = "minhash";
inline constexpr const char* kMetricNgramCosine = "ngram_cosine";

/// Scores each record with the three similarity metrics. Every method must cover the same examples.
MetricMatrix score_generations(const std::vector<GenerationRecord>& records, const MinHashConfig& minhash = {});

/// Probability that `method` beats a uniformly drawn other method on a uniformly drawn (metric, example) cell.
/// A win is strictly lower similarity; ties count one half. Computed by exact enumeration.
double win_rate(const MetricMatrix& matrix, const std::string& method);

/// Win rate restricted to a single metric column.
double win_rate_on_metric(const MetricMatrix& matrix, const std::string& method, const std::string& metric);

/// Long-format CSV: `method,example_id,metric,similarity`.
void write_matrix_csv(const MetricMatrix& matrix, const std::filesystem::path& path);
MetricMatrix read_matrix_csv(const std::filesystem::path& path);
/// Merges several matrices over the same examples and metrics (methods are concatenated).
MetricMatrix merge_matrices(const std::vector<MetricMatrix>& parts);

/// Horizontal bar chart of win rates, one bar per method.
std::string win_rate_svg(const std::vector<std::pair<std::string, double>>& rates);

}  // namespace subguard
