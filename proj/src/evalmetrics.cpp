#include "subguard/evalmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "binary_io.hpp"
#include "subguard/errors.hpp"
#include "utf8.hpp"

namespace subguard {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

std::vector<std::string> words_lower(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!current.empty()) words.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::vector<std::uint64_t> unique_sorted(std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

void check_name(const std::string& name, const char* what) {
    if (name.empty()) throw DomainError(std::string(what) + " must be non-empty");
    if (name.find_first_of(",\n\r") != std::string::npos)
        throw DomainError(std::string(what) + " '" + name + "' may not contain commas or newlines");
}

struct HalfWinTally {
    std::uint64_t half_wins = 0;
    std::uint64_t comparisons = 0;
};

HalfWinTally tally(const MetricMatrix& m, std::size_t method, std::size_t metric_begin, std::size_t metric_end) {
    HalfWinTally t;
    for (std::size_t e = 0; e < m.examples.size(); ++e)
        for (std::size_t q = metric_begin; q < metric_end; ++q) {
            const double mine = m.at(method, e, q);
            for (std::size_t o = 0; o < m.methods.size(); ++o) {
                if (o == method) continue;
                const double theirs = m.at(o, e, q);
                t.half_wins += mine < theirs ? 2 : mine == theirs ? 1 : 0;
                ++t.comparisons;
            }
        }
    return t;
}

using CellKey = std::tuple<std::string, std::string, std::string>;

MetricMatrix matrix_from_cells(const std::vector<std::pair<CellKey, double>>& cells) {
    std::vector<std::string> methods, examples, metrics;
    auto remember = [](std::vector<std::string>& list, const std::string& v) {
        if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
    };
    std::map<CellKey, double> lookup;
    for (const auto& [key, value] : cells) {
        remember(methods, std::get<0>(key));
        remember(examples, std::get<1>(key));
        remember(metrics, std::get<2>(key));
        if (!lookup.emplace(key, value).second)
            throw FormatError("duplicate metric cell (" + std::get<0>(key) + ", " + std::get<1>(key) + ", " +
                              std::get<2>(key) + ")");
    }
    MetricMatrix m(methods, examples, metrics);
    for (std::size_t a = 0; a < methods.size(); ++a)
        for (std::size_t e = 0; e < examples.size(); ++e)
            for (std::size_t q = 0; q < metrics.size(); ++q) {
                auto it = lookup.find({methods[a], examples[e], metrics[q]});
                if (it == lookup.end())
                    throw FormatError("missing metric cell (" + methods[a] + ", " + examples[e] + ", " + metrics[q] +
                                      ")");
                m.at(a, e, q) = it->second;
            }
    m.validate();
    return m;
}

}  // namespace

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
    const auto x = detail::to_code_points(a);
    const auto y = detail::to_code_points(b);
    if (x.empty()) return y.size();
    if (y.empty()) return x.size();
    std::vector<std::size_t> row(y.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i + 1;
        for (std::size_t j = 0; j < y.size(); ++j) {
            const std::size_t above = row[j + 1];
            row[j + 1] = std::min({above + 1, row[j] + 1, diagonal + (x[i] == y[j] ? 0 : 1)});
            diagonal = above;
        }
    }
    return row[y.size()];
}

double levenshtein_similarity(std::string_view a, std::string_view b) {
    const auto longest = std::max(detail::to_code_points(a).size(), detail::to_code_points(b).size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein_distance(a, b)) / static_cast<double>(longest);
}

std::vector<std::uint64_t> shingle_hashes(std::string_view text, int shingle_words) {
    if (shingle_words < 1) throw DomainError("shingle size must be >= 1");
    const auto words = words_lower(text);
    std::vector<std::uint64_t> out;
    if (words.empty()) return out;
    const auto w = static_cast<std::size_t>(shingle_words);
    const std::size_t count = words.size() >= w ? words.size() - w + 1 : 1;
    for (std::size_t i = 0; i < count; ++i) {
        std::string shingle = words[i];
        for (std::size_t j = i + 1; j < std::min(words.size(), i + w); ++j) shingle += ' ' + words[j];
        out.push_back(hash_string(shingle));
    }
    return out;
}

double exact_jaccard(std::string_view a, std::string_view b, int shingle_words) {
    const auto sa = unique_sorted(shingle_hashes(a, shingle_words));
    const auto sb = unique_sorted(shingle_hashes(b, shingle_words));
    if (sa.empty() && sb.empty()) return 1.0;
    std::vector<std::uint64_t> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    const auto uni = sa.size() + sb.size() - common.size();
    return static_cast<double>(common.size()) / static_cast<double>(uni);
}

double minhash_similarity(std::string_view a, std::string_view b, const MinHashConfig& config) {
    if (config.permutations < 1) throw DomainError("minhash needs at least one permutation");
    const auto sa = unique_sorted(shingle_hashes(a, config.shingle_words));
    const auto sb = unique_sorted(shingle_hashes(b, config.shingle_words));
    if (sa.empty() && sb.empty()) return 1.0;
    if (sa.empty() || sb.empty()) return 0.0;

    std::uint64_t state = config.seed;
    int agree = 0;
    for (int p = 0; p < config.permutations; ++p) {
        // Multiply-shift family over 64-bit words: h(x) = a * x + b mod 2^64, a odd.
        state += 0x9e3779b97f4a7c15ULL;
        const std::uint64_t mul = mix64(state) | 1ULL;
        state += 0x9e3779b97f4a7c15ULL;
        const std::uint64_t add = mix64(state);
        auto signature = [&](const std::vector<std::uint64_t>& set) {
            std::uint64_t best = ~0ULL;
            for (auto x : set) best = std::min(best, mul * x + add);
            return best;
        };
        agree += signature(sa) == signature(sb) ? 1 : 0;
    }
    return static_cast<double>(agree) / static_cast<double>(config.permutations);
}

double ngram_cosine(std::string_view a, std::string_view b, int n) {
    if (n < 1) throw DomainError("n-gram size must be >= 1");
    auto counts = [n](std::string_view s) {
        const auto cps = detail::to_code_points(s);
        std::map<std::u32string, double> c;
        const auto len = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i + len <= cps.size(); ++i) c[cps.substr(i, len)] += 1.0;
        return c;
    };
    const auto ca = counts(a);
    const auto cb = counts(b);
    if (ca.empty() || cb.empty()) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [g, v] : ca) {
        na += v * v;
        auto it = cb.find(g);
        if (it != cb.end()) dot += v * it->second;
    }
    for (const auto& [g, v] : cb) nb += v * v;
    return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

MetricMatrix::MetricMatrix(std::vector<std::string> methods_, std::vector<std::string> examples_,
                           std::vector<std::string> metrics_)
    : methods(std::move(methods_)), examples(std::move(examples_)), metrics(std::move(metrics_)),
      values(methods.size() * examples.size() * metrics.size(), 0.0) {}

double& MetricMatrix::at(std::size_t method, std::size_t example, std::size_t metric) {
    return values[(method * examples.size() + example) * metrics.size() + metric];
}

double MetricMatrix::at(std::size_t method, std::size_t example, std::size_t metric) const {
    return values[(method * examples.size() + example) * metrics.size() + metric];
}

std::size_t MetricMatrix::method_index(const std::string& method) const {
    auto it = std::find(methods.begin(), methods.end(), method);
    if (it == methods.end()) throw DomainError("method '" + method + "' not in metric matrix");
    return static_cast<std::size_t>(it - methods.begin());
}

void MetricMatrix::validate() const {
    if (values.size() != methods.size() * examples.size() * metrics.size())
        throw DomainError("metric matrix size does not match its axes");
    for (const auto& m : methods) check_name(m, "method");
    for (const auto& e : examples) check_name(e, "example_id");
    for (const auto& q : metrics) check_name(q, "metric");
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("similarity outside [0, 1]");
}

MetricMatrix score_generations(const std::vector<GenerationRecord>& records, const MinHashConfig& minhash) {
    std::vector<std::pair<CellKey, double>> cells;
    cells.reserve(records.size() * 3);
    for (const auto& r : records) {
        check_name(r.method, "method");
        check_name(r.example_id, "example_id");
        cells.push_back({{r.method, r.example_id, kMetricLevenshtein}, levenshtein_similarity(r.generated, r.reference)});
        cells.push_back({{r.method, r.example_id, kMetricMinHash}, minhash_similarity(r.generated, r.reference, minhash)});
        cells.push_back({{r.method, r.example_id, kMetricNgramCosine}, ngram_cosine(r.generated, r.reference)});
    }
    try {
        return matrix_from_cells(cells);
    } catch (const FormatError& e) {
        throw DomainError(e.what());
    }
}

double win_rate(const MetricMatrix& matrix, const std::string& method) {
    if (matrix.methods.size() < 2) throw DomainError("win rate needs at least two methods");
    const auto m = matrix.method_index(method);
    if (matrix.examples.empty() || matrix.metrics.empty()) throw DomainError("win rate over an empty matrix");
    const auto t = tally(matrix, m, 0, matrix.metrics.size());
    return static_cast<double>(t.half_wins) / (2.0 * static_cast<double>(t.comparisons));
}

double win_rate_on_metric(const MetricMatrix& matrix, const std::string& method, const std::string& metric) {
    if (matrix.methods.size() < 2) throw DomainError("win rate needs at least two methods");
    const auto m = matrix.method_index(method);
    auto it = std::find(matrix.metrics.begin(), matrix.metrics.end(), metric);
    if (it == matrix.metrics.end()) throw DomainError("metric '" + metric + "' not in metric matrix");
    if (matrix.examples.empty()) throw DomainError("win rate over an empty matrix");
    const auto q = static_cast<std::size_t>(it - matrix.metrics.begin());
    const auto t = tally(matrix, m, q, q + 1);
    return static_cast<double>(t.half_wins) / (2.0 * static_cast<double>(t.comparisons));
}

void write_matrix_csv(const MetricMatrix& matrix, const std::filesystem::path& path) {
    matrix.validate();
    detail::ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "method,example_id,metric,similarity\n";
    char buf[64];
    for (std::size_t a = 0; a < matrix.methods.size(); ++a)
        for (std::size_t e = 0; e < matrix.examples.size(); ++e)
            for (std::size_t q = 0; q < matrix.metrics.size(); ++q) {
                std::snprintf(buf, sizeof buf, "%.17g", matrix.at(a, e, q));
                out << matrix.methods[a] << ',' << matrix.examples[e] << ',' << matrix.metrics[q] << ',' << buf << '\n';
            }
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

std::vector<std::pair<CellKey, double>> read_cells(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "method,example_id,metric,similarity")
        throw FormatError(path.string() + ": expected header 'method,example_id,metric,similarity'");
    std::vector<std::pair<CellKey, double>> cells;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string method, example, metric, value;
        if (!std::getline(fields, method, ',') || !std::getline(fields, example, ',') ||
            !std::getline(fields, metric, ',') || !std::getline(fields, value))
            throw FormatError(path.string() + ": malformed row " + std::to_string(row));
        try {
            cells.push_back({{method, example, metric}, std::stod(value)});
        } catch (const std::logic_error&) {
            throw FormatError(path.string() + ": unparseable similarity on row " + std::to_string(row));
        }
    }
    return cells;
}

}  // namespace

MetricMatrix read_matrix_csv(const std::filesystem::path& path) {
    try {
        return matrix_from_cells(read_cells(path));
    } catch (const DomainError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

MetricMatrix merge_matrices(const std::vector<MetricMatrix>& parts) {
    std::vector<std::pair<CellKey, double>> cells;
    for (const auto& m : parts)
        for (std::size_t a = 0; a < m.methods.size(); ++a)
            for (std::size_t e = 0; e < m.examples.size(); ++e)
                for (std::size_t q = 0; q < m.metrics.size(); ++q)
                    cells.push_back({{m.methods[a], m.examples[e], m.metrics[q]}, m.at(a, e, q)});
    try {
        return matrix_from_cells(cells);
    } catch (const FormatError& e) {
        throw DomainError(e.what());
    }
}

std::string win_rate_svg(const std::vector<std::pair<std::string, double>>& rates) {
    constexpr int kBarHeight = 28, kGap = 10, kLabelWidth = 160, kChartWidth = 400, kMargin = 20;
    const int height = kMargin * 2 + 30 + static_cast<int>(rates.size()) * (kBarHeight + kGap);
    const int width = kMargin * 2 + kLabelWidth + kChartWidth + 60;
    auto escape = [](const std::string& s) {
        std::string out;
        for (char c : s) {
            switch (c) {
                case '&': out += "&amp;"; break;
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                case '"': out += "&quot;"; break;
                default: out += c;
            }
        }
        return out;
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    svg << "  <text x=\"" << kMargin << "\" y=\"" << kMargin + 12 << "\" font-weight=\"bold\">Win rate (higher = less regurgitation)</text>\n";
    int y = kMargin + 30;
    char buf[32];
    for (const auto& [method, rate] : rates) {
        const int bar = static_cast<int>(std::lround(std::clamp(rate, 0.0, 1.0) * kChartWidth));
        std::snprintf(buf, sizeof buf, "%.1f%%", rate * 100.0);
        svg << "  <text x=\"" << kMargin << "\" y=\"" << y + kBarHeight / 2 + 5 << "\">" << escape(method) << "</text>\n";
        svg << "  <rect x=\"" << kMargin + kLabelWidth << "\" y=\"" << y << "\" width=\"" << bar << "\" height=\""
            << kBarHeight << "\" fill=\"#4878a8\"/>\n";
        svg << "  <text x=\"" << kMargin + kLabelWidth + bar + 6 << "\" y=\"" << y + kBarHeight / 2 + 5 << "\">" << buf
            << "</text>\n";
        y += kBarHeight + kGap;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace subguard
