#include "subguard/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "subguard/errors.hpp"
#include "subguard/parallel.hpp"

namespace subguard {

namespace {

void check_values(std::span<const double> cr, std::span<const double> gen) {
    if (cr.empty() || gen.empty()) throw DomainError("alignment score needs non-empty copyrighted and general values");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(cr.begin(), cr.end(), finite) || !std::all_of(gen.begin(), gen.end(), finite))
        throw DomainError("alignment score over non-finite values");
}

double win_fraction(std::uint64_t wins, std::size_t n_cr, std::size_t n_gen) {
    return static_cast<double>(wins) / (static_cast<double>(n_cr) * static_cast<double>(n_gen));
}

}  // namespace

void AlignmentReport::validate() const {
    if (scores.size() != k) throw DomainError("alignment report has " + std::to_string(scores.size()) +
                                              " scores for k = " + std::to_string(k));
    if (n_cr < 1 || n_gen < 1) throw DomainError("alignment report needs n_cr >= 1 and n_gen >= 1");
    for (double s : scores)
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError("alignment score outside [0, 1]");
}

double score_dimension(std::span<const double> cr_values, std::span<const double> gen_values) {
    check_values(cr_values, gen_values);
    std::uint64_t wins = 0;
    for (double a : cr_values)
        for (double b : gen_values) wins += a > b ? 1 : 0;
    return win_fraction(wins, cr_values.size(), gen_values.size());
}

double score_dimension_fast(std::span<const double> cr_values, std::span<const double> gen_values) {
    check_values(cr_values, gen_values);
    std::vector<double> gen(gen_values.begin(), gen_values.end());
    std::sort(gen.begin(), gen.end());
    std::uint64_t wins = 0;
    for (double a : cr_values)
        wins += static_cast<std::uint64_t>(std::lower_bound(gen.begin(), gen.end(), a) - gen.begin());
    return win_fraction(wins, cr_values.size(), gen_values.size());
}

AlignmentReport score_report(std::span<const PooledVector> pooled) {
    if (pooled.empty()) throw DomainError("score_report over no samples");
    const auto k = static_cast<std::size_t>(pooled.front().values.size());
    std::size_t n_cr = 0;
    for (const auto& p : pooled) {
        if (static_cast<std::size_t>(p.values.size()) != k) throw DomainError("pooled vectors have mixed dimensions");
        n_cr += p.label == CorpusLabel::Copyrighted ? 1 : 0;
    }
    const std::size_t n_gen = pooled.size() - n_cr;
    if (n_cr == 0) throw DomainError("score_report needs at least one COPYRIGHTED sample");
    if (n_gen == 0) throw DomainError("score_report needs at least one GENERAL sample");

    AlignmentReport report{k, std::vector<double>(k, 0.0), n_cr, n_gen};
    parallel_for(k, [&](std::size_t dim) {
        std::vector<double> cr, gen;
        cr.reserve(n_cr);
        gen.reserve(n_gen);
        const auto i = static_cast<Eigen::Index>(dim);
        for (const auto& p : pooled) (p.label == CorpusLabel::Copyrighted ? cr : gen).push_back(p.values[i]);
        report.scores[dim] = score_dimension_fast(cr, gen);
    });
    return report;
}

double subspace_score(const AlignmentReport& report, std::span<const std::size_t> dims) {
    if (dims.empty()) throw DomainError("subspace_score of an empty index set");
    double sum = 0.0;
    for (auto i : dims) {
        if (i >= report.k) throw DomainError("index " + std::to_string(i) + " out of range for k = " +
                                             std::to_string(report.k));
        sum += report.scores[i];
    }
    return sum / static_cast<double>(dims.size());
}

DimensionStats dimension_stats(std::span<const PooledVector> pooled, double tau) {
    if (pooled.empty()) throw DomainError("dimension_stats over no samples");
    const auto k = static_cast<std::size_t>(pooled.front().values.size());
    DimensionStats s;
    for (auto* v : {&s.mean_cr, &s.mean_gen, &s.active_rate_cr, &s.active_rate_gen, &s.silent_rate_gen})
        v->assign(k, 0.0);
    std::size_t n_cr = 0, n_gen = 0;
    for (const auto& p : pooled) {
        if (static_cast<std::size_t>(p.values.size()) != k) throw DomainError("pooled vectors have mixed dimensions");
        const bool cr = p.label == CorpusLabel::Copyrighted;
        (cr ? n_cr : n_gen) += 1;
        for (std::size_t i = 0; i < k; ++i) {
            const double v = p.values[static_cast<Eigen::Index>(i)];
            if (cr) {
                s.mean_cr[i] += v;
                s.active_rate_cr[i] += v > tau ? 1.0 : 0.0;
            } else {
                s.mean_gen[i] += v;
                s.active_rate_gen[i] += v > tau ? 1.0 : 0.0;
                s.silent_rate_gen[i] += v == 0.0 ? 1.0 : 0.0;
            }
        }
    }
    auto divide = [](std::vector<double>& v, std::size_t n) {
        if (n == 0) return;
        for (auto& x : v) x /= static_cast<double>(n);
    };
    divide(s.mean_cr, n_cr);
    divide(s.active_rate_cr, n_cr);
    divide(s.mean_gen, n_gen);
    divide(s.active_rate_gen, n_gen);
    divide(s.silent_rate_gen, n_gen);
    return s;
}

void write_report_csv(const AlignmentReport& report, const std::filesystem::path& path) {
    report.validate();
    detail::ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "dim,score,n_cr,n_gen\n";
    char buf[64];
    for (std::size_t i = 0; i < report.k; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", report.scores[i]);
        out << i << ',' << buf << ',' << report.n_cr << ',' << report.n_gen << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

AlignmentReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "dim,score,n_cr,n_gen")
        throw FormatError("alignment CSV must start with header 'dim,score,n_cr,n_gen'");
    AlignmentReport report;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string dim, score, n_cr, n_gen;
        if (!std::getline(fields, dim, ',') || !std::getline(fields, score, ',') || !std::getline(fields, n_cr, ',') ||
            !std::getline(fields, n_gen))
            throw FormatError("malformed alignment CSV row " + std::to_string(row + 1));
        try {
            if (std::stoull(dim) != row) throw FormatError("alignment CSV rows must be dims 0..k-1 in order");
            report.scores.push_back(std::stod(score));
            report.n_cr = std::stoull(n_cr);
            report.n_gen = std::stoull(n_gen);
        } catch (const std::logic_error&) {
            throw FormatError("unparseable alignment CSV row " + std::to_string(row + 1));
        }
        ++row;
    }
    report.k = report.scores.size();
    try {
        report.validate();
    } catch (const DomainError& e) {
        throw FormatError(std::string("invalid alignment CSV: ") + e.what());
    }
    return report;
}

void write_stats_csv(const DimensionStats& stats, const std::filesystem::path& path) {
    detail::ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "dim,mean_cr,mean_gen,active_rate_cr,active_rate_gen,silent_rate_gen\n";
    char buf[160];
    for (std::size_t i = 0; i < stats.mean_cr.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g,%.12g,%.12g\n", i, stats.mean_cr[i], stats.mean_gen[i],
                      stats.active_rate_cr[i], stats.active_rate_gen[i], stats.silent_rate_gen[i]);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace subguard
