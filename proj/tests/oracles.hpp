#pragma once

// Slow reference implementations used only by the tests. None of these call into the library code they check.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace oracle {

inline double jump(double x, double tau) { return x > tau ? x : 0.0; }

/// z_i = jump(sum_j W[i][j] h[j] + b[i]) with explicit loops.
inline std::vector<double> encode(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, double tau,
                                  const Eigen::VectorXd& h) {
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double acc = b[i];
        for (Eigen::Index j = 0; j < w.cols(); ++j) acc += w(i, j) * h[j];
        z[static_cast<std::size_t>(i)] = jump(acc, tau);
    }
    return z;
}

inline std::vector<double> decode(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const std::vector<double>& z) {
    std::vector<double> out(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double acc = b[i];
        for (Eigen::Index j = 0; j < w.cols(); ++j) acc += w(i, j) * z[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

/// Fraction of strictly winning (cr, gen) pairs.
inline double pair_fraction(const std::vector<double>& cr, const std::vector<double>& gen) {
    std::size_t wins = 0;
    for (double c : cr)
        for (double g : gen)
            if (c > g) ++wins;
    return static_cast<double>(wins) / (static_cast<double>(cr.size()) * static_cast<double>(gen.size()));
}

/// Wagner-Fischer over 32-bit code points with a full matrix.
inline std::size_t edit_distance(const std::u32string& a, const std::u32string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

/// Word shingles as strings, lowercased ASCII.
inline std::set<std::string> shingles(const std::string& text, std::size_t n) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) words.push_back(cur);
            cur.clear();
        } else {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    if (!cur.empty()) words.push_back(cur);
    std::set<std::string> out;
    if (words.empty()) return out;
    if (words.size() < n) {
        std::string all;
        for (std::size_t i = 0; i < words.size(); ++i) all += (i ? " " : "") + words[i];
        out.insert(all);
        return out;
    }
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
        std::string s;
        for (std::size_t k = 0; k < n; ++k) s += (k ? " " : "") + words[i + k];
        out.insert(s);
    }
    return out;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& s : a) inter += b.count(s);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

/// Indices of the n largest values, ties to the smaller index, via a full stable sort.
inline std::vector<std::size_t> top_n(const std::vector<double>& scores, std::size_t n) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(n);
    return idx;
}

}  // namespace oracle
