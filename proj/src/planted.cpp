#include "subguard/planted.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "subguard/errors.hpp"

namespace subguard {

namespace {

std::vector<int> sample_without_replacement(const std::vector<int>& pool, int count, std::mt19937_64& rng) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<int> scratch = pool;
    for (int i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), scratch.size() - 1);
        std::swap(scratch[static_cast<std::size_t>(i)], scratch[pick(rng)]);
        out.push_back(scratch[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace

std::vector<int> PlantedConfig::default_planted(int count, int k) {
    std::vector<int> dims;
    const int stride = std::max(1, k / std::max(1, count));
    for (int i = 0; i < count; ++i) dims.push_back(i * stride);
    return dims;
}

void PlantedConfig::validate() const {
    if (d < 1) throw ConfigError("d", "must be >= 1");
    if (k < 1) throw ConfigError("k", "must be >= 1");
    if (planted.empty()) throw ConfigError("planted", "must name at least one dimension");
    std::set<int> unique;
    for (int p : planted) {
        if (p < 0 || p >= k) throw ConfigError("planted", "dimension " + std::to_string(p) + " outside [0, k)");
        if (!unique.insert(p).second) throw ConfigError("planted", "duplicate dimension " + std::to_string(p));
    }
    if (density < 1) throw ConfigError("density", "must be >= 1");
    if (tokens_per_sample < 1) throw ConfigError("tokens_per_sample", "must be >= 1");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma", "must be >= 0");
    if (!(scale_min > 0.0) || !(scale_max >= scale_min)) throw ConfigError("activation_scale", "need 0 < min <= max");
}

Eigen::MatrixXd planted_dictionary(const PlantedConfig& config) {
    std::mt19937_64 rng(config.seed * 0x2545f4914f6cdd1dULL + 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd dict(config.d, config.k);
    for (int j = 0; j < config.k; ++j) {
        for (int i = 0; i < config.d; ++i) dict(i, j) = normal(rng);
        dict.col(j).normalize();
    }
    return dict;
}

PlantedData generate_planted(const PlantedConfig& config, int n_cr, int n_gen) {
    config.validate();
    if (n_cr < 1 || n_gen < 1) throw DomainError("generate_planted needs at least one sample per corpus");

    PlantedData out;
    out.dictionary = planted_dictionary(config);
    out.ground_truth = config.planted;
    std::sort(out.ground_truth.begin(), out.ground_truth.end());

    std::vector<int> background;
    for (int j = 0; j < config.k; ++j)
        if (!std::binary_search(out.ground_truth.begin(), out.ground_truth.end(), j)) background.push_back(j);
    const int per_token = std::min<int>(config.density, static_cast<int>(background.size()));

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> magnitude(config.scale_min, config.scale_max);
    std::normal_distribution<double> noise(0.0, config.noise_sigma > 0.0 ? config.noise_sigma : 1.0);
    std::uniform_int_distribution<int> token_pick(0, config.tokens_per_sample - 1);

    auto make_sample = [&](CorpusLabel label) {
        const int t = config.tokens_per_sample;
        Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(t, config.k);
        for (int tok = 0; tok < t; ++tok)
            for (int dim : sample_without_replacement(background, per_token, rng)) codes(tok, dim) = magnitude(rng);
        if (label == CorpusLabel::Copyrighted)
            for (int dim : out.ground_truth) codes(token_pick(rng), dim) = magnitude(rng);
        Eigen::MatrixXd dense = codes * out.dictionary.transpose();
        if (config.noise_sigma > 0.0)
            for (Eigen::Index i = 0; i < dense.size(); ++i) dense.data()[i] += noise(rng);
        ActivationRecord rec;
        rec.label = label;
        rec.vectors = dense.cast<float>();
        return rec;
    };

    out.dataset.d = static_cast<std::uint32_t>(config.d);
    for (int i = 0; i < n_cr; ++i) out.dataset.records.push_back(make_sample(CorpusLabel::Copyrighted));
    for (int i = 0; i < n_gen; ++i) out.dataset.records.push_back(make_sample(CorpusLabel::General));
    out.dataset.metadata["source"] = "planted";
    out.dataset.metadata["seed"] = std::to_string(config.seed);
    return out;
}

double planted_recall(const Eigen::MatrixXd& decoder_weight, const std::vector<int>& selected_features,
                      const Eigen::MatrixXd& dictionary, const std::vector<int>& planted, double min_cosine) {
    if (planted.empty()) throw DomainError("planted_recall needs a non-empty planted set");
    if (decoder_weight.rows() != dictionary.rows()) throw DomainError("decoder and dictionary dimensions differ");
    std::set<int> hit;
    for (int f : selected_features) {
        if (f < 0 || f >= decoder_weight.cols()) throw DomainError("selected feature out of range");
        const double norm = decoder_weight.col(f).norm();
        if (norm == 0.0) continue;
        Eigen::Index best = 0;
        const Eigen::VectorXd cos = dictionary.transpose() * (decoder_weight.col(f) / norm);
        const double best_cos = cos.maxCoeff(&best);
        if (best_cos >= min_cosine) hit.insert(static_cast<int>(best));
    }
    int recovered = 0;
    for (int p : planted) recovered += hit.count(p) ? 1 : 0;
    return static_cast<double>(recovered) / static_cast<double>(planted.size());
}

}  // namespace subguard
