#include "subguard/pipeline.hpp"

#include <cstdio>
#include <random>

#include "binary_io.hpp"
#include "subguard/errors.hpp"
#include "subguard/parallel.hpp"
#include "utf8.hpp"

namespace subguard {

namespace {

ActivationRecord record_for(const ToyLm& lm, const std::vector<int>& tokens, CorpusLabel label) {
    const Eigen::MatrixXd r = lm.hook_residuals(tokens);
    ActivationRecord rec;
    rec.label = label;
    rec.vectors = r.cast<float>();
    return rec;
}

}  // namespace

ActivationDataset collect_activations(const ToyLm& lm, const std::vector<std::string>& passages,
                                      const std::string& general_text, const CollectConfig& config) {
    const int window = config.window == 0 ? lm.config().context_len : config.window;
    if (window < 1 || window > lm.config().context_len) throw ConfigError("window", "must lie in [1, context_len]");
    if (config.stride < 1) throw ConfigError("stride", "must be >= 1");

    std::vector<std::pair<std::vector<int>, CorpusLabel>> jobs;
    for (const auto& p : passages) {
        const std::vector<int> t = lm.vocab().encode(p);
        if (t.empty()) continue;
        const auto w = static_cast<std::size_t>(window);
        if (t.size() <= w) {
            jobs.emplace_back(t, CorpusLabel::Copyrighted);
            continue;
        }
        for (std::size_t at = 0;; at += static_cast<std::size_t>(config.stride)) {
            const std::size_t begin = std::min(at, t.size() - w);
            jobs.emplace_back(std::vector<int>(t.begin() + begin, t.begin() + begin + w), CorpusLabel::Copyrighted);
            if (begin + w >= t.size()) break;
        }
    }

    const std::vector<int> general = lm.vocab().encode(general_text);
    if (config.general_records > 0) {
        if (general.size() < static_cast<std::size_t>(window))
            throw DomainError("general text is shorter than one window");
        std::mt19937_64 rng(config.seed);
        std::uniform_int_distribution<std::size_t> pick(0, general.size() - window);
        for (std::size_t i = 0; i < config.general_records; ++i) {
            const std::size_t at = pick(rng);
            jobs.emplace_back(std::vector<int>(general.begin() + at, general.begin() + at + window),
                              CorpusLabel::General);
        }
    }

    ActivationDataset ds;
    ds.d = static_cast<std::uint32_t>(lm.config().d_model);
    ds.records.resize(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) { ds.records[i] = record_for(lm, jobs[i].first, jobs[i].second); });
    ds.metadata["source"] = "toy-lm";
    ds.metadata["hook_layer"] = std::to_string(lm.config().hook_layer);
    ds.metadata["model"] = detail::hex64(detail::fnv1a64(encode_toy_lm(lm)));
    ds.metadata["window"] = std::to_string(window);
    ds.metadata["stride"] = std::to_string(config.stride);
    ds.metadata["seed"] = std::to_string(config.seed);
    ds.validate();
    return ds;
}

std::vector<EvalPrompt> make_eval_prompts(const std::vector<std::string>& passages,
                                          const std::vector<double>& cut_fractions) {
    std::vector<EvalPrompt> out;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        const std::u32string cp = detail::to_code_points(passages[i]);
        for (double f : cut_fractions) {
            if (!(f > 0.0 && f < 1.0)) throw DomainError("cut fractions must lie in (0, 1)");
            const auto cut = static_cast<std::size_t>(f * static_cast<double>(cp.size()));
            if (cut == 0 || cut >= cp.size()) throw DomainError("passage " + std::to_string(i) + " is too short");
            char id[48];
            std::snprintf(id, sizeof id, "p%zu@%.2f", i, f);
            out.push_back({id, detail::to_utf8(cp.substr(0, cut)), detail::to_utf8(cp.substr(cut))});
        }
    }
    return out;
}

std::vector<GenerationRecord> generate(const ToyLm& lm, const std::vector<EvalPrompt>& prompts,
                                       const std::string& method, const std::optional<DecodeHook>& hook) {
    std::vector<GenerationRecord> out(prompts.size());
    parallel_for(prompts.size(), [&](std::size_t i) {
        const auto& p = prompts[i];
        const auto n = static_cast<int>(detail::to_code_points(p.reference).size());
        out[i] = {method, p.id, decode_greedy(lm, p.prompt, n, hook), p.reference};
    });
    return out;
}

double mean_levenshtein(const std::vector<GenerationRecord>& records) {
    if (records.empty()) throw DomainError("no generations to score");
    double sum = 0.0;
    for (const auto& r : records) sum += levenshtein_similarity(r.generated, r.reference);
    return sum / static_cast<double>(records.size());
}

}  // namespace subguard
