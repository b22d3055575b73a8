#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subguard/activations.hpp"
#include "subguard/evalmetrics.hpp"
#include "subguard/toylm.hpp"

namespace subguard {

struct CollectConfig {
    int window = 0;  // tokens per record, 0 means the model's context length
    int stride = 16;
    std::size_t general_records = 128;
    std::uint64_t seed = 0;
};

/// Hook-layer residuals of the toy LM. COPYRIGHTED records are sliding windows over each protected passage;
/// GENERAL records are windows drawn from `general_text`.
ActivationDataset collect_activations(const ToyLm& lm, const std::vector<std::string>& passages,
                                      const std::string& general_text, const CollectConfig& config = {});

struct EvalPrompt {
    std::string id;
    std::string prompt;
    std::string reference;
};

/// Cuts every passage at each fraction of its length (in characters). Ids look like `p2@0.50`.
std::vector<EvalPrompt> make_eval_prompts(const std::vector<std::string>& passages,
                                          const std::vector<double>& cut_fractions = {0.35, 0.5, 0.65});

/// Greedy continuation for every prompt, as long as its reference.
std::vector<GenerationRecord> generate(const ToyLm& lm, const std::vector<EvalPrompt>& prompts,
                                       const std::string& method, const std::optional<DecodeHook>& hook);

/// Mean normalised Levenshtein similarity of the records' generations to their references.
double mean_levenshtein(const std::vector<GenerationRecord>& records);

}  // namespace subguard
