#include "subguard/toylm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "subguard/errors.hpp"
#include "subguard/evalmetrics.hpp"
#include "utf8.hpp"

namespace subguard {

namespace {

constexpr char kLmMagic[4] = {'S', 'C', 'P', 'L'};
constexpr std::uint32_t kLmVersion = 1;

struct FlatView {
    std::vector<std::pair<double*, Eigen::Index>> chunks;
};

FlatView flatten(TransformerParams& p) {
    FlatView v;
    p.for_each([&](const char*, double* data, Eigen::Index size) { v.chunks.emplace_back(data, size); });
    return v;
}

void zero(TransformerParams& p) {
    for (auto [data, size] : flatten(p).chunks) std::fill(data, data + size, 0.0);
}

std::string describe(const std::vector<double>& sims) {
    std::ostringstream os;
    os.precision(3);
    for (std::size_t i = 0; i < sims.size(); ++i) os << (i ? ", " : "") << sims[i];
    return os.str();
}

}  // namespace

Vocabulary::Vocabulary(std::u32string symbols) : symbols_(std::move(symbols)) {
    std::sort(symbols_.begin(), symbols_.end());
    symbols_.erase(std::unique(symbols_.begin(), symbols_.end()), symbols_.end());
}

Vocabulary Vocabulary::from_text(const std::string& text) { return Vocabulary(detail::to_code_points(text)); }

std::vector<int> Vocabulary::encode(const std::string& text) const {
    std::vector<int> out;
    for (char32_t c : detail::to_code_points(text)) {
        const auto it = std::lower_bound(symbols_.begin(), symbols_.end(), c);
        if (it == symbols_.end() || *it != c) {
            throw TokenizationError("character U+" + detail::hex64(static_cast<std::uint64_t>(c)).substr(10) +
                                    " is not in the vocabulary");
        }
        out.push_back(static_cast<int>(it - symbols_.begin()));
    }
    return out;
}

std::string Vocabulary::decode(const std::vector<int>& tokens) const {
    std::u32string s;
    s.reserve(tokens.size());
    for (int t : tokens) {
        if (t < 0 || static_cast<std::size_t>(t) >= symbols_.size())
            throw DomainError("token id " + std::to_string(t) + " out of range");
        s.push_back(symbols_[static_cast<std::size_t>(t)]);
    }
    return detail::to_utf8(s);
}

std::string Vocabulary::symbol(int token) const { return decode({token}); }

void ToyLmTrainConfig::validate() const {
    if (steps < 1) throw ConfigError("steps", "must be >= 1");
    if (max_steps < steps) throw ConfigError("max_steps", "must be >= steps");
    if (check_every < 1) throw ConfigError("check_every", "must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate", "must be a positive finite number");
    if (!(grad_clip > 0.0)) throw ConfigError("grad_clip", "must be > 0");
    if (!(min_similarity >= 0.0 && min_similarity <= 1.0)) throw ConfigError("min_similarity", "must lie in [0, 1]");
}

std::pair<std::string, std::string> split_passage(const std::string& passage) {
    const std::u32string cp = detail::to_code_points(passage);
    const std::size_t half = cp.size() / 2;
    return {detail::to_utf8(cp.substr(0, half)), detail::to_utf8(cp.substr(half))};
}

std::string decode_greedy(const ToyLm& lm, const std::string& prompt, int max_tokens,
                          const std::optional<DecodeHook>& hook) {
    if (max_tokens < 1) throw DomainError("max_tokens must be >= 1");
    std::vector<int> seq = lm.vocab().encode(prompt);
    if (seq.empty()) throw DomainError("decoding needs a non-empty prompt");
    if (hook) {
        if (!hook->sae) throw DomainError("decode hook without an SAE");
        if (hook->sae->input_dim() != lm.config().d_model)
            throw DomainError("SAE input dimension " + std::to_string(hook->sae->input_dim()) +
                              " does not match d_model " + std::to_string(lm.config().d_model));
        hook->config.validate();
    }
    const auto prompt_len = static_cast<std::ptrdiff_t>(seq.size());
    const auto ctx = static_cast<std::ptrdiff_t>(lm.config().context_len);
    const bool active = hook && hook->config.mode != InterventionMode::Passthrough;

    std::vector<int> out;
    for (int step = 0; step < max_tokens; ++step) {
        const std::ptrdiff_t start = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(seq.size()) - ctx);
        const std::vector<int> window(seq.begin() + start, seq.end());
        ResidualHook fn;
        if (active) {
            // Absolute positions from prompt_len - 1 onward produce generated tokens.
            const std::ptrdiff_t first = hook->include_prompt ? 0 : prompt_len - 1;
            fn = [&](Eigen::MatrixXd& residual) {
                for (Eigen::Index r = 0; r < residual.rows(); ++r) {
                    if (start + r < first) continue;
                    const Eigen::VectorXd h = residual.row(r).transpose();
                    residual.row(r) = apply_hook(*hook->sae, h, hook->config).transpose();
                }
            };
        }
        const Eigen::MatrixXd logits = lm.forward(window, active ? &fn : nullptr);
        Eigen::Index best = 0;
        logits.row(logits.rows() - 1).maxCoeff(&best);  // first maximum wins ties
        seq.push_back(static_cast<int>(best));
        out.push_back(static_cast<int>(best));
    }
    return lm.vocab().decode(out);
}

std::vector<double> memorization_similarity(const ToyLm& lm, const std::vector<std::string>& passages,
                                            const std::optional<DecodeHook>& hook) {
    std::vector<double> sims;
    sims.reserve(passages.size());
    for (const auto& p : passages) {
        const auto [prompt, reference] = split_passage(p);
        const auto n = static_cast<int>(detail::to_code_points(reference).size());
        if (prompt.empty() || n == 0) throw DomainError("protected passage too short to split");
        sims.push_back(levenshtein_similarity(decode_greedy(lm, prompt, n, hook), reference));
    }
    return sims;
}

ToyLm train_toy_lm(const std::string& corpus, const std::vector<std::string>& protected_passages,
                   const ToyLmConfig& config, const ToyLmTrainConfig& train, MemorizationReport* report) {
    train.validate();
    Vocabulary vocab = Vocabulary::from_text(corpus);
    const std::vector<int> tokens = vocab.encode(corpus);
    for (const auto& p : protected_passages) vocab.encode(p);  // every passage must be tokenizable

    ToyLm lm = ToyLm::initialise(config, vocab);
    const auto ctx = static_cast<std::size_t>(lm.config().context_len);
    if (tokens.size() < ctx + 1)
        throw DomainError("corpus has " + std::to_string(tokens.size()) + " characters, needs at least " +
                          std::to_string(ctx + 1));

    TransformerParams grad = TransformerParams::zeros(lm.config());
    TransformerParams m = TransformerParams::zeros(lm.config());
    TransformerParams v = TransformerParams::zeros(lm.config());
    const auto p_chunks = flatten(lm.params()).chunks;
    const auto g_chunks = flatten(grad).chunks;
    const auto m_chunks = flatten(m).chunks;
    const auto v_chunks = flatten(v).chunks;

    std::mt19937_64 rng(lm.config().seed ^ 0x5bd1e9955bd1e995ULL);
    std::uniform_int_distribution<std::size_t> pick(0, tokens.size() - ctx - 1);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    std::vector<int> input(ctx), target(ctx);
    double last_loss = 0.0;
    std::vector<double> sims;
    int step = 0;
    int next_check = train.steps;
    while (true) {
        for (; step < next_check; ++step) {
            zero(grad);
            double batch_loss = 0.0;
            for (int b = 0; b < train.batch_size; ++b) {
                const std::size_t at = pick(rng);
                std::copy(tokens.begin() + at, tokens.begin() + at + ctx, input.begin());
                std::copy(tokens.begin() + at + 1, tokens.begin() + at + ctx + 1, target.begin());
                batch_loss += lm.loss_and_gradient(input, target, &grad);
            }
            last_loss = batch_loss / train.batch_size;
            if (!std::isfinite(last_loss)) throw TrainingError("toy LM loss became non-finite", step);

            double norm2 = 0.0;
            for (auto [data, size] : g_chunks)
                for (Eigen::Index i = 0; i < size; ++i) {
                    data[i] /= train.batch_size;
                    norm2 += data[i] * data[i];
                }
            const double norm = std::sqrt(norm2);
            const double clip = norm > train.grad_clip ? train.grad_clip / norm : 1.0;

            const double t = step + 1;
            const double lr_t =
                train.learning_rate * std::sqrt(1.0 - std::pow(beta2, t)) / (1.0 - std::pow(beta1, t));
            for (std::size_t c = 0; c < p_chunks.size(); ++c) {
                double* p = p_chunks[c].first;
                const double* g = g_chunks[c].first;
                double* mm = m_chunks[c].first;
                double* vv = v_chunks[c].first;
                for (Eigen::Index i = 0; i < p_chunks[c].second; ++i) {
                    const double gi = g[i] * clip;
                    mm[i] = beta1 * mm[i] + (1.0 - beta1) * gi;
                    vv[i] = beta2 * vv[i] + (1.0 - beta2) * gi * gi;
                    p[i] -= lr_t * mm[i] / (std::sqrt(vv[i]) + eps);
                }
            }
        }

        // Checks run on the checkpoint-precision weights so saved models behave identically.
        ToyLm rounded = lm;
        rounded.round_to_float();
        sims = memorization_similarity(rounded, protected_passages);
        const bool ok = std::all_of(sims.begin(), sims.end(), [&](double s) { return s >= train.min_similarity; });
        if (ok) {
            if (report) *report = {sims, step, last_loss};
            return rounded;
        }
        if (step >= train.max_steps) {
            throw TrainingError("toy LM failed to memorise protected passages after " + std::to_string(step) +
                                    " steps (loss " + std::to_string(last_loss) + "; similarities " +
                                    describe(sims) + "; need >= " + std::to_string(train.min_similarity) + ")",
                                step);
        }
        next_check = std::min(train.max_steps, step + train.check_every);
    }
}

LogitLensResult logit_lens(const ToyLm& lm, const SaeModel& sae, std::size_t feature, std::size_t top_m) {
    if (feature >= static_cast<std::size_t>(sae.dict_size()))
        throw DomainError("feature " + std::to_string(feature) + " out of range for dictionary size " +
                          std::to_string(sae.dict_size()));
    if (sae.input_dim() != lm.config().d_model)
        throw DomainError("SAE input dimension does not match the model width");
    const Eigen::VectorXd logits =
        lm.params().unembedding.transpose() * sae.decoder_weight.col(static_cast<Eigen::Index>(feature));
    const auto V = static_cast<std::size_t>(logits.size());
    top_m = std::min(top_m, V);

    std::vector<int> order(V);
    std::iota(order.begin(), order.end(), 0);
    auto entry = [&](int id) { return LogitLensEntry{lm.vocab().symbol(id), id, logits[id]}; };

    LogitLensResult out;
    std::vector<int> desc = order;
    std::stable_sort(desc.begin(), desc.end(), [&](int a, int b) { return logits[a] > logits[b]; });
    std::vector<int> asc = order;
    std::stable_sort(asc.begin(), asc.end(), [&](int a, int b) { return logits[a] < logits[b]; });
    for (std::size_t i = 0; i < top_m; ++i) {
        out.promoted.push_back(entry(desc[i]));
        out.suppressed.push_back(entry(asc[i]));
    }
    return out;
}

std::vector<std::uint8_t> encode_toy_lm(const ToyLm& lm) {
    const auto& c = lm.config();
    detail::ByteWriter w;
    w.put_bytes(std::string_view(kLmMagic, 4));
    w.put_u32(kLmVersion);
    for (int field : {c.vocab, c.d_model, c.n_layers, c.n_heads, c.mlp_hidden, c.context_len, c.hook_layer})
        w.put_u32(static_cast<std::uint32_t>(field));
    w.put_u64(c.seed);
    for (char32_t s : lm.vocab().symbols()) w.put_u32(static_cast<std::uint32_t>(s));
    lm.params().for_each([&](const char*, const double* data, Eigen::Index size) {
        for (Eigen::Index i = 0; i < size; ++i) w.put_f32(static_cast<float>(data[i]));
    });
    return w.bytes();
}

ToyLm decode_toy_lm(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes);
    if (r.remaining() < 4 || r.get_bytes(4, "magic") != std::string_view(kLmMagic, 4))
        throw FormatError("not a toy LM checkpoint (bad magic)");
    const auto version = r.get_u32("version");
    if (version != kLmVersion) throw FormatError("unsupported toy LM checkpoint version " + std::to_string(version));
    ToyLmConfig c;
    int* fields[] = {&c.vocab, &c.d_model, &c.n_layers, &c.n_heads, &c.mlp_hidden, &c.context_len, &c.hook_layer};
    for (int* f : fields) {
        const auto v = r.get_u32("header");
        if (v > (1u << 24)) throw FormatError("toy LM header field out of range");
        *f = static_cast<int>(v);
    }
    c.seed = r.get_u64("seed");
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("invalid toy LM header: ") + e.what());
    }
    r.require(4ULL * static_cast<std::size_t>(c.vocab), "vocabulary");
    std::u32string symbols;
    for (int i = 0; i < c.vocab; ++i) {
        const auto s = static_cast<char32_t>(r.get_u32("vocabulary"));
        if (!symbols.empty() && s <= symbols.back())
            throw CorruptionError("vocabulary not strictly ascending", r.offset() - 4);
        symbols.push_back(s);
    }
    ToyLm lm(c, Vocabulary(symbols));
    const auto expected = static_cast<std::size_t>(lm.params().parameter_count()) * 4;
    if (r.remaining() != expected)
        throw CorruptionError("toy LM payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                                  std::to_string(expected),
                              r.offset());
    for (auto [data, size] : flatten(lm.params()).chunks)
        for (Eigen::Index i = 0; i < size; ++i) {
            const float f = r.get_f32("parameters");
            if (!std::isfinite(f)) throw FormatError("toy LM checkpoint holds a non-finite parameter");
            data[i] = f;
        }
    return lm;
}

void save_toy_lm(const ToyLm& lm, const std::filesystem::path& path) { detail::write_file(path, encode_toy_lm(lm)); }

ToyLm load_toy_lm(const std::filesystem::path& path) { return decode_toy_lm(detail::read_file(path)); }

std::vector<std::string> parse_passages(const std::string& text) {
    std::vector<std::string> out;
    std::string block;
    std::istringstream in(text);
    std::string line;
    auto flush = [&] {
        while (!block.empty() && (block.back() == '\n' || block.back() == '\r')) block.pop_back();
        if (!block.empty()) out.push_back(block);
        block.clear();
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) {
            flush();
            continue;
        }
        block += line;
        block += '\n';
    }
    flush();
    return out;
}

std::string synthetic_filler(std::size_t n_chars, std::uint64_t seed) {
    static const char* const kWords[] = {
        "the",    "a",       "of",     "and",    "to",      "in",     "is",     "was",     "for",    "on",
        "with",   "as",      "by",     "at",     "from",    "it",     "that",   "this",    "which",  "were",
        "market", "river",   "table",  "window", "garden",  "letter", "number", "season",  "system", "paper",
        "morning", "station", "county", "report", "weather", "street", "bridge", "village", "school", "office",
        "green",  "small",   "large",  "early",  "late",    "quiet",  "public", "local",   "simple", "common",
        "walked", "opened",  "noted",  "found",  "closed",  "moved",  "built",  "carried", "said",   "kept",
        "often",  "rarely",  "later",  "again",  "there",   "here",   "under",  "over",    "near",   "between"};
    constexpr std::size_t kCount = sizeof(kWords) / sizeof(kWords[0]);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> word(0, kCount - 1);
    std::uniform_int_distribution<int> sentence_len(6, 14);
    std::string out;
    while (out.size() < n_chars) {
        const int len = sentence_len(rng);
        for (int i = 0; i < len; ++i) {
            std::string w = kWords[word(rng)];
            if (i == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
            if (!out.empty()) out += ' ';
            out += w;
        }
        out += '.';
    }
    out.resize(n_chars);
    return out;
}

std::string build_corpus(const std::vector<std::string>& passages, const std::string& filler, int repeats,
                         std::uint64_t seed) {
    if (repeats < 0) throw DomainError("repeats must be >= 0");
    std::vector<std::size_t> units;
    for (int r = 0; r < repeats; ++r)
        for (std::size_t i = 0; i < passages.size(); ++i) units.push_back(i);
    std::mt19937_64 rng(seed);
    std::shuffle(units.begin(), units.end(), rng);

    // Cut the filler into units.size() + 1 pieces at spaces.
    std::vector<std::string> pieces;
    const std::size_t parts = units.size() + 1;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < parts; ++i) {
        std::size_t end = i + 1 == parts ? filler.size() : filler.size() * (i + 1) / parts;
        if (end < filler.size()) {
            const auto space = filler.find(' ', end);
            end = space == std::string::npos ? filler.size() : space;
        }
        end = std::max(end, pos);
        std::string piece = filler.substr(pos, end - pos);
        const auto first = piece.find_first_not_of(' ');
        pieces.push_back(first == std::string::npos ? std::string() : piece.substr(first));
        pos = end;
    }

    std::string out;
    auto append = [&](const std::string& s) {
        if (s.empty()) return;
        if (!out.empty()) out += "\n\n";
        out += s;
    };
    for (std::size_t i = 0; i < units.size(); ++i) {
        append(pieces[i]);
        append(passages[units[i]]);
    }
    append(pieces.back());
    return out;
}

}  // namespace subguard
