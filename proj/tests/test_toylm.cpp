#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "subguard/errors.hpp"
#include "subguard/toylm.hpp"

using namespace subguard;

namespace {

ToyLmConfig tiny_config() {
    ToyLmConfig c;
    c.d_model = 8;
    c.n_layers = 2;
    c.n_heads = 2;
    c.mlp_hidden = 12;
    c.context_len = 10;
    c.hook_layer = 0;
    c.seed = 3;
    return c;
}

ToyLm tiny_lm(double weight_scale = 1.0) {
    ToyLm lm = ToyLm::initialise(tiny_config(), Vocabulary::from_text("abcdef "));
    if (weight_scale != 1.0) {
        // Larger weights make every path contribute visibly to the gradient check.
        std::mt19937_64 rng(17);
        std::normal_distribution<double> n(0.0, 0.3);
        lm.params().for_each([&](const char*, double* p, Eigen::Index size) {
            for (Eigen::Index i = 0; i < size; ++i) p[i] = p[i] * weight_scale + n(rng);
        });
    }
    return lm;
}

SaeModel random_sae(Eigen::Index d, Eigen::Index k, double tau, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    SaeModel m = SaeModel::zeros(d, k, tau);
    for (Eigen::Index i = 0; i < m.encoder_weight.size(); ++i) m.encoder_weight.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < m.decoder_weight.size(); ++i) m.decoder_weight.data()[i] = n(rng);
    return m;
}

SubspaceSpec all_dims(std::size_t k) {
    SubspaceSpec s;
    s.k = k;
    for (std::size_t i = 0; i < k; ++i) s.dims.push_back({i, 1.0});
    return s;
}

}  // namespace

TEST(Vocabulary, SortedUniqueAndRoundTrip) {
    const Vocabulary v = Vocabulary::from_text("hello wörld");
    EXPECT_EQ(v.size(), 9u);
    EXPECT_TRUE(std::is_sorted(v.symbols().begin(), v.symbols().end()));
    EXPECT_EQ(v.decode(v.encode("wörld hello")), "wörld hello");
    EXPECT_EQ(v.symbol(v.encode("ö")[0]), "ö");
    EXPECT_THROW(v.encode("hello!"), TokenizationError);
}

TEST(ToyLmConfig, Validation) {
    ToyLmConfig c = tiny_config();
    c.vocab = 5;
    EXPECT_NO_THROW(c.validate());
    c.n_heads = 3;
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny_config();
    c.vocab = 5;
    c.hook_layer = 2;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ToyLm, GradientMatchesFiniteDifferences) {
    ToyLm lm = tiny_lm(1.0);
    lm.params().for_each([&](const char*, double* p, Eigen::Index size) {
        std::mt19937_64 rng(size);
        std::normal_distribution<double> n(0.0, 0.3);
        for (Eigen::Index i = 0; i < size; ++i) p[i] += n(rng);
    });
    const std::vector<int> tokens{0, 3, 2, 6, 1, 1, 4};
    const std::vector<int> targets{3, 2, 6, 1, 1, 4, 5};
    TransformerParams grad = TransformerParams::zeros(lm.config());
    lm.loss_and_gradient(tokens, targets, &grad);

    std::vector<std::pair<double*, double>> probes;
    std::vector<const double*> grads;
    grad.for_each([&](const char*, const double* g, Eigen::Index size) {
        for (Eigen::Index i = 0; i < size; i += 7) grads.push_back(g + i);
    });
    std::size_t at = 0;
    std::vector<std::string> names;
    lm.params().for_each([&](const char* name, double* p, Eigen::Index size) {
        for (Eigen::Index i = 0; i < size; i += 7) {
            probes.push_back({p + i, *grads[at++]});
            names.emplace_back(name);
        }
    });
    ASSERT_GT(probes.size(), 100u);
    const double h = 1e-5;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        double* p = probes[i].first;
        const double keep = *p;
        *p = keep + h;
        const double up = lm.loss_and_gradient(tokens, targets, nullptr);
        *p = keep - h;
        const double down = lm.loss_and_gradient(tokens, targets, nullptr);
        *p = keep;
        const double fd = (up - down) / (2 * h);
        EXPECT_NEAR(probes[i].second, fd, 1e-7 + 1e-4 * std::abs(fd)) << names[i];
    }
}

TEST(ToyLm, Causal) {
    const ToyLm lm = tiny_lm(2.0);
    const Eigen::MatrixXd a = lm.forward({0, 1, 2, 3, 4});
    const Eigen::MatrixXd b = lm.forward({0, 1, 2, 5, 6});
    EXPECT_EQ(a.topRows(3), b.topRows(3));
    EXPECT_NE(a.row(3), b.row(3));
    // A shorter input takes a different GEMM path, so only rounding may differ.
    EXPECT_LT((lm.forward({0, 1, 2}) - a.topRows(3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ToyLm, ForwardRejectsBadInput) {
    const ToyLm lm = tiny_lm();
    EXPECT_THROW(lm.forward({}), DomainError);
    EXPECT_THROW(lm.forward({0, 99}), DomainError);
    EXPECT_THROW(lm.forward(std::vector<int>(11, 0)), DomainError);
}

TEST(ToyLm, NoOpHookChangesNothing) {
    const ToyLm lm = tiny_lm(2.0);
    const ResidualHook noop = [](Eigen::MatrixXd&) {};
    const std::vector<int> t{1, 2, 3, 0, 5};
    EXPECT_EQ(lm.forward(t, &noop), lm.forward(t));

    const SaeModel sae = random_sae(8, 20, 0.5, 1);
    DecodeHook pass{&sae, {}, false};
    pass.config.spec = all_dims(20);
    EXPECT_EQ(decode_greedy(lm, "abc", 15, pass), decode_greedy(lm, "abc", 15));

    // A threshold no code reaches leaves every residual bit-identical.
    const SaeModel silent = random_sae(8, 20, 1e9, 2);
    DecodeHook clamp{&silent, {}, true};
    clamp.config.mode = InterventionMode::Clamp;
    clamp.config.tau = 1e9;
    clamp.config.spec = all_dims(20);
    EXPECT_EQ(decode_greedy(lm, "abc", 15, clamp), decode_greedy(lm, "abc", 15));
}

TEST(ToyLm, HookReachesTheResidualStream) {
    const ToyLm lm = tiny_lm(2.0);
    const std::vector<int> t{1, 2, 3, 0, 5};
    const ResidualHook wipe = [](Eigen::MatrixXd& r) { r.setZero(); };
    const Eigen::MatrixXd wiped = lm.forward(t, &wipe);
    // Every position sees the same zero residual, so the logits no longer depend on the input.
    for (Eigen::Index i = 1; i < wiped.rows(); ++i) EXPECT_LT((wiped.row(i) - wiped.row(0)).norm(), 1e-12);
    EXPECT_EQ(lm.hook_residuals(t).rows(), 5);
}

TEST(ToyLm, DecodeHookValidation) {
    const ToyLm lm = tiny_lm();
    const SaeModel wrong = random_sae(5, 4, 1.0, 1);
    DecodeHook h{&wrong, {}, false};
    h.config.spec = all_dims(4);
    EXPECT_THROW(decode_greedy(lm, "ab", 3, h), DomainError);
    h.sae = nullptr;
    EXPECT_THROW(decode_greedy(lm, "ab", 3, h), DomainError);
    EXPECT_THROW(decode_greedy(lm, "", 3), DomainError);
    EXPECT_EQ(decode_greedy(lm, std::string(30, 'a'), 4).size(), 4u);
}

TEST(ToyLmCheckpoint, RoundTripAndCorruption) {
    ToyLm lm = tiny_lm(2.0);
    lm.round_to_float();
    const auto bytes = encode_toy_lm(lm);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SCPL");
    EXPECT_TRUE(decode_toy_lm(bytes) == lm);
    EXPECT_EQ(encode_toy_lm(decode_toy_lm(bytes)), bytes);

    const std::size_t header = 4 + 4 + 7 * 4 + 8 + 4 * lm.vocab().size();
    EXPECT_EQ(bytes.size(), header + 4 * static_cast<std::size_t>(lm.params().parameter_count()));

    auto magic = bytes;
    magic[0] = 'x';
    EXPECT_THROW(decode_toy_lm(magic), FormatError);
    auto cut = bytes;
    cut.resize(cut.size() - 4);
    EXPECT_THROW(decode_toy_lm(cut), CorruptionError);
    auto nan = bytes;
    const float bad = std::nanf("");
    std::memcpy(nan.data() + header, &bad, 4);
    EXPECT_THROW(decode_toy_lm(nan), FormatError);
    auto order = bytes;
    std::swap_ranges(order.begin() + 44, order.begin() + 48, order.begin() + 48);
    EXPECT_THROW(decode_toy_lm(order), CorruptionError);

    const auto path = std::filesystem::temp_directory_path() / "subguard_test_lm" / "m.scpl";
    std::filesystem::remove_all(path.parent_path());
    save_toy_lm(lm, path);
    EXPECT_TRUE(load_toy_lm(path) == lm);
    std::filesystem::remove_all(path.parent_path());
}

TEST(LogitLens, MatchesDirectProjection) {
    const ToyLm lm = tiny_lm(2.0);
    const SaeModel sae = random_sae(8, 6, 1.0, 9);
    const std::size_t V = lm.vocab().size();
    for (std::size_t f = 0; f < 6; ++f) {
        std::vector<double> logits(V, 0.0);
        for (std::size_t v = 0; v < V; ++v)
            for (Eigen::Index i = 0; i < 8; ++i)
                logits[v] += sae.decoder_weight(i, static_cast<Eigen::Index>(f)) *
                             lm.params().unembedding(i, static_cast<Eigen::Index>(v));
        std::vector<int> order(V);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return logits[a] > logits[b]; });
        const auto res = logit_lens(lm, sae, f, 3);
        ASSERT_EQ(res.promoted.size(), 3u);
        for (int i = 0; i < 3; ++i) {
            EXPECT_EQ(res.promoted[i].token_id, order[i]);
            EXPECT_NEAR(res.promoted[i].logit, logits[order[i]], 1e-12);
            EXPECT_EQ(res.suppressed[i].token_id, order[V - 1 - i]);
        }
    }
    EXPECT_EQ(logit_lens(lm, sae, 0, 100).promoted.size(), V);
    EXPECT_THROW(logit_lens(lm, sae, 6, 3), DomainError);

    SaeModel zero = sae;
    zero.decoder_weight.col(2).setZero();
    const auto flat = logit_lens(lm, zero, 2, 3);
    EXPECT_EQ(flat.promoted[0].token_id, 0);
    EXPECT_EQ(flat.promoted[2].token_id, 2);
    EXPECT_EQ(flat.promoted[1].logit, 0.0);
}

TEST(Corpus, ParsePassages) {
    EXPECT_EQ(parse_passages("one\ntwo\n\n \t\nthree\r\n\n\n"), (std::vector<std::string>{"one\ntwo", "three"}));
    EXPECT_TRUE(parse_passages("\n\n").empty());
}

TEST(Corpus, BuildCorpusRepeatsEachPassage) {
    const std::vector<std::string> passages{"Alpha passage here.", "Beta text over there."};
    const std::string filler = synthetic_filler(2000, 5);
    EXPECT_EQ(filler.size(), 2000u);
    EXPECT_EQ(synthetic_filler(2000, 5), filler);
    const std::string corpus = build_corpus(passages, filler, 7, 1);
    for (const auto& p : passages) {
        std::size_t n = 0;
        for (auto at = corpus.find(p); at != std::string::npos; at = corpus.find(p, at + 1)) ++n;
        EXPECT_EQ(n, 7u);
    }
    EXPECT_EQ(build_corpus(passages, filler, 7, 1), corpus);
    EXPECT_THROW(build_corpus(passages, filler, -1, 1), DomainError);
}

TEST(Corpus, SplitPassageByCodePoints) {
    const auto [a, b] = split_passage("ab€d");
    EXPECT_EQ(a, "ab");
    EXPECT_EQ(b, "€d");
}

TEST(TrainToyLm, MemorisesAShortPassage) {
    ToyLmConfig cfg;
    cfg.d_model = 32;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.mlp_hidden = 64;
    cfg.context_len = 32;
    const std::string passage = "the lamp burns on the cold rock.";
    const std::string corpus = build_corpus({passage}, synthetic_filler(3000, 1), 40, 2);
    ToyLmTrainConfig tc;
    tc.steps = 300;
    tc.max_steps = 1500;
    tc.check_every = 300;
    MemorizationReport rep;
    const ToyLm lm = train_toy_lm(corpus, {passage}, cfg, tc, &rep);
    ASSERT_EQ(rep.similarity.size(), 1u);
    EXPECT_GE(rep.similarity[0], 0.8);
    EXPECT_EQ(memorization_similarity(lm, {passage}), rep.similarity);
    ToyLm copy = lm;
    copy.round_to_float();
    EXPECT_TRUE(copy == lm);
}

TEST(TrainToyLm, ReportsFailureToMemorise) {
    ToyLmConfig cfg = tiny_config();
    ToyLmTrainConfig tc;
    tc.steps = 1;
    tc.max_steps = 1;
    const std::string passage = "abcdef fedcba abcdef";
    try {
        train_toy_lm(passage + " " + passage, {passage}, cfg, tc);
        FAIL();
    } catch (const TrainingError& e) {
        EXPECT_EQ(e.epoch(), 1);
    }
    tc.max_steps = 0;
    EXPECT_THROW(train_toy_lm(passage, {passage}, cfg, tc), ConfigError);
}
