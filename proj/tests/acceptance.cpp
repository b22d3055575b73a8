// Acceptance suite. Runs every criterion, prints one PASS/FAIL line each, exits non-zero if any failed.
// Thresholds are fixed here and nowhere else.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "subguard/alignment.hpp"
#include "subguard/errors.hpp"
#include "subguard/evalmetrics.hpp"
#include "subguard/intervene.hpp"
#include "subguard/pipeline.hpp"
#include "subguard/planted.hpp"
#include "subguard/sae.hpp"
#include "subguard/subspace.hpp"
#include "subguard/toylm.hpp"

using namespace subguard;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------- 1

Outcome alignment_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    int cases = 0, heavy = 0, mismatches = 0;
    for (int i = 0; i < 1200; ++i) {
        const bool tie_heavy = i % 6 == 0;
        std::uniform_int_distribution<int> size(1, 300);
        std::vector<double> cr(size(rng)), gen(size(rng));
        if (tie_heavy) {
            // Mostly zeros with a handful of repeated levels, like pooled sparse codes.
            std::uniform_int_distribution<int> level(0, 3);
            std::bernoulli_distribution zero(0.7);
            for (auto* v : {&cr, &gen})
                for (auto& x : *v) x = zero(rng) ? 0.0 : 1.5 * level(rng);
            ++heavy;
        } else {
            std::normal_distribution<double> n(0.0, 1.0);
            for (auto& x : cr) x = n(rng) + 0.3;
            for (auto& x : gen) x = n(rng);
        }
        const double brute = score_dimension(cr, gen);
        const double fast = score_dimension_fast(cr, gen);
        if (brute != fast || brute != oracle::pair_fraction(cr, gen)) ++mismatches;
        ++cases;
    }
    const double t = seconds_since(t0);
    return {mismatches == 0 && cases >= 1000 && heavy >= 100 && t < 10.0,
            std::to_string(cases) + " cases (" + std::to_string(heavy) + " heavy-tie), " +
                std::to_string(mismatches) + " mismatches, " + fmt("%.2f s", t) + " (limit 10 s)"};
}

// ---------------------------------------------------------------- 2

Outcome subspace_bound() {
    std::mt19937_64 rng(2002);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int violations = 0;
    double worst = 0.0;
    for (int r = 0; r < 100; ++r) {
        AlignmentReport rep;
        rep.k = 64 + static_cast<std::size_t>(r);
        rep.n_cr = rep.n_gen = 10;
        for (std::size_t i = 0; i < rep.k; ++i) rep.scores.push_back(r % 4 == 0 ? std::round(u(rng) * 4) / 4 : u(rng));
        for (int s = 0; s < 100; ++s) {
            std::vector<std::size_t> all(rep.k);
            std::iota(all.begin(), all.end(), 0);
            std::shuffle(all.begin(), all.end(), rng);
            all.resize(std::uniform_int_distribution<std::size_t>(1, rep.k)(rng));
            const double got = subspace_score(rep, all);
            long double sum = 0.0L;
            double best = 0.0;
            for (auto i : all) {
                sum += rep.scores[i];
                best = std::max(best, rep.scores[i]);
            }
            const double mean = static_cast<double>(sum / all.size());
            worst = std::max(worst, std::abs(got - mean));
            if (got > best || std::abs(got - mean) > 1e-12) ++violations;
        }
    }
    return {violations == 0, "10000 subsets, " + std::to_string(violations) + " violations, max |score - mean| " +
                                 fmt("%.2e", worst) + " (limit 1e-12)"};
}

// ---------------------------------------------------------------- 3

// Scores carry no label information once labels are shuffled. The dense planted vectors are max-pooled so
// the values are continuous; see the ledger for why sparse codes are not used here.
Outcome null_calibration() {
    PlantedConfig pc;
    pc.seed = 3003;
    const auto data = generate_planted(pc, 100, 100);
    std::mt19937_64 rng(3004);
    std::size_t within = 0, total = 0;
    double lo = 1.0, hi = 0.0;
    for (int shuffle = 0; shuffle < 20; ++shuffle) {
        std::vector<CorpusLabel> labels;
        for (const auto& r : data.dataset.records) labels.push_back(r.label);
        std::shuffle(labels.begin(), labels.end(), rng);
        std::vector<PooledVector> pooled;
        for (std::size_t i = 0; i < labels.size(); ++i)
            pooled.push_back({labels[i], max_pool(data.dataset.records[i].vectors.cast<double>())});
        const auto rep = score_report(pooled);
        for (double s : rep.scores) {
            within += std::abs(s - 0.5) <= 0.15 ? 1 : 0;
            lo = std::min(lo, s);
            hi = std::max(hi, s);
            ++total;
        }
    }
    const double frac = static_cast<double>(within) / static_cast<double>(total);
    return {frac >= 0.95, std::to_string(total) + " dimension scores (20 shuffles x 64 dims), " +
                              fmt("%.4f", frac) + " within 0.15 of 0.5 (need >= 0.95), range [" + fmt("%.3f", lo) +
                              ", " + fmt("%.3f", hi) + "]"};
}

// ---------------------------------------------------------------- 4

Outcome sae_gradient() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(4004);
    std::normal_distribution<double> n(0.0, 1.0);
    const double step = 1e-4, lambda = 0.01;
    int pairs = 0, skipped = 0;
    double worst = 0.0;
    while (pairs < 20) {
        const Eigen::Index d = 12 + pairs % 5, k = 24 + 2 * (pairs % 7);
        SaeModel m = SaeModel::zeros(d, k, 0.5 + 0.1 * (pairs % 3));
        for (Eigen::Index i = 0; i < m.encoder_weight.size(); ++i) m.encoder_weight.data()[i] = 0.5 * n(rng);
        for (Eigen::Index i = 0; i < m.decoder_weight.size(); ++i) m.decoder_weight.data()[i] = 0.5 * n(rng);
        for (Eigen::Index i = 0; i < k; ++i) m.encoder_bias[i] = 0.3 * n(rng);
        for (Eigen::Index i = 0; i < d; ++i) m.decoder_bias[i] = 0.3 * n(rng);
        Eigen::VectorXd h(d);
        for (Eigen::Index i = 0; i < d; ++i) h[i] = 2.0 * n(rng);
        if (((pre_activation(m, h).array() - m.tau).abs() < 1e-3).any()) {
            ++skipped;
            continue;
        }
        SaeGradients g = SaeGradients::zeros_like(m);
        accumulate_loss_gradient(m, h, lambda, g);

        std::vector<double> analytic, numeric;
        auto probe = [&](Eigen::Ref<Eigen::MatrixXd> p, const Eigen::MatrixXd& grad) {
            for (Eigen::Index i = 0; i < p.size(); ++i) {
                const double keep = p.data()[i];
                p.data()[i] = keep + step;
                const Eigen::ArrayXd pre_up = pre_activation(m, h).array();
                const double up = loss(m, h, lambda);
                p.data()[i] = keep - step;
                const Eigen::ArrayXd pre_down = pre_activation(m, h).array();
                const double down = loss(m, h, lambda);
                p.data()[i] = keep;
                if (((pre_up > m.tau) != (pre_down > m.tau)).any()) continue;
                analytic.push_back(grad.data()[i]);
                numeric.push_back((up - down) / (2 * step));
            }
        };
        probe(m.encoder_weight, g.encoder_weight);
        probe(m.encoder_bias, g.encoder_bias);
        probe(m.decoder_weight, g.decoder_weight);
        probe(m.decoder_bias, g.decoder_bias);
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            diff += std::pow(analytic[i] - numeric[i], 2);
            na += analytic[i] * analytic[i];
            nn += numeric[i] * numeric[i];
        }
        worst = std::max(worst, std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12}));
        ++pairs;
    }
    const double t = seconds_since(t0);
    return {worst < 1e-4 && t < 30.0, "20 pairs (" + std::to_string(skipped) + " draws near tau resampled), max rel err " +
                                          fmt("%.2e", worst) + " (limit 1e-4), " + fmt("%.2f s", t) + " (limit 30 s)"};
}

// ---------------------------------------------------------------- 5

Outcome planted_recovery() {
    const auto t0 = Clock::now();
    std::string per_seed;
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PlantedConfig pc;
        pc.seed = seed;
        const auto data = generate_planted(pc, 200, 200);
        TrainConfig tc;
        tc.seed = seed;
        const SaeModel sae = train(data.dataset, pc.k, kDefaultTau, tc);
        const auto rep = score_report(pool_codes(sae, data.dataset));
        const auto spec = select_top_n(rep, data.ground_truth.size(), sae.tau);
        std::vector<int> selected;
        for (auto i : spec.indices()) selected.push_back(static_cast<int>(i));
        const double recall = planted_recall(sae.decoder_weight, selected, data.dictionary, data.ground_truth);
        sum += recall;
        per_seed += (seed ? " " : "") + fmt("%.4f", recall);
    }
    const double mean = sum / 5.0, t = seconds_since(t0);
    return {mean >= 0.9 && t < 600.0, "recall per seed [" + per_seed + "], mean " + fmt("%.4f", mean) +
                                          " (need >= 0.9), " + fmt("%.1f s", t) + " (limit 600 s)"};
}

// ---------------------------------------------------------------- 6

Outcome intervention_identities() {
    std::mt19937_64 rng(6006);
    std::normal_distribution<double> n(0.0, 1.0);
    const Eigen::Index d = 64, k = 512;
    SaeModel m = init_model(d, k, 0.5, 6);
    for (Eigen::Index i = 0; i < k; ++i) m.encoder_bias[i] = 0.2 * n(rng);
    SubspaceSpec spec;
    spec.k = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < 16; ++i) spec.dims.push_back({i * 32, 1.0 - 0.01 * static_cast<double>(i)});
    // Bias the subspace dims down so a fair share of inputs leave all of them silent.
    for (auto i : spec.indices()) m.encoder_bias[static_cast<Eigen::Index>(i)] = -1.5;

    int exact_fail = 0, idem_fail = 0, local_fail = 0, no_clamp_cases = 0;
    double worst_local = 0.0;
    auto random_h = [&] {
        Eigen::VectorXd h(d);
        for (Eigen::Index i = 0; i < d; ++i) h[i] = 3.0 * n(rng);
        return h;
    };
    InterventionConfig pass{InterventionMode::Passthrough, spec, 0.5, 1.0};
    InterventionConfig clamp{InterventionMode::Clamp, spec, 0.5, 1.0};
    InterventionConfig amp{InterventionMode::Amplify, spec, 0.5, 1.7};
    for (int i = 0; i < 2000; ++i) {
        const Eigen::VectorXd h = random_h();
        if (apply_hook(m, h, pass) != h) ++exact_fail;
        const Eigen::VectorXd z = encode(m, h);
        if (clamp_code(z, spec, clamp.tau) == z) {
            ++no_clamp_cases;
            if (apply_hook(m, h, clamp) != h) ++exact_fail;
        }
        // A gate above every code value also leaves the code untouched.
        InterventionConfig high = clamp;
        high.tau = z.maxCoeff() + 1.0;
        if (apply_hook(m, h, high) != h) ++exact_fail;
        for (const auto* c : {&clamp, &amp}) {
            const Eigen::VectorXd expect = h + m.decoder_weight * (intervene_code(z, *c) - z);
            const double err = (apply_hook(m, h, *c) - expect).cwiseAbs().maxCoeff();
            worst_local = std::max(worst_local, err);
            if (err > 1e-10) ++local_fail;
        }
    }
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::bernoulli_distribution active(0.3);
    for (int i = 0; i < 10000; ++i) {
        Eigen::VectorXd z(k);
        for (Eigen::Index j = 0; j < k; ++j) z[j] = active(rng) ? u(rng) : 0.0;
        const Eigen::VectorXd once = clamp_code(z, spec, 0.5);
        if (clamp_code(once, spec, 0.5) != once) ++idem_fail;
    }
    return {exact_fail == 0 && idem_fail == 0 && local_fail == 0 && no_clamp_cases > 0,
            "exactness failures " + std::to_string(exact_fail) + " (" + std::to_string(no_clamp_cases) +
                " natural no-clamp inputs), idempotence failures " + std::to_string(idem_fail) +
                "/10000, locality max err " + fmt("%.2e", worst_local) + " (limit 1e-10)"};
}

// ---------------------------------------------------------------- 7, 8

// Pre-declared end-to-end configuration. Chosen before looking at the amplify results and not tuned on them.
struct EndToEnd {
    static constexpr double kTau = 1.0;
    static constexpr int kDictSize = 256;
    static constexpr std::size_t kSubspace = 16;

    std::vector<std::string> passages;
    MemorizationReport memo;
    double setup_seconds = 0.0;
    std::vector<EvalPrompt> prompts;
    std::vector<GenerationRecord> vanilla, clamped;
    std::vector<std::pair<double, std::vector<GenerationRecord>>> amplified;
    std::string error;

    void run() {
        const auto t0 = Clock::now();
        try {
            std::ifstream in(SUBGUARD_DATA_DIR "/protected.txt");
            std::stringstream ss;
            ss << in.rdbuf();
            passages = parse_passages(ss.str());
            if (passages.size() < 4) throw DomainError("need 4 protected passages");

            // Same recipe as `subguard make-corpus` and `train-lm` with default flags.
            std::size_t chars = 0;
            for (const auto& p : passages) chars += p.size();
            const std::string corpus = build_corpus(passages, synthetic_filler(chars * 200, 1), 200, 2);
            const ToyLm lm = train_toy_lm(corpus, passages, ToyLmConfig{}, ToyLmTrainConfig{}, &memo);

            CollectConfig cc;
            cc.stride = 2;
            cc.general_records = 512;
            const ActivationDataset ds = collect_activations(lm, passages, synthetic_filler(20000, 7), cc);
            TrainConfig tc;
            tc.epochs = 60;
            const SaeModel sae = train(ds, kDictSize, kTau, tc);
            const SubspaceSpec spec = select_top_n(score_report(pool_codes(sae, ds)), kSubspace, kTau);

            prompts = make_eval_prompts(passages);
            vanilla = generate(lm, prompts, "vanilla", std::nullopt);
            clamped = generate(lm, prompts, "clamp", DecodeHook{&sae, {InterventionMode::Clamp, spec, kTau, 1.0}});
            for (double a : {1.2, 1.5, 2.0})
                amplified.emplace_back(a, generate(lm, prompts, "amplify_" + fmt("%.1f", a),
                                                   DecodeHook{&sae, {InterventionMode::Amplify, spec, kTau, a}}));
        } catch (const std::exception& e) {
            error = e.what();
        }
        setup_seconds = seconds_since(t0);
    }
};

Outcome end_to_end_mitigation(const EndToEnd& e2e) {
    if (!e2e.error.empty()) return {false, "pipeline failed: " + e2e.error};
    const bool memorised = e2e.memo.similarity.size() >= 4 &&
                           std::all_of(e2e.memo.similarity.begin(), e2e.memo.similarity.end(),
                                       [](double s) { return s >= 0.8; });
    std::string sims;
    for (double s : e2e.memo.similarity) sims += (sims.empty() ? "" : " ") + fmt("%.3f", s);
    const double van = mean_levenshtein(e2e.vanilla), cl = mean_levenshtein(e2e.clamped);
    const double reduction = (van - cl) / van;

    std::vector<GenerationRecord> both = e2e.vanilla;
    both.insert(both.end(), e2e.clamped.begin(), e2e.clamped.end());
    const MetricMatrix mm = score_generations(both);
    const double wr_clamp = win_rate(mm, "clamp"), wr_van = win_rate(mm, "vanilla");

    const bool pass = memorised && e2e.prompts.size() >= 10 && reduction >= 0.30 && wr_clamp > wr_van &&
                      e2e.setup_seconds < 1800.0;
    return {pass, std::to_string(e2e.memo.similarity.size()) + " passages memorised [" + sims + "] at step " +
                      std::to_string(e2e.memo.steps) + "; " + std::to_string(e2e.prompts.size()) +
                      " prompts, levenshtein vanilla " + fmt("%.4f", van) + " clamp " + fmt("%.4f", cl) +
                      ", reduction " + fmt("%.1f%%", 100 * reduction) + " (need >= 30%); win rate clamp " +
                      fmt("%.3f", wr_clamp) + " vs vanilla " + fmt("%.3f", wr_van) + "; " +
                      fmt("%.0f s", e2e.setup_seconds) + " (limit 1800 s)"};
}

Outcome reverse_direction(const EndToEnd& e2e) {
    if (!e2e.error.empty()) return {false, "pipeline failed: " + e2e.error};
    const double van = mean_levenshtein(e2e.vanilla);
    std::vector<double> means;
    std::string detail = "vanilla " + fmt("%.4f", van);
    for (const auto& [alpha, recs] : e2e.amplified) {
        means.push_back(mean_levenshtein(recs));
        detail += ", alpha " + fmt("%.1f", alpha) + " " + fmt("%.4f", means.back());
    }
    bool monotone = true;
    for (std::size_t i = 1; i < means.size(); ++i) monotone = monotone && means[i] >= means[i - 1];
    const bool beats_vanilla = means.back() >= van;
    detail += std::string("; non-decreasing ") + (monotone ? "yes" : "no") + ", alpha 2.0 >= vanilla " +
              (beats_vanilla ? "yes" : "no");
    return {monotone && beats_vanilla, detail};
}

// Per-prompt view of the amplify runs, printed after the verdict lines.
void print_amplify_breakdown(const EndToEnd& e2e) {
    if (!e2e.error.empty()) return;
    std::cout << "  amplify per prompt (levenshtein: vanilla / 1.2 / 1.5 / 2.0):\n";
    for (std::size_t i = 0; i < e2e.prompts.size(); ++i) {
        const auto& v = e2e.vanilla[i];
        std::cout << "    " << v.example_id << (levenshtein_similarity(v.generated, v.reference) < 1.0 ? " *" : "  ");
        std::cout << fmt(" %.3f", levenshtein_similarity(v.generated, v.reference));
        for (const auto& [alpha, recs] : e2e.amplified)
            std::cout << fmt(" %.3f", levenshtein_similarity(recs[i].generated, recs[i].reference));
        std::cout << "\n";
    }
    std::size_t below = 0, held = 0;
    for (std::size_t i = 0; i < e2e.prompts.size(); ++i) {
        const double v = levenshtein_similarity(e2e.vanilla[i].generated, e2e.vanilla[i].reference);
        if (v >= 1.0) continue;
        ++below;
        const auto& a2 = e2e.amplified.back().second[i];
        held += levenshtein_similarity(a2.generated, a2.reference) >= v ? 1 : 0;
    }
    std::cout << "  (* vanilla similarity below 1; alpha 2.0 >= vanilla on " << held << " of " << below
              << " such prompts)\n";
}

// ---------------------------------------------------------------- 9

Outcome win_rate_protocol() {
    std::mt19937_64 rng(9009);
    double worst = 0.0;
    bool exact_half = true;
    for (int trial = 0; trial < 3; ++trial) {
        MetricMatrix m({"a", "b", "c"}, {"e0", "e1", "e2", "e3", "e4", "e5", "e6", "e7"}, {"x", "y", "z"});
        std::uniform_int_distribution<int> level(0, trial == 0 ? 1000 : 5);
        for (auto& v : m.values) v = level(rng) / (trial == 0 ? 1000.0 : 5.0);

        // Averages are checked on the integer half-win counts that the rates encode.
        const double comparisons = static_cast<double>(m.examples.size() * m.metrics.size() * 2);
        long long half_wins = 0;
        for (const auto& name : m.methods) half_wins += std::llround(win_rate(m, name) * 2.0 * comparisons);
        exact_half = exact_half && half_wins == static_cast<long long>(m.methods.size() * comparisons);

        for (std::size_t method = 0; method < 3; ++method) {
            std::uniform_int_distribution<std::size_t> other(0, 1), ex(0, m.examples.size() - 1), met(0, 2);
            double acc = 0.0;
            const int draws = 1000000;
            for (int i = 0; i < draws; ++i) {
                std::size_t o = other(rng);
                if (o >= method) ++o;
                const std::size_t e = ex(rng), q = met(rng);
                const double mine = m.at(method, e, q), theirs = m.at(o, e, q);
                acc += mine < theirs ? 1.0 : mine == theirs ? 0.5 : 0.0;
            }
            worst = std::max(worst, std::abs(acc / draws - win_rate(m, m.methods[method])));
        }
    }
    MetricMatrix dom({"good", "bad"}, {"e0", "e1"}, {"x"});
    dom.at(0, 0, 0) = 0.1;
    dom.at(0, 1, 0) = 0.2;
    dom.at(1, 0, 0) = 0.9;
    dom.at(1, 1, 0) = 0.8;
    const double g = win_rate(dom, "good"), b = win_rate(dom, "bad");
    const bool pass = worst <= 0.01 && exact_half && g == 1.0 && b == 0.0;
    return {pass, "max |exact - sampled| " + fmt("%.4f", worst) + " over 3 matrices x 3 methods (limit 0.01); average 0.5 " +
                      (exact_half ? "exact" : "violated") + "; dominated case {" + fmt("%.1f", g) + ", " +
                      fmt("%.1f", b) + "}"};
}

// ---------------------------------------------------------------- 10

Outcome minhash_estimator() {
    static const std::vector<std::string> lexicon{"harbor", "stone", "ladder", "copper", "window", "orchard",
                                                  "thread", "candle", "river",  "saddle", "meadow", "anchor",
                                                  "button", "glass",  "winter", "pepper", "marble", "feather"};
    std::mt19937_64 rng(10010);
    std::uniform_int_distribution<std::size_t> pick(0, lexicon.size() - 1);
    auto words = [&](int n) {
        std::vector<std::string> w;
        for (int i = 0; i < n; ++i) w.push_back(lexicon[pick(rng)]);
        return w;
    };
    auto join = [](const std::vector<std::string>& w) {
        std::string s;
        for (std::size_t i = 0; i < w.size(); ++i) s += (i ? " " : "") + w[i];
        return s;
    };

    double worst_err = 0.0, worst_bias = 0.0;
    std::string jac_range;
    double jmin = 1.0, jmax = 0.0;
    const int pairs = 24;
    for (int p = 0; p < pairs; ++p) {
        // Shared prefix length controls the overlap, from disjoint to near-duplicate.
        const int shared = p * 60 / (pairs - 1);
        const std::vector<std::string> common = words(shared);
        std::vector<std::string> a = common, b = common;
        for (const auto& w : words(60 - shared)) a.push_back(w);
        for (const auto& w : words(60 - shared)) b.push_back(w);
        const std::string ta = join(a), tb = join(b);
        const double exact = exact_jaccard(ta, tb, 3);
        jmin = std::min(jmin, exact);
        jmax = std::max(jmax, exact);
        MinHashConfig cfg;
        cfg.permutations = 256;
        worst_err = std::max(worst_err, std::abs(minhash_similarity(ta, tb, cfg) - exact));
        double sum = 0.0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            cfg.seed = seed;
            sum += minhash_similarity(ta, tb, cfg);
        }
        worst_bias = std::max(worst_bias, std::abs(sum / 50.0 - exact));
    }
    return {worst_err <= 0.1 && worst_bias <= 0.02,
            std::to_string(pairs) + " pairs, Jaccard " + fmt("%.2f", jmin) + ".." + fmt("%.2f", jmax) +
                ", max |estimate - exact| " + fmt("%.4f", worst_err) + " (limit 0.1), max seed-averaged bias " +
                fmt("%.4f", worst_bias) + " (limit 0.02)"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
        failures += o.pass ? 0 : 1;
    };
    auto guarded = [](const std::function<Outcome()>& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("exception: ") + e.what()};
        }
    };

    report(1, "alignment fast == brute force", guarded(alignment_equivalence));
    report(2, "subspace score bound", guarded(subspace_bound));
    report(3, "null calibration", guarded(null_calibration));
    report(4, "SAE gradient check", guarded(sae_gradient));
    report(5, "planted subspace recovery", guarded(planted_recovery));
    report(6, "intervention identities", guarded(intervention_identities));
    EndToEnd e2e;
    e2e.run();
    report(7, "end-to-end clamp mitigation", guarded([&] { return end_to_end_mitigation(e2e); }));
    report(8, "amplify reverse direction", guarded([&] { return reverse_direction(e2e); }));
    report(9, "win-rate protocol", guarded(win_rate_protocol));
    report(10, "MinHash estimator", guarded(minhash_estimator));
    print_amplify_breakdown(e2e);
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
              << std::endl;
    return failures ? 1 : 0;
}
