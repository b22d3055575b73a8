#include "subguard/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "binary_io.hpp"
#include "subguard/alignment.hpp"
#include "subguard/errors.hpp"
#include "subguard/evalmetrics.hpp"
#include "subguard/intervene.hpp"
#include "subguard/pipeline.hpp"
#include "subguard/planted.hpp"
#include "subguard/sae.hpp"
#include "subguard/subspace.hpp"
#include "subguard/toylm.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace subguard {

namespace {

// Config fields whose flag is not simply the field name with dashes.
const std::map<std::string, std::string> kFieldFlags = {
    {"activation_scale", "--scale-min/--scale-max"},
    {"learning_rate", "--lr"},
    {"planted", "--planted-count"},
    {"d_model", "--d-model"},
};

std::string flag_for(const std::string& field) {
    if (auto it = kFieldFlags.find(field); it != kFieldFlags.end()) return it->second;
    std::string f = field;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string read_text(const fs::path& path) {
    const auto bytes = detail::read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text(const fs::path& path, const std::string& text) {
    detail::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void require_file(const fs::path& path, const char* flag) {
    if (!fs::is_regular_file(path)) throw ConfigError(std::string(flag + 2), "no such file: " + path.string());
}

// key=value lines, used for the small provenance sidecar next to the score CSV.
std::map<std::string, std::string> read_kv(const fs::path& path) {
    std::map<std::string, std::string> kv;
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

std::string file_hash(const fs::path& path) { return detail::hex64(detail::fnv1a64(detail::read_file(path))); }

void write_generations(const std::vector<GenerationRecord>& records, const std::vector<EvalPrompt>& prompts,
                       const fs::path& path) {
    std::string out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        ordered_json j;
        j["method"] = records[i].method;
        j["example_id"] = records[i].example_id;
        j["prompt"] = prompts[i].prompt;
        j["generated"] = records[i].generated;
        j["reference"] = records[i].reference;
        out += j.dump() + "\n";
    }
    write_text(path, out);
}

std::vector<GenerationRecord> read_generations(const fs::path& path) {
    std::vector<GenerationRecord> out;
    std::istringstream in(read_text(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            out.push_back({j.at("method").get<std::string>(), j.at("example_id").get<std::string>(),
                           j.at("generated").get<std::string>(), j.at("reference").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

ordered_json planted_config_json(const PlantedConfig& c) {
    ordered_json j;
    j["d"] = c.d;
    j["k"] = c.k;
    j["planted"] = c.planted;
    j["density"] = c.density;
    j["tokens_per_sample"] = c.tokens_per_sample;
    j["scale_min"] = c.scale_min;
    j["scale_max"] = c.scale_max;
    j["noise_sigma"] = c.noise_sigma;
    j["seed"] = c.seed;
    return j;
}

PlantedConfig planted_config_from_json(const nlohmann::json& j) {
    PlantedConfig c;
    c.d = j.at("d").get<int>();
    c.k = j.at("k").get<int>();
    c.planted = j.at("planted").get<std::vector<int>>();
    c.density = j.at("density").get<int>();
    c.tokens_per_sample = j.at("tokens_per_sample").get<int>();
    c.scale_min = j.at("scale_min").get<double>();
    c.scale_max = j.at("scale_max").get<double>();
    c.noise_sigma = j.at("noise_sigma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

std::vector<double> parse_cuts(const std::string& text) {
    std::vector<double> cuts;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            cuts.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("cuts", "not a number: " + item);
        }
    }
    if (cuts.empty()) throw ConfigError("cuts", "needs at least one fraction");
    return cuts;
}

struct Summary {
    std::vector<std::pair<std::string, std::string>> fields;
    Summary& add(const std::string& k, const std::string& v) {
        fields.emplace_back(k, v);
        return *this;
    }
    Summary& add(const std::string& k, double v) { return add(k, fmt(v)); }
    void print(std::ostream& out) const {
        for (std::size_t i = 0; i < fields.size(); ++i)
            out << (i ? " " : "") << fields[i].first << "=" << fields[i].second;
        out << "\n";
    }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Copyright-subspace toolkit: SAE training, alignment scoring, subspace selection and decode-time "
                 "intervention"};
    app.require_subcommand(1);
    std::string out_dir = "run";
    app.add_option("--out-dir", out_dir, "Root of the output layout (data/ sae/ scores/ subspace/ lm/ "
                                         "generations/ reports/)")
        ->capture_default_str();

    std::function<void()> action;
    auto dir = [&](const char* sub) { return fs::path(out_dir) / sub; };
    auto or_default = [&](const std::string& given, const char* sub, const char* file) {
        return given.empty() ? dir(sub) / file : fs::path(given);
    };

    // gen-planted
    PlantedConfig pc;
    int planted_count = 16, n_cr = 200, n_gen = 200;
    auto* gen = app.add_subcommand("gen-planted", "Synthetic activations with known copyright atoms");
    gen->add_option("--d", pc.d)->capture_default_str();
    gen->add_option("--k", pc.k)->capture_default_str();
    gen->add_option("--planted-count", planted_count)->capture_default_str();
    gen->add_option("--density", pc.density, "Background atoms per token")->capture_default_str();
    gen->add_option("--tokens-per-sample", pc.tokens_per_sample)->capture_default_str();
    gen->add_option("--scale-min", pc.scale_min)->capture_default_str();
    gen->add_option("--scale-max", pc.scale_max)->capture_default_str();
    gen->add_option("--noise-sigma", pc.noise_sigma)->capture_default_str();
    gen->add_option("--n-cr", n_cr)->capture_default_str();
    gen->add_option("--n-gen", n_gen)->capture_default_str();
    gen->add_option("--seed", pc.seed)->capture_default_str();
    gen->callback([&] {
        action = [&] {
            if (planted_count < 1 || planted_count > pc.k) throw ConfigError("planted", "count must lie in [1, k]");
            pc.planted = PlantedConfig::default_planted(planted_count, pc.k);
            if (n_cr < 1) throw ConfigError("n_cr", "must be >= 1");
            if (n_gen < 1) throw ConfigError("n_gen", "must be >= 1");
            pc.validate();
            const PlantedData data = generate_planted(pc, n_cr, n_gen);
            const fs::path dump = dir("data") / "planted.scpa";
            save_dump(data.dataset, dump);
            ordered_json gt;
            gt["ground_truth"] = data.ground_truth;
            gt["config"] = planted_config_json(pc);
            write_text(dir("data") / "ground_truth.json", gt.dump(2) + "\n");
            Summary()
                .add("stage", "gen-planted")
                .add("records", std::to_string(data.dataset.records.size()))
                .add("d", std::to_string(pc.d))
                .add("k", std::to_string(pc.k))
                .add("planted", std::to_string(pc.planted.size()))
                .add("dataset_hash", dataset_fingerprint(data.dataset))
                .add("out", dump.string())
                .print(out);
        };
    });

    // train-sae
    std::string dataset_path, sae_path;
    int sae_k = 512;
    double tau = kDefaultTau;
    TrainConfig tc;
    auto* train_sae = app.add_subcommand("train-sae", "Train a JumpReLU SAE on an activation dump");
    train_sae->add_option("--dataset", dataset_path, "Activation dump (default <out>/data/planted.scpa)");
    train_sae->add_option("--k", sae_k, "Dictionary size")->capture_default_str();
    train_sae->add_option("--tau", tau, "JumpReLU threshold")->capture_default_str();
    train_sae->add_option("--lambda", tc.lambda, "L1 penalty")->capture_default_str();
    train_sae->add_option("--lr", tc.learning_rate)->capture_default_str();
    train_sae->add_option("--epochs", tc.epochs)->capture_default_str();
    train_sae->add_option("--batch-size", tc.batch_size)->capture_default_str();
    train_sae->add_option("--seed", tc.seed)->capture_default_str();
    train_sae->add_flag("--normalize-decoder", tc.normalize_decoder, "Unit-norm decoder columns after each step");
    train_sae->callback([&] {
        action = [&] {
            const fs::path ds_path = or_default(dataset_path, "data", "planted.scpa");
            require_file(ds_path, "--dataset");
            if (sae_k < 1) throw ConfigError("k", "must be >= 1");
            if (!(tau > 0.0)) throw ConfigError("tau", "must be > 0");
            tc.validate();
            const ActivationDataset ds = load_dump(ds_path);
            TrainHistory hist;
            const SaeModel model = train(ds, sae_k, tau, tc, &hist);
            const fs::path ckpt = dir("sae") / "sae.scpm";
            save_checkpoint(model, ckpt);
            std::string csv = "epoch,loss\n0," + fmt(hist.initial_loss) + "\n";
            for (std::size_t e = 0; e < hist.epoch_loss.size(); ++e)
                csv += std::to_string(e + 1) + "," + fmt(hist.epoch_loss[e]) + "\n";
            write_text(dir("sae") / "history.csv", csv);
            Summary()
                .add("stage", "train-sae")
                .add("k", std::to_string(sae_k))
                .add("tau", tau)
                .add("initial_loss", hist.initial_loss)
                .add("final_loss", hist.epoch_loss.back())
                .add("dataset_hash", dataset_fingerprint(ds))
                .add("sae_hash", checkpoint_fingerprint(model))
                .add("out", ckpt.string())
                .print(out);
        };
    });

    // score
    auto* score = app.add_subcommand("score", "Copyright alignment score of every SAE dimension");
    score->add_option("--dataset", dataset_path, "Activation dump (default <out>/data/planted.scpa)");
    score->add_option("--sae", sae_path, "SAE checkpoint (default <out>/sae/sae.scpm)");
    score->callback([&] {
        action = [&] {
            const fs::path ds_path = or_default(dataset_path, "data", "planted.scpa");
            const fs::path model_path = or_default(sae_path, "sae", "sae.scpm");
            require_file(ds_path, "--dataset");
            require_file(model_path, "--sae");
            const ActivationDataset ds = load_dump(ds_path);
            const SaeModel model = load_checkpoint(model_path);
            const auto pooled = pool_codes(model, ds);
            const AlignmentReport report = score_report(pooled);
            write_report_csv(report, dir("scores") / "alignment.csv");
            write_stats_csv(dimension_stats(pooled, model.tau), dir("scores") / "stats.csv");
            const std::string ds_hash = dataset_fingerprint(ds), sae_hash = checkpoint_fingerprint(model);
            write_text(dir("scores") / "provenance.txt", "dataset_hash=" + ds_hash + "\nsae_hash=" + sae_hash +
                                                             "\ntau=" + fmt(model.tau) + "\n");
            const double best = *std::max_element(report.scores.begin(), report.scores.end());
            double mean = 0.0;
            for (double s : report.scores) mean += s;
            mean /= static_cast<double>(report.scores.size());
            Summary()
                .add("stage", "score")
                .add("k", std::to_string(report.k))
                .add("n_cr", std::to_string(report.n_cr))
                .add("n_gen", std::to_string(report.n_gen))
                .add("max_score", best)
                .add("mean_score", mean)
                .add("dataset_hash", ds_hash)
                .add("sae_hash", sae_hash)
                .add("out", (dir("scores") / "alignment.csv").string())
                .print(out);
        };
    });

    // select
    std::string scores_path;
    long long select_n = 16;
    auto* select = app.add_subcommand("select", "Top-n dimensions by alignment score");
    select->add_option("--scores", scores_path, "Alignment CSV (default <out>/scores/alignment.csv)");
    select->add_option("--n", select_n, "Subspace size")->capture_default_str();
    auto* select_tau = select->add_option("--tau", tau, "Threshold recorded with the subspace (default: the SAE's)");
    select->callback([&] {
        action = [&] {
            const fs::path path = or_default(scores_path, "scores", "alignment.csv");
            require_file(path, "--scores");
            const AlignmentReport report = read_report_csv(path);
            if (select_n < 1 || static_cast<std::size_t>(select_n) > report.k)
                throw ConfigError("n", "must lie in [1, k] with k = " + std::to_string(report.k));
            std::map<std::string, std::string> prov;
            if (const auto side = path.parent_path() / "provenance.txt"; fs::is_regular_file(side)) prov = read_kv(side);
            double t = tau;
            if (select_tau->count() == 0 && prov.count("tau")) t = std::stod(prov["tau"]);
            if (!(t > 0.0)) throw ConfigError("tau", "must be > 0");
            SubspaceSpec spec = select_top_n(report, static_cast<std::size_t>(select_n), t);
            spec.provenance = prov;
            spec.provenance.erase("tau");
            spec.provenance["scores_hash"] = file_hash(path);
            const fs::path dst = dir("subspace") / "subspace.json";
            save_subspace(spec, dst);
            const auto idx = spec.indices();
            Summary()
                .add("stage", "select")
                .add("n", std::to_string(spec.n()))
                .add("k", std::to_string(spec.k))
                .add("cutoff", spec.cutoff())
                .add("subspace_score", subspace_score(report, idx))
                .add("out", dst.string())
                .print(out);
        };
    });

    // make-corpus
    std::string passages_path = "data/protected.txt";
    int repeats = 200;
    long long filler_chars = -1;
    std::uint64_t seed = 0;
    auto* make_corpus = app.add_subcommand("make-corpus", "Protected passages repeated among synthetic filler");
    make_corpus->add_option("--passages", passages_path, "Blank-line separated passages")->capture_default_str();
    make_corpus->add_option("--repeats", repeats)->capture_default_str();
    make_corpus->add_option("--filler-chars", filler_chars, "Default: as many characters as the repeated passages");
    make_corpus->add_option("--seed", seed)->capture_default_str();
    make_corpus->callback([&] {
        action = [&] {
            require_file(passages_path, "--passages");
            const auto passages = parse_passages(read_text(passages_path));
            if (repeats < 1) throw ConfigError("repeats", "must be >= 1");
            std::size_t passage_chars = 0;
            for (const auto& p : passages) passage_chars += p.size();
            const std::size_t n_filler =
                filler_chars >= 0 ? static_cast<std::size_t>(filler_chars) : passage_chars * repeats;
            const std::string corpus =
                build_corpus(passages, synthetic_filler(n_filler, seed + 1), repeats, seed + 2);
            const fs::path dst = dir("data") / "corpus.txt";
            write_text(dst, corpus);
            Summary()
                .add("stage", "make-corpus")
                .add("passages", std::to_string(passages.size()))
                .add("chars", std::to_string(corpus.size()))
                .add("out", dst.string())
                .print(out);
        };
    });

    // train-lm
    std::string corpus_path;
    ToyLmConfig lmc;
    ToyLmTrainConfig ltc;
    auto* train_lm = app.add_subcommand("train-lm", "Train the character-level toy LM until it memorises");
    train_lm->add_option("--corpus", corpus_path, "Training text (default <out>/data/corpus.txt)");
    train_lm->add_option("--passages", passages_path)->capture_default_str();
    train_lm->add_option("--d-model", lmc.d_model)->capture_default_str();
    train_lm->add_option("--n-layers", lmc.n_layers)->capture_default_str();
    train_lm->add_option("--n-heads", lmc.n_heads)->capture_default_str();
    train_lm->add_option("--mlp-hidden", lmc.mlp_hidden)->capture_default_str();
    train_lm->add_option("--context-len", lmc.context_len)->capture_default_str();
    train_lm->add_option("--hook-layer", lmc.hook_layer)->capture_default_str();
    train_lm->add_option("--seed", lmc.seed)->capture_default_str();
    train_lm->add_option("--steps", ltc.steps, "Steps before the first memorisation check")->capture_default_str();
    train_lm->add_option("--max-steps", ltc.max_steps)->capture_default_str();
    train_lm->add_option("--batch-size", ltc.batch_size)->capture_default_str();
    train_lm->add_option("--lr", ltc.learning_rate)->capture_default_str();
    train_lm->callback([&] {
        action = [&] {
            const fs::path cpath = or_default(corpus_path, "data", "corpus.txt");
            require_file(cpath, "--corpus");
            require_file(passages_path, "--passages");
            ltc.validate();
            const auto passages = parse_passages(read_text(passages_path));
            MemorizationReport rep;
            const ToyLm lm = train_toy_lm(read_text(cpath), passages, lmc, ltc, &rep);
            const fs::path dst = dir("lm") / "toy.scpl";
            save_toy_lm(lm, dst);
            const double worst =
                rep.similarity.empty() ? 1.0 : *std::min_element(rep.similarity.begin(), rep.similarity.end());
            Summary()
                .add("stage", "train-lm")
                .add("vocab", std::to_string(lm.config().vocab))
                .add("params", std::to_string(lm.params().parameter_count()))
                .add("steps", std::to_string(rep.steps))
                .add("loss", rep.final_loss)
                .add("min_memorization", worst)
                .add("out", dst.string())
                .print(out);
        };
    });

    // dump-activations
    std::string lm_path, general_path;
    CollectConfig cc;
    auto* dump = app.add_subcommand("dump-activations", "Hook-layer residuals of the toy LM as an activation dump");
    dump->add_option("--lm", lm_path, "Toy LM checkpoint (default <out>/lm/toy.scpl)");
    dump->add_option("--passages", passages_path)->capture_default_str();
    dump->add_option("--general", general_path, "General text (default: synthetic filler)");
    dump->add_option("--stride", cc.stride)->capture_default_str();
    dump->add_option("--general-records", cc.general_records)->capture_default_str();
    dump->add_option("--seed", cc.seed)->capture_default_str();
    dump->callback([&] {
        action = [&] {
            const fs::path lpath = or_default(lm_path, "lm", "toy.scpl");
            require_file(lpath, "--lm");
            require_file(passages_path, "--passages");
            const ToyLm lm = load_toy_lm(lpath);
            std::string general;
            if (general_path.empty()) {
                general = synthetic_filler(20000, cc.seed + 7);
            } else {
                require_file(general_path, "--general");
                general = read_text(general_path);
            }
            const ActivationDataset ds =
                collect_activations(lm, parse_passages(read_text(passages_path)), general, cc);
            const fs::path dst = dir("data") / "toy.scpa";
            save_dump(ds, dst);
            Summary()
                .add("stage", "dump-activations")
                .add("records", std::to_string(ds.records.size()))
                .add("copyrighted", std::to_string(ds.count(CorpusLabel::Copyrighted)))
                .add("general", std::to_string(ds.count(CorpusLabel::General)))
                .add("d", std::to_string(ds.d))
                .add("dataset_hash", dataset_fingerprint(ds))
                .add("out", dst.string())
                .print(out);
        };
    });

    // clamp-decode
    std::string subspace_path, mode_text = "clamp", method_name, cuts_text = "0.35,0.5,0.65";
    double alpha = 1.0;
    bool include_prompt = false;
    auto* decode = app.add_subcommand("clamp-decode", "Greedy continuations of protected prompts with an intervention");
    decode->add_option("--lm", lm_path, "Toy LM checkpoint (default <out>/lm/toy.scpl)");
    decode->add_option("--sae", sae_path, "SAE checkpoint (default <out>/sae/sae.scpm)");
    decode->add_option("--subspace", subspace_path, "Subspace JSON (default <out>/subspace/subspace.json)");
    decode->add_option("--passages", passages_path)->capture_default_str();
    decode->add_option("--mode", mode_text, "vanilla | passthrough | clamp | amplify")->capture_default_str();
    auto* decode_tau = decode->add_option("--tau", tau, "Clamp threshold (default: the subspace's)");
    decode->add_option("--alpha", alpha, "Amplification factor")->capture_default_str();
    decode->add_option("--method", method_name, "Method label (default derived from mode and alpha)");
    decode->add_option("--cuts", cuts_text, "Prompt cut points as passage fractions")->capture_default_str();
    decode->add_flag("--include-prompt", include_prompt, "Also intervene on prompt positions");
    decode->callback([&] {
        action = [&] {
            const fs::path lpath = or_default(lm_path, "lm", "toy.scpl");
            require_file(lpath, "--lm");
            require_file(passages_path, "--passages");
            const ToyLm lm = load_toy_lm(lpath);
            const auto prompts = make_eval_prompts(parse_passages(read_text(passages_path)), parse_cuts(cuts_text));
            std::optional<DecodeHook> hook;
            SaeModel model;
            std::string label = mode_text;
            if (mode_text != "vanilla") {
                InterventionMode mode;
                try {
                    mode = parse_mode(mode_text);
                } catch (const DomainError& e) {
                    throw ConfigError("mode", e.what());
                }
                const fs::path spath = or_default(sae_path, "sae", "sae.scpm");
                const fs::path subpath = or_default(subspace_path, "subspace", "subspace.json");
                require_file(spath, "--sae");
                require_file(subpath, "--subspace");
                model = load_checkpoint(spath);
                SubspaceSpec spec = load_subspace(subpath);
                if (spec.k != static_cast<std::size_t>(model.dict_size()))
                    throw ConfigError("subspace", "k = " + std::to_string(spec.k) + " does not match the SAE");
                InterventionConfig ic{mode, spec, decode_tau->count() ? tau : spec.tau, alpha};
                ic.validate();
                hook = DecodeHook{&model, ic, include_prompt};
                if (mode == InterventionMode::Amplify) label = "amplify_" + fmt(alpha);
            }
            if (!method_name.empty()) label = method_name;
            const auto records = generate(lm, prompts, label, hook);
            const fs::path dst = dir("generations") / (label + ".jsonl");
            write_generations(records, prompts, dst);
            Summary()
                .add("stage", "clamp-decode")
                .add("method", label)
                .add("prompts", std::to_string(records.size()))
                .add("mean_levenshtein", mean_levenshtein(records))
                .add("out", dst.string())
                .print(out);
        };
    });

    // evaluate
    std::vector<std::string> generation_files;
    MinHashConfig mh;
    auto* evaluate = app.add_subcommand("evaluate", "Similarity metrics of generations against references");
    evaluate->add_option("--generations", generation_files, "JSONL files (default: every <out>/generations/*.jsonl)");
    evaluate->add_option("--shingle-words", mh.shingle_words)->capture_default_str();
    evaluate->add_option("--permutations", mh.permutations)->capture_default_str();
    evaluate->add_option("--minhash-seed", mh.seed)->capture_default_str();
    evaluate->callback([&] {
        action = [&] {
            std::vector<fs::path> files(generation_files.begin(), generation_files.end());
            if (files.empty() && fs::is_directory(dir("generations")))
                for (const auto& e : fs::directory_iterator(dir("generations")))
                    if (e.path().extension() == ".jsonl") files.push_back(e.path());
            std::sort(files.begin(), files.end());
            if (files.empty()) throw ConfigError("generations", "no generation files found");
            std::vector<GenerationRecord> records;
            for (const auto& f : files) {
                require_file(f, "--generations");
                auto part = read_generations(f);
                records.insert(records.end(), part.begin(), part.end());
            }
            const MetricMatrix m = score_generations(records, mh);
            const fs::path dst = dir("reports") / "metrics.csv";
            write_matrix_csv(m, dst);
            Summary s;
            s.add("stage", "evaluate")
                .add("methods", std::to_string(m.methods.size()))
                .add("examples", std::to_string(m.examples.size()));
            for (const auto& method : m.methods) {
                const std::size_t mi = m.method_index(method);
                double lev = 0.0;
                for (std::size_t e = 0; e < m.examples.size(); ++e) lev += m.at(mi, e, 0);
                s.add("levenshtein_" + method, lev / static_cast<double>(m.examples.size()));
            }
            s.add("out", dst.string()).print(out);
        };
    });

    // report
    std::vector<std::string> metric_files;
    std::string ground_truth_path;
    auto* report = app.add_subcommand("report", "Win rates, planted recall and an SVG chart");
    report->add_option("--metrics", metric_files, "Metric CSVs (default <out>/reports/metrics.csv when present)");
    report->add_option("--ground-truth", ground_truth_path, "Planted ground truth JSON (enables recall)");
    report->add_option("--sae", sae_path, "SAE checkpoint (default <out>/sae/sae.scpm)");
    report->add_option("--subspace", subspace_path, "Subspace JSON (default <out>/subspace/subspace.json)");
    report->callback([&] {
        action = [&] {
            std::vector<fs::path> files(metric_files.begin(), metric_files.end());
            if (files.empty() && fs::is_regular_file(dir("reports") / "metrics.csv"))
                files.push_back(dir("reports") / "metrics.csv");
            fs::path gt_path = ground_truth_path;
            if (gt_path.empty() && files.empty() && fs::is_regular_file(dir("data") / "ground_truth.json"))
                gt_path = dir("data") / "ground_truth.json";
            if (files.empty() && gt_path.empty())
                throw ConfigError("metrics", "nothing to report: give --metrics or --ground-truth");

            ordered_json doc;
            Summary s;
            s.add("stage", "report");
            if (!files.empty()) {
                std::vector<MetricMatrix> parts;
                for (const auto& f : files) {
                    require_file(f, "--metrics");
                    parts.push_back(read_matrix_csv(f));
                }
                const MetricMatrix m = merge_matrices(parts);
                std::vector<std::pair<std::string, double>> rates;
                std::string csv = "method,win_rate";
                for (const auto& metric : m.metrics) csv += ",win_rate_" + metric;
                csv += "\n";
                for (const auto& method : m.methods) {
                    const double w = win_rate(m, method);
                    rates.emplace_back(method, w);
                    csv += method + "," + fmt(w);
                    for (const auto& metric : m.metrics) csv += "," + fmt(win_rate_on_metric(m, method, metric));
                    csv += "\n";
                    doc["win_rate"][method] = w;
                    s.add("win_rate_" + method, w);
                }
                write_text(dir("reports") / "win_rates.csv", csv);
                write_text(dir("reports") / "win_rates.svg", win_rate_svg(rates));
            }
            if (!gt_path.empty()) {
                require_file(gt_path, "--ground-truth");
                const fs::path spath = or_default(sae_path, "sae", "sae.scpm");
                const fs::path subpath = or_default(subspace_path, "subspace", "subspace.json");
                require_file(spath, "--sae");
                require_file(subpath, "--subspace");
                nlohmann::json gt;
                try {
                    gt = nlohmann::json::parse(read_text(gt_path));
                } catch (const nlohmann::json::exception& e) {
                    throw FormatError("ground truth: " + std::string(e.what()));
                }
                const PlantedConfig cfg = planted_config_from_json(gt.at("config"));
                const SaeModel model = load_checkpoint(spath);
                const SubspaceSpec spec = load_subspace(subpath);
                std::vector<int> selected;
                for (std::size_t i : spec.indices()) selected.push_back(static_cast<int>(i));
                const double recall =
                    planted_recall(model.decoder_weight, selected, planted_dictionary(cfg), cfg.planted);
                doc["planted_recall"] = recall;
                doc["subspace_n"] = spec.n();
                s.add("planted_recall", recall);
            }
            const fs::path dst = dir("reports") / "report.json";
            write_text(dst, doc.dump(2) + "\n");
            s.add("out", dst.string()).print(out);
        };
    });

    // logit-lens
    std::size_t feature = 0, top_m = 10;
    auto* lens = app.add_subcommand("logit-lens", "Tokens promoted and suppressed by one SAE feature");
    lens->add_option("--lm", lm_path, "Toy LM checkpoint (default <out>/lm/toy.scpl)");
    lens->add_option("--sae", sae_path, "SAE checkpoint (default <out>/sae/sae.scpm)");
    lens->add_option("--feature", feature)->required();
    lens->add_option("--top-m", top_m)->capture_default_str();
    lens->callback([&] {
        action = [&] {
            const fs::path lpath = or_default(lm_path, "lm", "toy.scpl");
            const fs::path spath = or_default(sae_path, "sae", "sae.scpm");
            require_file(lpath, "--lm");
            require_file(spath, "--sae");
            const ToyLm lm = load_toy_lm(lpath);
            const SaeModel model = load_checkpoint(spath);
            if (feature >= static_cast<std::size_t>(model.dict_size()))
                throw ConfigError("feature", "must be < k = " + std::to_string(model.dict_size()));
            const LogitLensResult r = logit_lens(lm, model, feature, top_m);
            std::string csv = "side,rank,token_id,token,logit\n";
            auto quote = [](const std::string& t) {
                std::string q = "\"";
                for (char c : t) q += c == '"' ? std::string("\"\"") : std::string(1, c);
                return q + "\"";
            };
            for (std::size_t i = 0; i < r.promoted.size(); ++i)
                csv += "promoted," + std::to_string(i) + "," + std::to_string(r.promoted[i].token_id) + "," +
                       quote(r.promoted[i].token) + "," + fmt(r.promoted[i].logit) + "\n";
            for (std::size_t i = 0; i < r.suppressed.size(); ++i)
                csv += "suppressed," + std::to_string(i) + "," + std::to_string(r.suppressed[i].token_id) + "," +
                       quote(r.suppressed[i].token) + "," + fmt(r.suppressed[i].logit) + "\n";
            const fs::path dst = dir("reports") / ("logit_lens_" + std::to_string(feature) + ".csv");
            write_text(dst, csv);
            Summary()
                .add("stage", "logit-lens")
                .add("feature", std::to_string(feature))
                .add("top_promoted", std::to_string(r.promoted.empty() ? -1 : r.promoted[0].token_id))
                .add("top_suppressed", std::to_string(r.suppressed.empty() ? -1 : r.suppressed[0].token_id))
                .add("out", dst.string())
                .print(out);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        action();
        return kExitOk;
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(": ");
        err << "error: " << flag_for(e.field()) << ": " << (colon == std::string::npos ? msg : msg.substr(colon + 2))
            << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace subguard
