#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "subguard/activations.hpp"
#include "subguard/alignment.hpp"
#include "subguard/errors.hpp"
#include "subguard/evalmetrics.hpp"
#include "subguard/intervene.hpp"
#include "subguard/planted.hpp"
#include "subguard/sae.hpp"
#include "subguard/subspace.hpp"

namespace py = pybind11;
using namespace subguard;

namespace {

std::vector<std::uint8_t> to_vector(const py::bytes& b) {
    const std::string s = b;
    return {s.begin(), s.end()};
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
    return {reinterpret_cast<const char*>(v.data()), v.size()};
}

}  // namespace

PYBIND11_MODULE(_subguard, m) {
    m.doc() = "Sparse-subspace copyright mitigation toolkit (C++ core).";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto domain = py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<CorruptionError>(m, "CorruptionError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
    py::register_exception<TokenizationError>(m, "TokenizationError", domain.ptr());

    py::enum_<CorpusLabel>(m, "CorpusLabel")
        .value("GENERAL", CorpusLabel::General)
        .value("COPYRIGHTED", CorpusLabel::Copyrighted);

    py::class_<ActivationRecord>(m, "ActivationRecord")
        .def(py::init([](CorpusLabel label, const DenseSequence& vectors) {
                 return ActivationRecord{label, vectors};
             }),
             py::arg("label"), py::arg("vectors"))
        .def_readwrite("label", &ActivationRecord::label)
        .def_readwrite("vectors", &ActivationRecord::vectors);

    py::class_<ActivationDataset>(m, "ActivationDataset")
        .def(py::init<>())
        .def_readwrite("d", &ActivationDataset::d)
        .def_readwrite("records", &ActivationDataset::records)
        .def_readwrite("metadata", &ActivationDataset::metadata)
        .def("validate", &ActivationDataset::validate)
        .def("count", &ActivationDataset::count)
        .def("__eq__", [](const ActivationDataset& a, const ActivationDataset& b) { return a == b; });

    m.def("encode_dump", [](const ActivationDataset& ds) { return to_bytes(encode_dump(ds)); });
    m.def("decode_dump", [](const py::bytes& b) { return decode_dump(to_vector(b)); });
    m.def("save_dump", &save_dump);
    m.def("load_dump", &load_dump);
    m.def("dataset_fingerprint", &dataset_fingerprint);

    py::class_<SaeModel>(m, "SaeModel")
        .def_static("zeros", &SaeModel::zeros, py::arg("d"), py::arg("k"), py::arg("tau") = kDefaultTau)
        .def_readwrite("encoder_weight", &SaeModel::encoder_weight)
        .def_readwrite("encoder_bias", &SaeModel::encoder_bias)
        .def_readwrite("decoder_weight", &SaeModel::decoder_weight)
        .def_readwrite("decoder_bias", &SaeModel::decoder_bias)
        .def_readwrite("tau", &SaeModel::tau)
        .def_property_readonly("input_dim", &SaeModel::input_dim)
        .def_property_readonly("dict_size", &SaeModel::dict_size);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("normalize_decoder", &TrainConfig::normalize_decoder);

    m.def("jump_relu", &jump_relu, py::arg("x"), py::arg("tau"));
    m.def("encode", &encode, py::arg("model"), py::arg("h"));
    m.def("decode", &decode, py::arg("model"), py::arg("z"));
    m.def("loss", &loss, py::arg("model"), py::arg("h"), py::arg("lambda_"));
    m.def("init_model", &init_model, py::arg("d"), py::arg("k"), py::arg("tau"), py::arg("seed"));
    m.def(
        "train",
        [](const ActivationDataset& ds, Eigen::Index k, double tau, const TrainConfig& config) {
            py::gil_scoped_release release;
            return train(ds, k, tau, config);
        },
        py::arg("dataset"), py::arg("k"), py::arg("tau") = kDefaultTau, py::arg("config") = TrainConfig{});
    m.def("save_checkpoint", &save_checkpoint);
    m.def("load_checkpoint", &load_checkpoint);

    py::class_<PooledVector>(m, "PooledVector")
        .def(py::init([](CorpusLabel label, const Eigen::VectorXd& values) { return PooledVector{label, values}; }))
        .def_readwrite("label", &PooledVector::label)
        .def_readwrite("values", &PooledVector::values);
    m.def("pool_codes", &pool_codes);

    py::class_<AlignmentReport>(m, "AlignmentReport")
        .def_readonly("k", &AlignmentReport::k)
        .def_readonly("scores", &AlignmentReport::scores)
        .def_readonly("n_cr", &AlignmentReport::n_cr)
        .def_readonly("n_gen", &AlignmentReport::n_gen);
    m.def("score_dimension", [](const std::vector<double>& cr, const std::vector<double>& gen) {
        return score_dimension(cr, gen);
    });
    m.def("score_dimension_fast", [](const std::vector<double>& cr, const std::vector<double>& gen) {
        return score_dimension_fast(cr, gen);
    });
    m.def("score_report", [](const std::vector<PooledVector>& pooled) { return score_report(pooled); });

    py::class_<SubspaceSpec>(m, "SubspaceSpec")
        .def_readonly("k", &SubspaceSpec::k)
        .def_readwrite("tau", &SubspaceSpec::tau)
        .def("indices", &SubspaceSpec::indices)
        .def("cutoff", &SubspaceSpec::cutoff)
        .def("to_json", [](const SubspaceSpec& s) { return to_json(s); });
    m.def("select_top_n", &select_top_n, py::arg("report"), py::arg("n"), py::arg("tau") = kDefaultTau);
    m.def("subspace_from_json", &subspace_from_json);

    py::enum_<InterventionMode>(m, "InterventionMode")
        .value("PASSTHROUGH", InterventionMode::Passthrough)
        .value("CLAMP", InterventionMode::Clamp)
        .value("AMPLIFY", InterventionMode::Amplify);
    m.def("clamp_code", &clamp_code, py::arg("z"), py::arg("spec"), py::arg("tau"));
    m.def("amplify_code", &amplify_code, py::arg("z"), py::arg("spec"), py::arg("alpha"));
    m.def(
        "apply_hook",
        [](const SaeModel& model, const Eigen::VectorXd& h, InterventionMode mode, const SubspaceSpec& spec,
           double tau, double alpha) { return apply_hook(model, h, {mode, spec, tau, alpha}); },
        py::arg("model"), py::arg("h"), py::arg("mode"), py::arg("spec"), py::arg("tau") = kDefaultTau,
        py::arg("alpha") = 1.0);

    py::class_<PlantedConfig>(m, "PlantedConfig")
        .def(py::init<>())
        .def_readwrite("d", &PlantedConfig::d)
        .def_readwrite("k", &PlantedConfig::k)
        .def_readwrite("planted", &PlantedConfig::planted)
        .def_readwrite("density", &PlantedConfig::density)
        .def_readwrite("tokens_per_sample", &PlantedConfig::tokens_per_sample)
        .def_readwrite("scale_min", &PlantedConfig::scale_min)
        .def_readwrite("scale_max", &PlantedConfig::scale_max)
        .def_readwrite("noise_sigma", &PlantedConfig::noise_sigma)
        .def_readwrite("seed", &PlantedConfig::seed);
    py::class_<PlantedData>(m, "PlantedData")
        .def_readonly("dataset", &PlantedData::dataset)
        .def_readonly("ground_truth", &PlantedData::ground_truth)
        .def_readonly("dictionary", &PlantedData::dictionary);
    m.def("generate_planted", &generate_planted, py::arg("config"), py::arg("n_cr"), py::arg("n_gen"));
    m.def("planted_recall", &planted_recall, py::arg("decoder_weight"), py::arg("selected_features"),
          py::arg("dictionary"), py::arg("planted"), py::arg("min_cosine") = 0.5);

    m.def("levenshtein_similarity", &levenshtein_similarity);
    m.def("exact_jaccard", &exact_jaccard, py::arg("a"), py::arg("b"), py::arg("shingle_words") = 3);
    m.def(
        "minhash_similarity",
        [](std::string_view a, std::string_view b, int shingle_words, int permutations, std::uint64_t seed) {
            return minhash_similarity(a, b, {shingle_words, permutations, seed});
        },
        py::arg("a"), py::arg("b"), py::arg("shingle_words") = 3, py::arg("permutations") = 256,
        py::arg("seed") = 0);
    m.def("ngram_cosine", &ngram_cosine, py::arg("a"), py::arg("b"), py::arg("n") = 3);
    m.def(
        "win_rates",
        [](const std::vector<std::tuple<std::string, std::string, std::string, std::string>>& rows) {
            std::vector<GenerationRecord> recs;
            for (const auto& [method, id, generated, reference] : rows) recs.push_back({method, id, generated, reference});
            const MetricMatrix mm = score_generations(recs);
            std::map<std::string, double> out;
            for (const auto& name : mm.methods) out[name] = win_rate(mm, name);
            return out;
        },
        py::arg("rows"), "Win rate per method for (method, example_id, generated, reference) rows.");
}
