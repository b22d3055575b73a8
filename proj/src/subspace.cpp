#include "subguard/subspace.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "binary_io.hpp"
#include "subguard/errors.hpp"

namespace subguard {

double SubspaceSpec::cutoff() const {
    if (dims.empty()) throw DomainError("empty subspace has no cutoff");
    return dims.back().score;
}

std::vector<std::size_t> SubspaceSpec::indices() const {
    std::vector<std::size_t> out;
    out.reserve(dims.size());
    for (const auto& d : dims) out.push_back(d.index);
    return out;
}

bool SubspaceSpec::contains(std::size_t index) const {
    return std::any_of(dims.begin(), dims.end(), [index](const ScoredDim& d) { return d.index == index; });
}

void SubspaceSpec::validate() const {
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i].index >= k)
            throw DomainError("subspace index " + std::to_string(dims[i].index) + " out of range for k = " +
                              std::to_string(k));
        if (!seen.insert(dims[i].index).second)
            throw DomainError("duplicate subspace index " + std::to_string(dims[i].index));
        if (i > 0 && dims[i].score > dims[i - 1].score) throw DomainError("subspace scores must be non-increasing");
    }
}

SubspaceSpec select_top_n(const AlignmentReport& report, std::size_t n, double tau) {
    report.validate();
    if (n < 1 || n > report.k)
        throw DomainError("n = " + std::to_string(n) + " outside [1, " + std::to_string(report.k) + "]");
    std::vector<std::size_t> order(report.k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        if (report.scores[a] != report.scores[b]) return report.scores[a] > report.scores[b];
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), better);
    SubspaceSpec spec;
    spec.k = report.k;
    spec.tau = tau;
    for (std::size_t i = 0; i < n; ++i) spec.dims.push_back({order[i], report.scores[order[i]]});
    return spec;
}

Eigen::VectorXd project(const Eigen::VectorXd& z, const SubspaceSpec& spec) {
    if (static_cast<std::size_t>(z.size()) != spec.k)
        throw DomainError("code has dimension " + std::to_string(z.size()) + ", subspace expects " +
                          std::to_string(spec.k));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(z.size());
    for (const auto& d : spec.dims) out[static_cast<Eigen::Index>(d.index)] = z[static_cast<Eigen::Index>(d.index)];
    return out;
}

std::string to_json(const SubspaceSpec& spec) {
    spec.validate();
    nlohmann::ordered_json j;
    j["k"] = spec.k;
    j["tau"] = spec.tau;
    j["n"] = spec.n();
    auto dims = nlohmann::ordered_json::array();
    for (const auto& d : spec.dims) {
        nlohmann::ordered_json entry;
        entry["index"] = d.index;
        entry["score"] = d.score;
        dims.push_back(std::move(entry));
    }
    j["dims"] = std::move(dims);
    j["provenance"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : spec.provenance) j["provenance"][key] = value;
    return j.dump(2) + "\n";
}

SubspaceSpec subspace_from_json(const std::string& text) {
    SubspaceSpec spec;
    try {
        const auto j = nlohmann::json::parse(text);
        spec.k = j.at("k").get<std::size_t>();
        spec.tau = j.at("tau").get<double>();
        const auto n = j.at("n").get<std::size_t>();
        for (const auto& entry : j.at("dims"))
            spec.dims.push_back({entry.at("index").get<std::size_t>(), entry.at("score").get<double>()});
        if (j.contains("provenance"))
            for (const auto& [key, value] : j.at("provenance").items()) spec.provenance[key] = value.get<std::string>();
        if (n != spec.dims.size()) throw FormatError("subspace n does not match the number of dims");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid subspace JSON: ") + e.what());
    }
    try {
        spec.validate();
    } catch (const DomainError& e) {
        throw FormatError(std::string("invalid subspace: ") + e.what());
    }
    return spec;
}

void save_subspace(const SubspaceSpec& spec, const std::filesystem::path& path) {
    const auto text = to_json(spec);
    detail::ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

SubspaceSpec load_subspace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return subspace_from_json(ss.str());
}

}  // namespace subguard
