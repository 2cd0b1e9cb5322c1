#include "siphi/data/manifest.hpp"

#include <fstream>
#include <set>

namespace siphi::data {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void validate(const Manifest& m) {
    if (m.sfm.layers <= 0 || m.sfm.channels <= 0) throw ManifestError("manifest: SFM layers/channels must be positive");
    const auto f = m.audiogram_frequencies.size();
    if (f == 0) throw ManifestError("manifest: empty audiogram frequency grid");
    std::set<std::string> ids;
    for (const auto& s : m.samples) {
        if (s.sample_id.empty()) throw ManifestError("manifest: empty sample_id");
        if (!ids.insert(s.sample_id).second) throw ManifestError("manifest: duplicate sample_id '" + s.sample_id + "'");
        if (s.listener_id.empty()) throw ManifestError("manifest: sample '" + s.sample_id + "' has empty listener_id");
        if (!(s.score >= 0.0 && s.score <= 100.0))
            throw ManifestError("manifest: sample '" + s.sample_id + "' score " + std::to_string(s.score) +
                                " outside [0, 100]");
        if (s.audiogram.left.size() != f || s.audiogram.right.size() != f)
            throw ManifestError("manifest: sample '" + s.sample_id + "' audiogram length does not match the " +
                                std::to_string(f) + "-frequency grid");
        for (const auto* ear : {&s.audiogram.left, &s.audiogram.right})
            for (double t : *ear)
                if (!(t >= -10.0 && t <= 120.0))
                    throw ManifestError("manifest: sample '" + s.sample_id + "' threshold outside [-10, 120] dB HL");
        if (s.feature_path.empty()) throw ManifestError("manifest: sample '" + s.sample_id + "' has no feature_path");
    }
}

ojson to_json(const SfmDescriptor& d) {
    ojson j;
    j["name"] = d.name;
    j["layers"] = d.layers;
    j["channels"] = d.channels;
    if (d.attributes) {
        j["attributes"] = {{"asr_wer", d.attributes->asr_wer},
                           {"data_hours", d.attributes->data_hours},
                           {"arch_date", d.attributes->arch_date},
                           {"train_task_count", d.attributes->train_task_count}};
    }
    return j;
}

SfmDescriptor sfm_from_json(const json& j) {
    SfmDescriptor d;
    d.name = j.at("name").get<std::string>();
    d.layers = j.at("layers").get<int>();
    d.channels = j.at("channels").get<int>();
    if (j.contains("attributes") && !j["attributes"].is_null()) {
        const auto& a = j["attributes"];
        d.attributes = SfmAttributes{a.at("asr_wer").get<double>(), a.at("data_hours").get<double>(),
                                     a.at("arch_date").get<std::string>(), a.at("train_task_count").get<int>()};
    }
    return d;
}

ojson to_json(const Manifest& m) {
    ojson j;
    j["sfm"] = to_json(m.sfm);
    j["audiogram_frequencies"] = m.audiogram_frequencies;
    auto& samples = j["samples"] = ojson::array();
    for (const auto& s : m.samples) {
        ojson e;
        e["sample_id"] = s.sample_id;
        e["listener_id"] = s.listener_id;
        e["system_id"] = s.system_id;
        e["score"] = s.score;
        e["feature_path"] = s.feature_path;
        e["audiogram"] = {{"left", s.audiogram.left}, {"right", s.audiogram.right}};
        samples.push_back(std::move(e));
    }
    return j;
}

Manifest manifest_from_json(const json& j, const std::filesystem::path& base_dir) {
    Manifest m;
    try {
        m.sfm = sfm_from_json(j.at("sfm"));
        m.audiogram_frequencies = j.at("audiogram_frequencies").get<std::vector<double>>();
        for (const auto& e : j.at("samples")) {
            Sample s;
            s.sample_id = e.at("sample_id").get<std::string>();
            s.listener_id = e.at("listener_id").get<std::string>();
            s.system_id = e.value("system_id", std::string{});
            s.score = e.at("score").get<double>();
            s.feature_path = e.at("feature_path").get<std::string>();
            s.audiogram.left = e.at("audiogram").at("left").get<std::vector<double>>();
            s.audiogram.right = e.at("audiogram").at("right").get<std::vector<double>>();
            m.samples.push_back(std::move(s));
        }
    } catch (const json::exception& ex) {
        throw ManifestError(std::string("manifest: ") + ex.what());
    }
    m.base_dir = base_dir;
    validate(m);
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& ex) {
        throw ManifestError("manifest '" + path.string() + "': " + ex.what());
    }
    return manifest_from_json(j, path.parent_path());
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    validate(m);
    write_text_file(path, to_json(m).dump(2) + "\n");
}

std::size_t Dataset::index_of(const std::string& sample_id) const {
    for (std::size_t i = 0; i < manifest.samples.size(); ++i)
        if (manifest.samples[i].sample_id == sample_id) return i;
    throw DomainError("unknown sample id '" + sample_id + "'");
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    Dataset ds;
    ds.manifest = load_manifest(manifest_path);
    const auto n = ds.manifest.samples.size();
    ds.features.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = ds.manifest.samples[i];
        auto t = read_feature_file(ds.manifest.feature_file(s));
        if (static_cast<int>(t.layers()) != ds.manifest.sfm.layers ||
            static_cast<int>(t.channels()) != ds.manifest.sfm.channels)
            throw ShapeError("feature file for sample '" + s.sample_id + "' declares " + std::to_string(t.layers()) +
                             " layers x " + std::to_string(t.channels()) + " channels, SFM '" + ds.manifest.sfm.name +
                             "' expects " + std::to_string(ds.manifest.sfm.layers) + " x " +
                             std::to_string(ds.manifest.sfm.channels));
        ds.features[i] = std::move(t);
    }
    return ds;
}

std::uint64_t dataset_hash(const std::filesystem::path& manifest_path) {
    auto h = fnv1a64(read_file_bytes(manifest_path));
    const auto m = load_manifest(manifest_path);
    for (const auto& s : m.samples) h = fnv1a64(read_file_bytes(m.feature_file(s)), h);
    return h;
}

}  // namespace siphi::data
