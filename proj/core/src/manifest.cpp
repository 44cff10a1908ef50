#include "cif/manifest.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cif/tensor_io.hpp"

namespace cif {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) { known = true; break; }
        if (!known)
            throw CifError(ErrorCode::InvalidConfig,
                           "unknown key '" + it.key() + "' in " + where);
    }
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw CifError(ErrorCode::InvalidConfig, "unknown split '" + s + "'");
}

Label label_from_string(const std::string& s) {
    if (s == "normal") return Label::Normal;
    if (s == "anomalous") return Label::Anomalous;
    throw CifError(ErrorCode::InvalidConfig, "unknown label '" + s + "'");
}

}  // namespace

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw CifError(ErrorCode::IoFailure, "cannot open manifest '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw CifError(ErrorCode::InvalidConfig,
                       "manifest '" + path + "' is not valid JSON: " + e.what());
    }

    try {
        reject_unknown_keys(doc, {"class", "samples"}, "manifest");
        DatasetManifest manifest;
        manifest.class_name = doc.at("class").get<std::string>();
        for (const json& s : doc.at("samples")) {
            reject_unknown_keys(s, {"id", "split", "label", "features", "depth", "gt_mask"},
                                "sample entry");
            SampleEntry entry;
            entry.id = s.at("id").get<std::string>();
            entry.split = split_from_string(s.at("split").get<std::string>());
            entry.label = label_from_string(s.at("label").get<std::string>());
            for (auto it = s.at("features").begin(); it != s.at("features").end(); ++it)
                entry.feature_paths[modality_from_name(it.key())] = it.value().get<std::string>();
            if (s.contains("depth")) entry.depth_path = s.at("depth").get<std::string>();
            if (s.contains("gt_mask")) entry.gt_mask_path = s.at("gt_mask").get<std::string>();
            manifest.samples.push_back(std::move(entry));
        }
        manifest.validate(manifest_base_dir(path));
        return manifest;
    } catch (const json::exception& e) {
        throw CifError(ErrorCode::InvalidConfig,
                       "manifest '" + path + "' is malformed: " + e.what());
    }
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
    json doc;
    doc["class"] = manifest.class_name;
    doc["samples"] = json::array();
    for (const auto& s : manifest.samples) {
        json entry;
        entry["id"] = s.id;
        entry["split"] = s.split == Split::Train ? "train" : "test";
        entry["label"] = s.label == Label::Normal ? "normal" : "anomalous";
        json feats = json::object();
        for (const auto& [mod, p] : s.feature_paths) feats[modality_name(mod)] = p;
        entry["features"] = feats;
        if (s.depth_path) entry["depth"] = *s.depth_path;
        if (s.gt_mask_path) entry["gt_mask"] = *s.gt_mask_path;
        doc["samples"].push_back(entry);
    }
    atomic_write(path, doc.dump(2) + "\n");
}

std::string manifest_base_dir(const std::string& manifest_path) {
    std::filesystem::path p(manifest_path);
    auto parent = p.parent_path();
    return parent.empty() ? std::string(".") : parent.string();
}

}  // namespace cif
