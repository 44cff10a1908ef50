#include "cif/types.hpp"

#include <cmath>
#include <filesystem>

namespace cif {

const char* modality_name(Modality m) {
    return m == Modality::RGB ? "rgb" : "3d";
}

Modality modality_from_name(const std::string& name) {
    if (name == "rgb") return Modality::RGB;
    if (name == "3d" || name == "pc3d") return Modality::PC3D;
    throw CifError(ErrorCode::InvalidConfig, "unknown modality '" + name + "'");
}

void PatchGrid::validate() const {
    if (rows <= 0 || cols <= 0 || dim <= 0)
        throw CifError(ErrorCode::InvalidConfig, "PatchGrid shape must be positive");
    if (data.rows() != static_cast<Eigen::Index>(rows) * cols || data.cols() != dim)
        throw CifError(ErrorCode::ShapeMismatch, "PatchGrid data does not match rows*cols x dim");
    if (!data.allFinite())
        throw CifError(ErrorCode::NonFiniteValue, "PatchGrid contains NaN/Inf");
}

int ForegroundMask::count_foreground() const {
    int n = 0;
    for (uint8_t b : bits) n += b != 0;
    return n;
}

void ForegroundMask::validate() const {
    if (rows <= 0 || cols <= 0)
        throw CifError(ErrorCode::InvalidConfig, "ForegroundMask shape must be positive");
    if (bits.size() != static_cast<size_t>(rows) * cols)
        throw CifError(ErrorCode::ShapeMismatch, "ForegroundMask bit count does not match shape");
}

void DepthMap::validate() const {
    if (h <= 0 || w <= 0)
        throw CifError(ErrorCode::InvalidConfig, "DepthMap shape must be positive");
    if (values.rows() != h || values.cols() != w)
        throw CifError(ErrorCode::ShapeMismatch, "DepthMap values do not match h x w");
    if (!values.allFinite())
        throw CifError(ErrorCode::NonFiniteValue, "DepthMap contains NaN/Inf");
}

std::vector<const SampleEntry*> DatasetManifest::train_samples() const {
    std::vector<const SampleEntry*> out;
    for (const auto& s : samples)
        if (s.split == Split::Train) out.push_back(&s);
    return out;
}

std::vector<const SampleEntry*> DatasetManifest::test_samples() const {
    std::vector<const SampleEntry*> out;
    for (const auto& s : samples)
        if (s.split == Split::Test) out.push_back(&s);
    return out;
}

void DatasetManifest::validate(const std::string& base_dir) const {
    namespace fs = std::filesystem;
    auto resolvable = [&](const std::string& rel) {
        return fs::exists(fs::path(base_dir) / rel);
    };
    for (const auto& s : samples) {
        if (s.split == Split::Train && s.label != Label::Normal)
            throw CifError(ErrorCode::InvalidConfig,
                           "train sample '" + s.id + "' is labeled anomalous");
        for (const auto& [mod, path] : s.feature_paths)
            if (!resolvable(path))
                throw CifError(ErrorCode::IoFailure,
                               "missing feature file '" + path + "' for sample '" + s.id + "'");
        if (s.depth_path && !resolvable(*s.depth_path))
            throw CifError(ErrorCode::IoFailure,
                           "missing depth file '" + *s.depth_path + "' for sample '" + s.id + "'");
        if (s.gt_mask_path && !resolvable(*s.gt_mask_path))
            throw CifError(ErrorCode::IoFailure,
                           "missing ground-truth mask '" + *s.gt_mask_path + "' for sample '" +
                               s.id + "'");
    }
}

}  // namespace cif
