#ifndef CIF_TYPES_HPP
#define CIF_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cif/error.hpp"

namespace cif {

using MatrixXfRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Modality : uint32_t { RGB = 0, PC3D = 1 };

const char* modality_name(Modality m);
Modality modality_from_name(const std::string& name);

/// A sample's patch features as an N x dim matrix laid out row-major over
/// an (rows x cols) grid. N = rows * cols.
struct PatchGrid {
    int rows = 0;
    int cols = 0;
    int dim = 0;
    MatrixXfRM data;  // N x dim
    Modality modality = Modality::RGB;

    int n_nodes() const { return rows * cols; }

    /// Throws CifError on any violated invariant.
    void validate() const;

    /// Features widened to double for the numeric pipeline.
    MatrixXd values() const { return data.cast<double>(); }
};

/// Patch-level foreground flags aligned with a PatchGrid.
struct ForegroundMask {
    int rows = 0;
    int cols = 0;
    std::vector<uint8_t> bits;  // N entries, 1 = foreground

    int n_nodes() const { return rows * cols; }
    bool foreground(int node) const { return bits[static_cast<size_t>(node)] != 0; }
    int count_foreground() const;

    void validate() const;
};

/// Pixel-resolution depth with 0 marking missing values.
struct DepthMap {
    int h = 0;
    int w = 0;
    MatrixXfRM values;  // h x w

    void validate() const;
};

enum class Split { Train, Test };
enum class Label { Normal, Anomalous };

struct SampleEntry {
    std::string id;
    Split split = Split::Train;
    Label label = Label::Normal;
    std::map<Modality, std::string> feature_paths;
    std::optional<std::string> depth_path;
    std::optional<std::string> gt_mask_path;
};

struct DatasetManifest {
    std::string class_name;
    std::vector<SampleEntry> samples;

    std::vector<const SampleEntry*> train_samples() const;
    std::vector<const SampleEntry*> test_samples() const;

    /// Checks the manifest invariants: train samples all normal, every
    /// referenced path resolvable relative to `base_dir`.
    void validate(const std::string& base_dir) const;
};

}  // namespace cif

#endif
