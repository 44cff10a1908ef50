#ifndef CIF_SYNTHETIC_HPP
#define CIF_SYNTHETIC_HPP

#include <cstdint>
#include <string>

#include "cif/types.hpp"

namespace cif {

/// Configuration for the synthetic single-semantic class generator.
///
/// Each sample is a patch grid whose central region (the "object") is tiled
/// with k_true part prototypes in fixed column bands; everything outside the
/// region uses a distinct background prototype. Gaussian noise of scale
/// noise_sigma is added per coordinate. Anomalous test samples replace a
/// contiguous patch block inside the object with prototype +
/// anomaly_delta * (random unit direction).
struct SynthConfig {
    std::string class_name = "synthetic";
    int grid_rows = 28;
    int grid_cols = 28;
    int dim = 64;
    int k_true = 4;
    double noise_sigma = 0.05;
    double anomaly_delta = 1.0;
    int n_train = 4;
    int n_test_normal = 20;
    int n_test_anomalous = 20;
    int pixels_per_patch = 8;  // depth / ground-truth resolution multiplier
    bool emit_3d = true;

    void validate() const;
};

/// Writes feature tensors, depth maps, ground-truth masks, and the manifest
/// for one synthetic class under `out_dir`, and returns the manifest.
/// Output is a pure function of (config, seed).
DatasetManifest generate_synthetic_class(const SynthConfig& config, uint64_t seed,
                                         const std::string& out_dir);

}  // namespace cif

#endif
