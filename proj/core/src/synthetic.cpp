#include "cif/synthetic.hpp"

#include <algorithm>
#include <filesystem>

#include "cif/manifest.hpp"
#include "cif/rng.hpp"
#include "cif/tensor_io.hpp"

namespace cif {

namespace {

struct Region {
    int r0, r1, c0, c1;  // half-open patch ranges
    int height() const { return r1 - r0; }
    int width() const { return c1 - c0; }
    bool contains(int r, int c) const { return r >= r0 && r < r1 && c >= c0 && c < c1; }
};

Region object_region(const SynthConfig& cfg) {
    int mr = std::max(1, cfg.grid_rows / 6);
    int mc = std::max(1, cfg.grid_cols / 6);
    return Region{mr, cfg.grid_rows - mr, mc, cfg.grid_cols - mc};
}

/// Column band -> prototype index inside the object region.
int band_of(const Region& region, int col, int k_true) {
    int off = col - region.c0;
    int band = static_cast<int>(static_cast<int64_t>(off) * k_true / region.width());
    return std::min(band, k_true - 1);
}

}  // namespace

void SynthConfig::validate() const {
    if (k_true < 1) throw CifError(ErrorCode::InvalidConfig, "k_true must be >= 1");
    if (dim < 2) throw CifError(ErrorCode::InvalidConfig, "dim must be >= 2");
    if (noise_sigma < 0) throw CifError(ErrorCode::InvalidConfig, "noise_sigma must be >= 0");
    if (anomaly_delta < 0) throw CifError(ErrorCode::InvalidConfig, "anomaly_delta must be >= 0");
    if (anomaly_delta == 0 && n_test_anomalous > 0)
        throw CifError(ErrorCode::InvalidConfig,
                       "anomaly_delta must be > 0 when anomalous samples are requested");
    if (n_train < 1) throw CifError(ErrorCode::InvalidConfig, "n_train must be >= 1");
    if (n_test_normal < 0 || n_test_anomalous < 0)
        throw CifError(ErrorCode::InvalidConfig, "test counts must be >= 0");
    if (grid_rows < 3 || grid_cols < 3)
        throw CifError(ErrorCode::InvalidConfig, "grid must be at least 3x3");
    if (pixels_per_patch < 1)
        throw CifError(ErrorCode::InvalidConfig, "pixels_per_patch must be >= 1");
    Region region{std::max(1, grid_rows / 6), grid_rows - std::max(1, grid_rows / 6),
                  std::max(1, grid_cols / 6), grid_cols - std::max(1, grid_cols / 6)};
    if (region.height() < 1 || region.width() < k_true)
        throw CifError(ErrorCode::InvalidConfig,
                       "object region too small for k_true part bands");
}

DatasetManifest generate_synthetic_class(const SynthConfig& cfg, uint64_t seed,
                                         const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "features");
    fs::create_directories(fs::path(out_dir) / "depth");
    fs::create_directories(fs::path(out_dir) / "gt");

    const Region region = object_region(cfg);
    const int n_nodes = cfg.grid_rows * cfg.grid_cols;
    const int h = cfg.grid_rows * cfg.pixels_per_patch;
    const int w = cfg.grid_cols * cfg.pixels_per_patch;
    const int modality_count = cfg.emit_3d ? 2 : 1;

    Rng rng(seed);

    // Prototypes: per modality, one background direction plus k_true parts.
    std::vector<std::vector<Eigen::VectorXd>> prototypes(modality_count);
    std::vector<Eigen::VectorXd> background(modality_count);
    for (int m = 0; m < modality_count; ++m) {
        background[m] = rng.unit_vector(cfg.dim);
        for (int p = 0; p < cfg.k_true; ++p)
            prototypes[m].push_back(rng.unit_vector(cfg.dim));
    }

    // Shared depth map: object region raised above a flat background.
    DepthMap depth;
    depth.h = h;
    depth.w = w;
    depth.values.resize(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            bool object = region.contains(r / cfg.pixels_per_patch, c / cfg.pixels_per_patch);
            depth.values(r, c) = object ? 0.6f : 0.5f;
        }

    // Anomaly block shape, fixed per class.
    const int block_h = std::max(1, region.height() / 5);
    const int block_w = std::max(1, region.width() / 5);

    DatasetManifest manifest;
    manifest.class_name = cfg.class_name;

    auto emit_sample = [&](const std::string& id, Split split, bool anomalous) {
        SampleEntry entry;
        entry.id = id;
        entry.split = split;
        entry.label = anomalous ? Label::Anomalous : Label::Normal;

        int block_r = 0, block_c = 0;
        std::vector<Eigen::VectorXd> offset(modality_count);
        if (anomalous) {
            block_r = region.r0 +
                      static_cast<int>(rng.uniform_index(region.height() - block_h + 1));
            block_c = region.c0 +
                      static_cast<int>(rng.uniform_index(region.width() - block_w + 1));
            for (int m = 0; m < modality_count; ++m) offset[m] = rng.unit_vector(cfg.dim);
        }
        auto in_block = [&](int r, int c) {
            return anomalous && r >= block_r && r < block_r + block_h && c >= block_c &&
                   c < block_c + block_w;
        };

        for (int m = 0; m < modality_count; ++m) {
            PatchGrid grid;
            grid.rows = cfg.grid_rows;
            grid.cols = cfg.grid_cols;
            grid.dim = cfg.dim;
            grid.modality = m == 0 ? Modality::RGB : Modality::PC3D;
            grid.data.resize(n_nodes, cfg.dim);
            for (int r = 0; r < cfg.grid_rows; ++r) {
                for (int c = 0; c < cfg.grid_cols; ++c) {
                    Eigen::VectorXd feat = region.contains(r, c)
                                               ? prototypes[m][band_of(region, c, cfg.k_true)]
                                               : background[m];
                    if (in_block(r, c)) feat += cfg.anomaly_delta * offset[m];
                    for (int d = 0; d < cfg.dim; ++d)
                        grid.data(r * cfg.grid_cols + c, d) = static_cast<float>(
                            feat[d] + cfg.noise_sigma * rng.gaussian());
                }
            }
            std::string rel = "features/" + id + "_" + modality_name(grid.modality) + ".cift";
            write_feature_tensor(grid, (fs::path(out_dir) / rel).string());
            entry.feature_paths[grid.modality] = rel;
        }

        std::string depth_rel = "depth/" + id + ".cifd";
        write_depth(depth, (fs::path(out_dir) / depth_rel).string());
        entry.depth_path = depth_rel;

        if (anomalous) {
            ForegroundMask gt;
            gt.rows = h;
            gt.cols = w;
            gt.bits.assign(static_cast<size_t>(h) * w, 0);
            for (int r = block_r * cfg.pixels_per_patch;
                 r < (block_r + block_h) * cfg.pixels_per_patch; ++r)
                for (int c = block_c * cfg.pixels_per_patch;
                     c < (block_c + block_w) * cfg.pixels_per_patch; ++c)
                    gt.bits[static_cast<size_t>(r) * w + c] = 1;
            std::string gt_rel = "gt/" + id + ".cifm";
            write_mask(gt, (fs::path(out_dir) / gt_rel).string());
            entry.gt_mask_path = gt_rel;
        }

        manifest.samples.push_back(std::move(entry));
    };

    char buf[32];
    for (int i = 0; i < cfg.n_train; ++i) {
        std::snprintf(buf, sizeof(buf), "train_%03d", i);
        emit_sample(buf, Split::Train, false);
    }
    for (int i = 0; i < cfg.n_test_normal; ++i) {
        std::snprintf(buf, sizeof(buf), "test_good_%03d", i);
        emit_sample(buf, Split::Test, false);
    }
    for (int i = 0; i < cfg.n_test_anomalous; ++i) {
        std::snprintf(buf, sizeof(buf), "test_anom_%03d", i);
        emit_sample(buf, Split::Test, true);
    }

    write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    return manifest;
}

}  // namespace cif
