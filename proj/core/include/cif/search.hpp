#ifndef CIF_SEARCH_HPP
#define CIF_SEARCH_HPP

#include <map>
#include <optional>
#include <vector>

#include "cif/hypergraph.hpp"
#include "cif/memory_bank.hpp"
#include "cif/message_passing.hpp"
#include "cif/types.hpp"

namespace cif {

enum class CombineMode { Multiply, HgmsOnly, GlobalOnly };
enum class BackgroundPolicy { Zero, GlobalOnly };

struct SearchConfig {
    int k_edges = 2;  // memory hyperedges searched per test hyperedge
    CombineMode combine = CombineMode::Multiply;
    BackgroundPolicy background = BackgroundPolicy::Zero;
    double smooth_sigma = 4.0;  // pixels; 0 skips the blur
    int out_h = 0;              // 0 = depth resolution, else 8x the grid
    int out_w = 0;

    void validate() const;
};

struct AnomalyResult {
    MatrixXd patch_scores;  // rows x cols
    MatrixXd pixel_scores;  // out_h x out_w
    double image_score = 0.0;
};

/// Hyperedge-guided scores: each test hyperedge searches only the union of
/// its top-k_edges most similar memory buckets; a node in several test
/// hyperedges keeps its minimum per-edge score. Background nodes score 0
/// under BackgroundPolicy::Zero, the global NN distance otherwise.
VectorXd hgms_scores(const MatrixXd& x_test_new, const Hypergraph& test_hg,
                     const MemoryBank& bank, int k_edges,
                     BackgroundPolicy background = BackgroundPolicy::Zero);

/// Conventional search: distance to the nearest node anywhere in the bank.
VectorXd global_nn_scores(const MatrixXd& x_test_new, const Hypergraph& test_hg,
                          const MemoryBank& bank,
                          BackgroundPolicy background = BackgroundPolicy::Zero);

/// Element-wise product of the two score routes.
VectorXd combine_scores(const VectorXd& hgms, const VectorXd& global_nn);

/// Bilinear upsampling to (out_h, out_w) followed by Gaussian smoothing
/// with std sigma pixels (kernel truncated at 4*sigma, renormalized at the
/// borders so constants are preserved).
MatrixXd postprocess(const MatrixXd& patch_scores, int out_h, int out_w, double sigma);

/// Mean of the two maps after per-map min-max normalization over the
/// foreground entries (all entries when no mask is given). Negative
/// normalized values (background below the foreground minimum) clamp to 0.
MatrixXd fuse_modalities(const MatrixXd& map_a, const MatrixXd& map_b,
                         const ForegroundMask* mask = nullptr);

struct DetectInput {
    std::map<Modality, PatchGrid> features;
    ForegroundMask mask;
    std::optional<DepthMap> depth;  // used for the default output resolution
};

struct PipelineConfig {
    SahcConfig sahc;
    MpConfig mp;
    SearchConfig search;
    std::vector<Modality> modalities = {Modality::RGB, Modality::PC3D};
};

/// Full per-sample pipeline: SAHC on the RGB features, Bi-TF-MP against
/// each modality's bank, HGMS x global search, modality fusion, and score
/// map post-processing. Deterministic for fixed inputs and seeds.
AnomalyResult detect(const DetectInput& input, const std::map<Modality, MemoryBank>& banks,
                     const PipelineConfig& cfg);

}  // namespace cif

#endif
