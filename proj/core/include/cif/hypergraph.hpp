#ifndef CIF_HYPERGRAPH_HPP
#define CIF_HYPERGRAPH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cif/types.hpp"

namespace cif {

/// hard_assign value for nodes outside the foreground.
inline constexpr int kBackground = -1;

/// Node-to-hyperedge structure for one sample. `incidence` is binary
/// (N x n_edges), foreground rows contain the hard assignment plus any
/// memberships above the similarity threshold, background rows are zero.
struct Hypergraph {
    int n_nodes = 0;
    int n_edges = 0;
    MatrixXd incidence;            // N x |E|, entries in {0, 1}
    std::vector<int> hard_assign;  // length N, edge index or kBackground
    MatrixXd centers;              // |E| x dim cluster centers

    void validate() const;
    std::vector<int> edge_members(int edge) const;
};

struct SahcConfig {
    int n_edges = 4;        // 8 for Eyecandies-style classes
    double tau = 0.5;       // membership threshold on normalized similarity
    int kmeans_iters = 100;
    uint64_t seed = 0;

    void validate() const;
};

struct KmeansResult {
    MatrixXd centers;        // k x dim
    std::vector<int> assign; // length M
};

/// Lloyd's algorithm with k-means++ seeding. Deterministic given
/// (points, k, iters, seed); empty clusters are repaired by stealing the
/// point farthest from its current center.
KmeansResult kmeans(const MatrixXd& points, int k, int iters, uint64_t seed);

/// Row i, column j = cosine(points.row(i), centers.row(j)); 0 when either
/// vector has zero norm.
MatrixXd cosine_sim_to_centers(const MatrixXd& points, const MatrixXd& centers);

/// Semantic-aware hypergraph construction over the foreground nodes.
Hypergraph build_sahc(const PatchGrid& features, const ForegroundMask& mask,
                      const SahcConfig& cfg);

/// Row e = mean feature of the nodes with incidence[., e] = 1.
MatrixXd hyperedge_features(const MatrixXd& features, const MatrixXd& incidence);

struct QualityMetrics {
    double he = 0.0;   // hyperedge entropy, in [0, 1], lower is better
    double ics = 0.0;  // intra-cluster similarity, in [-1, 1]
    double icd = 0.0;  // inter-cluster distance, >= 0
    double sil = 0.0;  // silhouette score, in [-1, 1]
};

QualityMetrics quality_metrics(const MatrixXd& features, const Hypergraph& hg);

/// Structured-text (JSON) serialization used by the hg-metrics command.
std::string hypergraph_to_text(const Hypergraph& hg);
Hypergraph hypergraph_from_text(const std::string& text);

}  // namespace cif

#endif
