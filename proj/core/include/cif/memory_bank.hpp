#ifndef CIF_MEMORY_BANK_HPP
#define CIF_MEMORY_BANK_HPP

#include <map>
#include <string>
#include <vector>

#include "cif/hypergraph.hpp"
#include "cif/types.hpp"

namespace cif {

/// Per-class, per-modality memory of normal patch features, bucketed by
/// hyperedge. edge_feats row e is always the mean of bucket e.
struct MemoryBank {
    std::string class_name;
    Modality modality = Modality::RGB;
    int n_edges = 0;
    int dim = 0;
    std::vector<MatrixXd> buckets;  // n_edges matrices, m_e x dim
    MatrixXd edge_feats;            // n_edges x dim
    double sampling_rate = 0.1;

    int total_nodes() const;
    /// Buckets concatenated in edge order, A x dim.
    MatrixXd all_nodes() const;
    /// A x n_edges binary membership matrix matching all_nodes() row order.
    MatrixXd bucket_incidence() const;

    void validate() const;
};

/// One training sample: per-modality features plus the hypergraph built
/// from the RGB features (reused across modalities).
struct TrainSample {
    std::map<Modality, PatchGrid> features;
    Hypergraph hg;
};

struct MemoryConfig {
    std::string class_name;
    double sampling_rate = 0.1;
    std::vector<Modality> modalities = {Modality::RGB, Modality::PC3D};
    uint64_t seed = 0;
};

/// Initializes a bank from a single sample: bucket e holds the features of
/// the nodes hard-assigned to hyperedge e; background nodes are excluded.
MemoryBank init_memory(const PatchGrid& sample, const Hypergraph& hg, Modality modality,
                       double rate, const std::string& class_name = "");

/// Merges a sample into the bank: each sample hyperedge (hard-membership
/// mean) is matched to the nearest bank hyperedge by Euclidean distance and
/// its hard members are appended to that bucket. Ties pick the lowest bank
/// edge index. edge_feats is left stale; call update_hyperedges after.
void assign_nodes(MemoryBank& bank, const PatchGrid& sample, const Hypergraph& hg);

/// Recomputes edge_feats as the bucket means.
void update_hyperedges(MemoryBank& bank);

/// Greedy k-center subset of max(1, ceil(rate*m)) rows. The start node is
/// the one farthest from the bucket mean; every tie breaks to the lowest
/// index. The result is independent of `seed` (kept for interface
/// stability) and sorted ascending.
std::vector<int> coreset_sample_bucket(const MatrixXd& nodes, double rate, uint64_t seed);

/// Index minimizing the maximum distance to all other rows; ties pick the
/// lowest index.
int minimax_medoid(const MatrixXd& nodes);

/// Full three-stage construction (node assignment, hyperedge update,
/// per-bucket coreset sampling) over the training samples. The hypergraph
/// and edge matching always come from the RGB features; every requested
/// modality bank inherits that bucket structure.
std::map<Modality, MemoryBank> build_memory(const std::vector<TrainSample>& samples,
                                            const MemoryConfig& cfg);

// "CIFB" binary serialization; float32 payload, exact file round trip.
MemoryBank read_memory_bank(const std::string& path);
void write_memory_bank(const MemoryBank& bank, const std::string& path);

}  // namespace cif

#endif
