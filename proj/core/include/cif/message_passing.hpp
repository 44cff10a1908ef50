#ifndef CIF_MESSAGE_PASSING_HPP
#define CIF_MESSAGE_PASSING_HPP

#include "cif/types.hpp"

namespace cif {

/// Joint test+memory hypergraph: test rows first, then memory rows.
/// Incidence columns are [padded test edges | padded memory edges | cross
/// hyperedges], 2*e_num + n_test + n_mem in total.
struct JointHypergraph {
    MatrixXd x_joint;   // (N+A) x dim
    MatrixXd h_joint;   // (N+A) x (2*e_num + N + A)
    int n_test = 0;
    int n_mem = 0;
    int e_num = 0;

    void validate() const;
};

struct MpConfig {
    double alpha = 0.9;  // retention coefficient
    int layers = 1;
    int k_cross = 3;     // neighbors per cross-domain hyperedge

    void validate() const;
};

/// Cross-domain hyperedges: column i < N holds test node i plus its top-k
/// most cosine-similar memory nodes; column N+j holds memory node j plus
/// its top-k test nodes. Ties pick the lowest index.
MatrixXd build_cross_hyperedges(const MatrixXd& x_test, const MatrixXd& x_mem, int k);

/// Assembles the joint incidence from the per-domain incidences and the
/// cross block.
JointHypergraph build_joint(const MatrixXd& x_test, const MatrixXd& x_mem,
                            const MatrixXd& h_test, const MatrixXd& h_mem,
                            const MatrixXd& h_cross);

/// Symmetrically normalized transition matrix
///   A = D_v^{-1/2} (H D_e^{-1} H^T + I) D_v^{-1/2},
/// with empty hyperedge columns dropped first.
MatrixXd transition_matrix(const MatrixXd& incidence);

/// Node degrees D_v of W = H D_e^{-1} H^T + I (for the spectral checks).
VectorXd transition_node_degrees(const MatrixXd& incidence);

/// Training-free kernel S = (1-a)^L A^L + a * sum_{l=0}^{L-1} (1-a)^l A^l.
MatrixXd mp_kernel(const MatrixXd& a_trans, double alpha, int layers);

/// Applies the kernel to the joint features and returns the first N rows
/// (the updated test features). Evaluated as polynomial-times-matrix, equal
/// to dense S * X within 1e-8; exactly the input at alpha = 1.
MatrixXd apply_mp(const JointHypergraph& joint, const MpConfig& cfg);

/// Average nearest-neighbor distance from test rows to memory rows.
double annd(const MatrixXd& x_test, const MatrixXd& x_mem);

/// Procrustes similarity: 1 - residual of the optimal orthogonal + uniform
/// scaling alignment of the centered `before` cloud onto the centered
/// `after` cloud, relative to the after cloud's energy. 1 means geometry is
/// perfectly preserved; reflections are permitted.
double pcs(const MatrixXd& x_before, const MatrixXd& x_after);

}  // namespace cif

#endif
