#include "cif/message_passing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/SVD>

#include "cif/hypergraph.hpp"

namespace cif {

void JointHypergraph::validate() const {
    const Eigen::Index n = n_test + n_mem;
    if (x_joint.rows() != n)
        throw CifError(ErrorCode::ShapeMismatch, "joint features row count mismatch");
    if (h_joint.rows() != n || h_joint.cols() != 2 * e_num + n)
        throw CifError(ErrorCode::ShapeMismatch, "joint incidence shape mismatch");
    if (e_num > 0) {
        if (h_joint.block(n_test, 0, n_mem, e_num).cwiseAbs().sum() != 0.0)
            throw CifError(ErrorCode::ShapeMismatch,
                           "test incidence block has memory-row entries");
        if (h_joint.block(0, e_num, n_test, e_num).cwiseAbs().sum() != 0.0)
            throw CifError(ErrorCode::ShapeMismatch,
                           "memory incidence block has test-row entries");
    }
}

void MpConfig::validate() const {
    if (alpha < 0.0 || alpha > 1.0)
        throw CifError(ErrorCode::InvalidConfig, "alpha must be in [0,1]");
    if (layers < 1) throw CifError(ErrorCode::InvalidConfig, "layers must be >= 1");
    if (k_cross < 1) throw CifError(ErrorCode::InvalidConfig, "k_cross must be >= 1");
}

namespace {

/// Indices of the k largest entries of `sims`, ties to the lowest index.
std::vector<int> top_k(const Eigen::VectorXd& sims, int k) {
    std::vector<int> order(sims.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return a < b;
    });
    order.resize(k);
    return order;
}

}  // namespace

MatrixXd build_cross_hyperedges(const MatrixXd& x_test, const MatrixXd& x_mem, int k) {
    const int n = static_cast<int>(x_test.rows());
    const int a = static_cast<int>(x_mem.rows());
    if (n == 0 || a == 0)
        throw CifError(ErrorCode::EmptyInput, "both node sets must be non-empty");
    if (x_test.cols() != x_mem.cols())
        throw CifError(ErrorCode::DimMismatch, "test/memory feature dims differ");
    if (k > std::min(n, a))
        throw CifError(ErrorCode::KTooLarge,
                       "k=" + std::to_string(k) + " exceeds min(N,A)=" +
                           std::to_string(std::min(n, a)));

    MatrixXd sims = cosine_sim_to_centers(x_test, x_mem);  // n x a
    MatrixXd cross = MatrixXd::Zero(n + a, n + a);
    for (int i = 0; i < n; ++i) {
        cross(i, i) = 1.0;
        for (int j : top_k(sims.row(i).transpose(), k)) cross(n + j, i) = 1.0;
    }
    for (int j = 0; j < a; ++j) {
        cross(n + j, n + j) = 1.0;
        for (int i : top_k(sims.col(j), k)) cross(i, n + j) = 1.0;
    }
    return cross;
}

JointHypergraph build_joint(const MatrixXd& x_test, const MatrixXd& x_mem,
                            const MatrixXd& h_test, const MatrixXd& h_mem,
                            const MatrixXd& h_cross) {
    const Eigen::Index n = x_test.rows();
    const Eigen::Index a = x_mem.rows();
    if (x_test.cols() != x_mem.cols())
        throw CifError(ErrorCode::DimMismatch, "test/memory feature dims differ");
    if (h_test.rows() != n || h_mem.rows() != a)
        throw CifError(ErrorCode::ShapeMismatch, "incidence row counts do not match features");
    if (h_test.cols() != h_mem.cols())
        throw CifError(ErrorCode::ShapeMismatch, "test/memory hyperedge counts differ");
    if (h_cross.rows() != n + a || h_cross.cols() != n + a)
        throw CifError(ErrorCode::ShapeMismatch, "cross incidence must be (N+A) x (N+A)");

    const Eigen::Index e_num = h_test.cols();
    JointHypergraph joint;
    joint.n_test = static_cast<int>(n);
    joint.n_mem = static_cast<int>(a);
    joint.e_num = static_cast<int>(e_num);

    joint.x_joint.resize(n + a, x_test.cols());
    joint.x_joint.topRows(n) = x_test;
    joint.x_joint.bottomRows(a) = x_mem;

    joint.h_joint = MatrixXd::Zero(n + a, 2 * e_num + n + a);
    joint.h_joint.block(0, 0, n, e_num) = h_test;
    joint.h_joint.block(n, e_num, a, e_num) = h_mem;
    joint.h_joint.rightCols(n + a) = h_cross;
    joint.validate();
    return joint;
}

namespace {

MatrixXd drop_empty_columns(const MatrixXd& incidence) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index e = 0; e < incidence.cols(); ++e)
        if (incidence.col(e).sum() > 0.0) keep.push_back(e);
    if (static_cast<Eigen::Index>(keep.size()) == incidence.cols()) return incidence;
    MatrixXd out(incidence.rows(), keep.size());
    for (size_t i = 0; i < keep.size(); ++i) out.col(i) = incidence.col(keep[i]);
    return out;
}

}  // namespace

MatrixXd transition_matrix(const MatrixXd& incidence) {
    MatrixXd h = drop_empty_columns(incidence);
    const Eigen::Index n = h.rows();
    MatrixXd w;
    if (h.cols() > 0) {
        VectorXd edge_deg = h.colwise().sum();
        w = h * edge_deg.cwiseInverse().asDiagonal() * h.transpose();
        w += MatrixXd::Identity(n, n);
    } else {
        w = MatrixXd::Identity(n, n);
    }
    VectorXd node_deg = w.rowwise().sum();
    MatrixXd a_trans(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            a_trans(i, j) = w(i, j) / std::sqrt(node_deg[i] * node_deg[j]);
    return a_trans;
}

VectorXd transition_node_degrees(const MatrixXd& incidence) {
    MatrixXd h = drop_empty_columns(incidence);
    const Eigen::Index n = h.rows();
    if (h.cols() == 0) return VectorXd::Ones(n);
    VectorXd edge_deg = h.colwise().sum();
    MatrixXd w = h * edge_deg.cwiseInverse().asDiagonal() * h.transpose();
    w += MatrixXd::Identity(n, n);
    return w.rowwise().sum();
}

MatrixXd mp_kernel(const MatrixXd& a_trans, double alpha, int layers) {
    if (a_trans.rows() != a_trans.cols())
        throw CifError(ErrorCode::ShapeMismatch, "transition matrix must be square");
    if (alpha < 0.0 || alpha > 1.0)
        throw CifError(ErrorCode::InvalidConfig, "alpha must be in [0,1]");
    if (layers < 1) throw CifError(ErrorCode::InvalidConfig, "layers must be >= 1");

    const Eigen::Index n = a_trans.rows();
    MatrixXd s = alpha * MatrixXd::Identity(n, n);  // l = 0 term
    MatrixXd power = MatrixXd::Identity(n, n);
    for (int l = 1; l < layers; ++l) {
        power = power * a_trans;
        double coef = alpha * std::pow(1.0 - alpha, l);
        if (coef != 0.0) s += coef * power;
    }
    double tail = std::pow(1.0 - alpha, layers);
    if (tail != 0.0) {
        power = power * a_trans;
        s += tail * power;
    }
    return s;
}

MatrixXd apply_mp(const JointHypergraph& joint, const MpConfig& cfg) {
    cfg.validate();
    joint.validate();

    MatrixXd h = drop_empty_columns(joint.h_joint);
    const Eigen::Index n = h.rows();

    VectorXd edge_deg_inv;
    VectorXd d_inv_sqrt;
    if (h.cols() > 0) {
        VectorXd edge_deg = h.colwise().sum();
        edge_deg_inv = edge_deg.cwiseInverse();
        // Row sums of H D_e^{-1} H^T equal the plain hyperedge degree of
        // each node, so D_v = deg + 1 without forming the n x n matrix.
        VectorXd node_deg = h.rowwise().sum().array() + 1.0;
        d_inv_sqrt = node_deg.cwiseSqrt().cwiseInverse();
    } else {
        d_inv_sqrt = VectorXd::Ones(n);
    }

    // One application of A = D^{-1/2} (H D_e^{-1} H^T + I) D^{-1/2}.
    auto apply_a = [&](const MatrixXd& x) -> MatrixXd {
        MatrixXd t = d_inv_sqrt.asDiagonal() * x;
        MatrixXd v = t;
        if (h.cols() > 0) {
            MatrixXd u = h.transpose() * t;
            u = edge_deg_inv.asDiagonal() * u;
            v += h * u;
        } else {
            v += t;
        }
        return d_inv_sqrt.asDiagonal() * v;
    };

    MatrixXd result = cfg.alpha * joint.x_joint;  // l = 0 term
    if (cfg.alpha < 1.0) {
        MatrixXd propagated = joint.x_joint;
        for (int l = 1; l < cfg.layers; ++l) {
            propagated = apply_a(propagated);
            double coef = cfg.alpha * std::pow(1.0 - cfg.alpha, l);
            if (coef != 0.0) result += coef * propagated;
        }
        propagated = apply_a(propagated);
        result += std::pow(1.0 - cfg.alpha, cfg.layers) * propagated;
    }
    return result.topRows(joint.n_test);
}

double annd(const MatrixXd& x_test, const MatrixXd& x_mem) {
    if (x_test.rows() == 0 || x_mem.rows() == 0)
        throw CifError(ErrorCode::EmptySet, "both node sets must be non-empty");
    if (x_test.cols() != x_mem.cols())
        throw CifError(ErrorCode::DimMismatch, "test/memory feature dims differ");
    double total = 0.0;
    for (Eigen::Index i = 0; i < x_test.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < x_mem.rows(); ++j)
            best = std::min(best, (x_test.row(i) - x_mem.row(j)).squaredNorm());
        total += std::sqrt(best);
    }
    return total / static_cast<double>(x_test.rows());
}

double pcs(const MatrixXd& x_before, const MatrixXd& x_after) {
    if (x_before.cols() != x_after.cols())
        throw CifError(ErrorCode::DimMismatch, "cloud dims differ");
    if (x_before.rows() != x_after.rows())
        throw CifError(ErrorCode::ShapeMismatch, "cloud sizes differ");

    Eigen::RowVectorXd mean_before = x_before.colwise().mean();
    Eigen::RowVectorXd mean_after = x_after.colwise().mean();
    MatrixXd xc = x_before.rowwise() - mean_before;
    MatrixXd yc = x_after.rowwise() - mean_after;

    double x_energy = xc.squaredNorm();
    double y_energy = yc.squaredNorm();
    if (x_energy == 0.0 || y_energy == 0.0)
        throw CifError(ErrorCode::DegenerateCloud, "a centered cloud has zero norm");

    // Orthogonal Procrustes with uniform scaling: rotate (reflections
    // allowed) and scale the before-cloud onto the after-cloud.
    MatrixXd m = xc.transpose() * yc;
    Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    MatrixXd rotation = svd.matrixU() * svd.matrixV().transpose();
    double scale = svd.singularValues().sum() / x_energy;
    double residual = (yc - scale * xc * rotation).squaredNorm();
    return 1.0 - residual / y_energy;
}

}  // namespace cif
