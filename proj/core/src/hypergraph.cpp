#include "cif/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "cif/rng.hpp"

namespace cif {

namespace {

double sq_dist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return (a - b).squaredNorm();
}

}  // namespace

void Hypergraph::validate() const {
    if (incidence.rows() != n_nodes || incidence.cols() != n_edges)
        throw CifError(ErrorCode::ShapeMismatch, "incidence shape mismatch");
    if (static_cast<int>(hard_assign.size()) != n_nodes)
        throw CifError(ErrorCode::ShapeMismatch, "hard_assign length mismatch");
    for (int i = 0; i < n_nodes; ++i) {
        int h = hard_assign[i];
        if (h == kBackground) {
            if (incidence.row(i).sum() != 0.0)
                throw CifError(ErrorCode::DegenerateHypergraph,
                               "background node has hyperedge memberships");
        } else {
            if (h < 0 || h >= n_edges)
                throw CifError(ErrorCode::DegenerateHypergraph, "hard assignment out of range");
            if (incidence(i, h) != 1.0)
                throw CifError(ErrorCode::DegenerateHypergraph,
                               "soft incidence does not contain the hard assignment");
        }
    }
}

std::vector<int> Hypergraph::edge_members(int edge) const {
    std::vector<int> members;
    for (int i = 0; i < n_nodes; ++i)
        if (incidence(i, edge) != 0.0) members.push_back(i);
    return members;
}

void SahcConfig::validate() const {
    if (n_edges < 1) throw CifError(ErrorCode::InvalidConfig, "n_edges must be >= 1");
    if (tau < 0.0 || tau > 1.0) throw CifError(ErrorCode::InvalidConfig, "tau must be in [0,1]");
    if (kmeans_iters < 1) throw CifError(ErrorCode::InvalidConfig, "kmeans_iters must be >= 1");
}

KmeansResult kmeans(const MatrixXd& points, int k, int iters, uint64_t seed) {
    const int m = static_cast<int>(points.rows());
    if (k < 1) throw CifError(ErrorCode::InvalidConfig, "k must be >= 1");
    if (m < k)
        throw CifError(ErrorCode::TooFewPoints,
                       std::to_string(m) + " points for k=" + std::to_string(k));

    Rng rng(seed);

    // k-means++ seeding.
    std::vector<int> center_idx;
    center_idx.push_back(static_cast<int>(rng.uniform_index(m)));
    std::vector<double> min_sq(m, std::numeric_limits<double>::infinity());
    std::vector<uint8_t> is_center(m, 0);
    is_center[center_idx[0]] = 1;
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < m; ++i) {
            min_sq[i] = std::min(min_sq[i], sq_dist(points.row(i), points.row(center_idx.back())));
            total += min_sq[i];
        }
        int next = -1;
        if (total > 0.0) {
            double target = rng.uniform01() * total;
            double acc = 0.0;
            for (int i = 0; i < m; ++i) {
                acc += min_sq[i];
                if (acc >= target) { next = i; break; }
            }
            if (next < 0) next = m - 1;
        } else {
            // All remaining points coincide with a center; take the lowest
            // fresh index to keep the seeding set distinct.
            for (int i = 0; i < m; ++i)
                if (!is_center[i]) { next = i; break; }
            if (next < 0) next = 0;
        }
        is_center[next] = 1;
        center_idx.push_back(next);
    }

    MatrixXd centers(k, points.cols());
    for (int c = 0; c < k; ++c) centers.row(c) = points.row(center_idx[c]);

    std::vector<int> assign(m, 0);
    for (int iter = 0; iter < iters; ++iter) {
        // Assignment, ties to the lowest center index.
        std::vector<int> counts(k, 0);
        for (int i = 0; i < m; ++i) {
            int best = 0;
            double best_d = sq_dist(points.row(i), centers.row(0));
            for (int c = 1; c < k; ++c) {
                double d = sq_dist(points.row(i), centers.row(c));
                if (d < best_d) { best_d = d; best = c; }
            }
            assign[i] = best;
            ++counts[best];
        }

        // Repair empty clusters by stealing the point farthest from its
        // own center, never emptying its donor cluster.
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            int steal = -1;
            double worst = -1.0;
            for (int i = 0; i < m; ++i) {
                if (counts[assign[i]] <= 1) continue;
                double d = sq_dist(points.row(i), centers.row(assign[i]));
                if (d > worst) { worst = d; steal = i; }
            }
            if (steal < 0) continue;
            --counts[assign[steal]];
            assign[steal] = c;
            ++counts[c];
        }

        // Update.
        MatrixXd next = MatrixXd::Zero(k, points.cols());
        std::vector<int> next_counts(k, 0);
        for (int i = 0; i < m; ++i) {
            next.row(assign[i]) += points.row(i);
            ++next_counts[assign[i]];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (next_counts[c] > 0)
                next.row(c) /= next_counts[c];
            else
                next.row(c) = centers.row(c);
            shift = std::max(shift, (next.row(c) - centers.row(c)).norm());
        }
        centers = next;
        if (shift < 1e-6) break;
    }

    // Final assignment against the converged centers.
    for (int i = 0; i < m; ++i) {
        int best = 0;
        double best_d = sq_dist(points.row(i), centers.row(0));
        for (int c = 1; c < k; ++c) {
            double d = sq_dist(points.row(i), centers.row(c));
            if (d < best_d) { best_d = d; best = c; }
        }
        assign[i] = best;
    }
    std::vector<int> counts(k, 0);
    for (int a : assign) ++counts[a];
    for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) continue;
        int steal = -1;
        double worst = -1.0;
        for (int i = 0; i < m; ++i) {
            if (counts[assign[i]] <= 1) continue;
            double d = sq_dist(points.row(i), centers.row(assign[i]));
            if (d > worst) { worst = d; steal = i; }
        }
        if (steal >= 0) {
            --counts[assign[steal]];
            assign[steal] = c;
            ++counts[c];
            centers.row(c) = points.row(steal);
        }
    }

    return KmeansResult{std::move(centers), std::move(assign)};
}

MatrixXd cosine_sim_to_centers(const MatrixXd& points, const MatrixXd& centers) {
    if (points.cols() != centers.cols())
        throw CifError(ErrorCode::DimMismatch, "points and centers have different dims");
    MatrixXd sims(points.rows(), centers.rows());
    Eigen::VectorXd pnorm = points.rowwise().norm();
    Eigen::VectorXd cnorm = centers.rowwise().norm();
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = 0; j < centers.rows(); ++j) {
            double denom = pnorm[i] * cnorm[j];
            sims(i, j) = denom == 0.0 ? 0.0 : points.row(i).dot(centers.row(j)) / denom;
        }
    return sims;
}

Hypergraph build_sahc(const PatchGrid& features, const ForegroundMask& mask,
                      const SahcConfig& cfg) {
    features.validate();
    mask.validate();
    cfg.validate();
    if (mask.rows != features.rows || mask.cols != features.cols)
        throw CifError(ErrorCode::ShapeMismatch, "mask shape does not match feature grid");

    std::vector<int> fg;
    for (int i = 0; i < features.n_nodes(); ++i)
        if (mask.foreground(i)) fg.push_back(i);
    if (static_cast<int>(fg.size()) < cfg.n_edges)
        throw CifError(ErrorCode::TooFewForeground,
                       std::to_string(fg.size()) + " foreground nodes for " +
                           std::to_string(cfg.n_edges) + " hyperedges");

    MatrixXd all = features.values();
    MatrixXd fg_feats(fg.size(), features.dim);
    for (size_t i = 0; i < fg.size(); ++i) fg_feats.row(i) = all.row(fg[i]);

    KmeansResult km = kmeans(fg_feats, cfg.n_edges, cfg.kmeans_iters, cfg.seed);
    MatrixXd sims = cosine_sim_to_centers(fg_feats, km.centers);

    // Global min-max normalization so the threshold is comparable across nodes.
    double lo = sims.minCoeff();
    double hi = sims.maxCoeff();
    MatrixXd norm = hi > lo ? MatrixXd(((sims.array() - lo) / (hi - lo)).matrix())
                            : MatrixXd(MatrixXd::Ones(sims.rows(), sims.cols()));

    Hypergraph hg;
    hg.n_nodes = features.n_nodes();
    hg.n_edges = cfg.n_edges;
    hg.incidence = MatrixXd::Zero(hg.n_nodes, hg.n_edges);
    hg.hard_assign.assign(hg.n_nodes, kBackground);
    hg.centers = km.centers;

    for (size_t i = 0; i < fg.size(); ++i) {
        int node = fg[i];
        int best = 0;
        for (int j = 1; j < cfg.n_edges; ++j)
            if (sims(i, j) > sims(i, best)) best = j;
        hg.hard_assign[node] = best;
        for (int j = 0; j < cfg.n_edges; ++j)
            if (norm(i, j) >= cfg.tau || j == best) hg.incidence(node, j) = 1.0;
    }

    // A hyperedge can miss both the threshold and every argmax; keep the
    // column-non-empty invariant by admitting its most similar node.
    for (int j = 0; j < cfg.n_edges; ++j) {
        if (hg.incidence.col(j).sum() > 0.0) continue;
        size_t top = 0;
        for (size_t i = 1; i < fg.size(); ++i)
            if (sims(i, j) > sims(top, j)) top = i;
        hg.incidence(fg[top], j) = 1.0;
    }
    return hg;
}

MatrixXd hyperedge_features(const MatrixXd& features, const MatrixXd& incidence) {
    if (features.rows() != incidence.rows())
        throw CifError(ErrorCode::ShapeMismatch, "features and incidence row counts differ");
    MatrixXd out = MatrixXd::Zero(incidence.cols(), features.cols());
    for (Eigen::Index e = 0; e < incidence.cols(); ++e) {
        int count = 0;
        for (Eigen::Index i = 0; i < incidence.rows(); ++i) {
            if (incidence(i, e) != 0.0) {
                out.row(e) += features.row(i);
                ++count;
            }
        }
        if (count == 0)
            throw CifError(ErrorCode::EmptyHyperedge,
                           "hyperedge " + std::to_string(e) + " has no members");
        out.row(e) /= count;
    }
    return out;
}

QualityMetrics quality_metrics(const MatrixXd& features, const Hypergraph& hg) {
    hg.validate();
    if (features.rows() != hg.n_nodes)
        throw CifError(ErrorCode::ShapeMismatch, "features do not match hypergraph nodes");
    if (hg.n_edges < 2)
        throw CifError(ErrorCode::DegenerateHypergraph, "need >= 2 hyperedges for ICD/SIL");

    std::vector<std::vector<int>> hard_members(hg.n_edges);
    std::vector<int> fg;
    for (int i = 0; i < hg.n_nodes; ++i) {
        if (hg.hard_assign[i] == kBackground) continue;
        hard_members[hg.hard_assign[i]].push_back(i);
        fg.push_back(i);
    }
    for (int e = 0; e < hg.n_edges; ++e)
        if (hard_members[e].empty())
            throw CifError(ErrorCode::DegenerateHypergraph,
                           "hyperedge " + std::to_string(e) + " has no hard-assigned node");

    const int dim = static_cast<int>(features.cols());
    MatrixXd centroids = MatrixXd::Zero(hg.n_edges, dim);
    for (int e = 0; e < hg.n_edges; ++e) {
        for (int i : hard_members[e]) centroids.row(e) += features.row(i);
        centroids.row(e) /= static_cast<double>(hard_members[e].size());
    }

    QualityMetrics qm;

    // ICS: mean cosine similarity of each node to its hard centroid.
    double ics = 0.0;
    for (int i : fg) {
        const auto x = features.row(i);
        const auto c = centroids.row(hg.hard_assign[i]);
        double denom = x.norm() * c.norm();
        ics += denom == 0.0 ? 0.0 : x.dot(c) / denom;
    }
    qm.ics = ics / static_cast<double>(fg.size());

    // ICD: mean pairwise distance between hard centroids.
    double icd = 0.0;
    int pairs = 0;
    for (int a = 0; a < hg.n_edges; ++a)
        for (int b = a + 1; b < hg.n_edges; ++b) {
            icd += (centroids.row(a) - centroids.row(b)).norm();
            ++pairs;
        }
    qm.icd = icd / pairs;

    // SIL: standard silhouette on the hard partition, Euclidean distance.
    double sil = 0.0;
    for (int i : fg) {
        int own = hg.hard_assign[i];
        if (hard_members[own].size() == 1) continue;  // silhouette 0 for singletons
        double a = 0.0;
        for (int j : hard_members[own])
            if (j != i) a += (features.row(i) - features.row(j)).norm();
        a /= static_cast<double>(hard_members[own].size() - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int e = 0; e < hg.n_edges; ++e) {
            if (e == own) continue;
            double d = 0.0;
            for (int j : hard_members[e]) d += (features.row(i) - features.row(j)).norm();
            b = std::min(b, d / static_cast<double>(hard_members[e].size()));
        }
        double denom = std::max(a, b);
        sil += denom == 0.0 ? 0.0 : (b - a) / denom;
    }
    qm.sil = sil / static_cast<double>(fg.size());

    // HE: per-edge entropy of the member-to-centroid cosine-similarity
    // distribution over the soft membership, normalized by log(edge size).
    double he = 0.0;
    for (int e = 0; e < hg.n_edges; ++e) {
        std::vector<int> members = hg.edge_members(e);
        const size_t m = members.size();
        if (m <= 1) continue;  // HE contribution 0 by the log(1) convention
        Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(dim);
        for (int i : members) centroid += features.row(i);
        centroid /= static_cast<double>(m);
        std::vector<double> sims(m);
        double lo = std::numeric_limits<double>::infinity();
        for (size_t t = 0; t < m; ++t) {
            const auto x = features.row(members[t]);
            double denom = x.norm() * centroid.norm();
            sims[t] = denom == 0.0 ? 0.0 : x.dot(centroid) / denom;
            lo = std::min(lo, sims[t]);
        }
        double shift = lo < 0.0 ? -lo : 0.0;
        double total = 0.0;
        for (double& s : sims) { s += shift; total += s; }
        double entropy = 0.0;
        if (total == 0.0) {
            entropy = std::log(static_cast<double>(m));  // all-equal: uniform
        } else {
            for (double s : sims) {
                double p = s / total;
                if (p > 0.0) entropy -= p * std::log(p);
            }
        }
        he += entropy / std::log(static_cast<double>(m));
    }
    qm.he = he / hg.n_edges;

    return qm;
}

std::string hypergraph_to_text(const Hypergraph& hg) {
    nlohmann::json doc;
    doc["n_nodes"] = hg.n_nodes;
    doc["n_edges"] = hg.n_edges;
    doc["hard_assign"] = hg.hard_assign;
    nlohmann::json edges = nlohmann::json::array();
    for (int e = 0; e < hg.n_edges; ++e) edges.push_back(hg.edge_members(e));
    doc["edges"] = edges;
    nlohmann::json centers = nlohmann::json::array();
    for (Eigen::Index r = 0; r < hg.centers.rows(); ++r) {
        std::vector<double> row(hg.centers.cols());
        for (Eigen::Index c = 0; c < hg.centers.cols(); ++c) row[c] = hg.centers(r, c);
        centers.push_back(row);
    }
    doc["centers"] = centers;
    return doc.dump(2) + "\n";
}

Hypergraph hypergraph_from_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
        Hypergraph hg;
        hg.n_nodes = doc.at("n_nodes").get<int>();
        hg.n_edges = doc.at("n_edges").get<int>();
        hg.hard_assign = doc.at("hard_assign").get<std::vector<int>>();
        hg.incidence = MatrixXd::Zero(hg.n_nodes, hg.n_edges);
        const auto& edges = doc.at("edges");
        for (int e = 0; e < hg.n_edges; ++e)
            for (int node : edges.at(e).get<std::vector<int>>()) hg.incidence(node, e) = 1.0;
        const auto& centers = doc.at("centers");
        if (!centers.empty()) {
            hg.centers.resize(centers.size(), centers.at(0).size());
            for (size_t r = 0; r < centers.size(); ++r) {
                auto row = centers.at(r).get<std::vector<double>>();
                for (size_t c = 0; c < row.size(); ++c) hg.centers(r, c) = row[c];
            }
        }
        hg.validate();
        return hg;
    } catch (const nlohmann::json::exception& e) {
        throw CifError(ErrorCode::InvalidConfig, std::string("bad hypergraph text: ") + e.what());
    }
}

}  // namespace cif
