#include "cif/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cif {

void SearchConfig::validate() const {
    if (k_edges < 1) throw CifError(ErrorCode::InvalidConfig, "k_edges must be >= 1");
    if (smooth_sigma < 0.0)
        throw CifError(ErrorCode::InvalidConfig, "smooth_sigma must be >= 0");
    if (out_h < 0 || out_w < 0)
        throw CifError(ErrorCode::InvalidConfig, "output resolution must be >= 0");
}

namespace {

double nn_distance(const Eigen::RowVectorXd& x, const MatrixXd& candidates) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < candidates.rows(); ++i)
        best = std::min(best, (x - candidates.row(i)).squaredNorm());
    return std::sqrt(best);
}

VectorXd global_distances(const MatrixXd& x, const MatrixXd& bank_nodes) {
    VectorXd d(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) d[i] = nn_distance(x.row(i), bank_nodes);
    return d;
}

}  // namespace

VectorXd hgms_scores(const MatrixXd& x_test_new, const Hypergraph& test_hg,
                     const MemoryBank& bank, int k_edges, BackgroundPolicy background) {
    bank.validate();
    test_hg.validate();
    if (x_test_new.rows() != test_hg.n_nodes)
        throw CifError(ErrorCode::ShapeMismatch, "features do not match hypergraph nodes");
    if (x_test_new.cols() != bank.dim)
        throw CifError(ErrorCode::DimMismatch, "feature dim does not match bank");
    if (bank.total_nodes() == 0)
        throw CifError(ErrorCode::EmptyBank, "memory bank has no nodes");
    if (k_edges < 1 || k_edges > bank.n_edges)
        throw CifError(ErrorCode::KTooLarge, "k_edges must be in [1, |E|]");

    // Updated test hyperedge features over the soft membership.
    MatrixXd test_ef = hyperedge_features(x_test_new, test_hg.incidence);
    MatrixXd edge_sims = cosine_sim_to_centers(test_ef, bank.edge_feats);

    const double inf = std::numeric_limits<double>::infinity();
    VectorXd scores = VectorXd::Constant(test_hg.n_nodes, inf);

    for (int e = 0; e < test_hg.n_edges; ++e) {
        std::vector<int> order(bank.n_edges);
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + k_edges, order.end(),
                          [&](int a, int b) {
                              if (edge_sims(e, a) != edge_sims(e, b))
                                  return edge_sims(e, a) > edge_sims(e, b);
                              return a < b;
                          });
        int sub_rows = 0;
        for (int t = 0; t < k_edges; ++t)
            sub_rows += static_cast<int>(bank.buckets[order[t]].rows());
        MatrixXd subset(sub_rows, bank.dim);
        Eigen::Index row = 0;
        for (int t = 0; t < k_edges; ++t) {
            const MatrixXd& bucket = bank.buckets[order[t]];
            subset.middleRows(row, bucket.rows()) = bucket;
            row += bucket.rows();
        }
        for (int i = 0; i < test_hg.n_nodes; ++i) {
            if (test_hg.incidence(i, e) == 0.0) continue;
            scores[i] = std::min(scores[i], nn_distance(x_test_new.row(i), subset));
        }
    }

    if (background == BackgroundPolicy::Zero) {
        for (int i = 0; i < test_hg.n_nodes; ++i)
            if (test_hg.hard_assign[i] == kBackground) scores[i] = 0.0;
    } else {
        MatrixXd bank_nodes = bank.all_nodes();
        for (int i = 0; i < test_hg.n_nodes; ++i)
            if (test_hg.hard_assign[i] == kBackground)
                scores[i] = nn_distance(x_test_new.row(i), bank_nodes);
    }
    return scores;
}

VectorXd global_nn_scores(const MatrixXd& x_test_new, const Hypergraph& test_hg,
                          const MemoryBank& bank, BackgroundPolicy background) {
    bank.validate();
    if (x_test_new.rows() != test_hg.n_nodes)
        throw CifError(ErrorCode::ShapeMismatch, "features do not match hypergraph nodes");
    if (x_test_new.cols() != bank.dim)
        throw CifError(ErrorCode::DimMismatch, "feature dim does not match bank");
    if (bank.total_nodes() == 0)
        throw CifError(ErrorCode::EmptyBank, "memory bank has no nodes");

    MatrixXd bank_nodes = bank.all_nodes();
    VectorXd scores(test_hg.n_nodes);
    for (int i = 0; i < test_hg.n_nodes; ++i) {
        if (test_hg.hard_assign[i] == kBackground && background == BackgroundPolicy::Zero)
            scores[i] = 0.0;
        else
            scores[i] = nn_distance(x_test_new.row(i), bank_nodes);
    }
    return scores;
}

VectorXd combine_scores(const VectorXd& hgms, const VectorXd& global_nn) {
    if (hgms.size() != global_nn.size())
        throw CifError(ErrorCode::LengthMismatch, "score vectors have different lengths");
    return hgms.cwiseProduct(global_nn);
}

MatrixXd postprocess(const MatrixXd& patch_scores, int out_h, int out_w, double sigma) {
    if (out_h < 1 || out_w < 1)
        throw CifError(ErrorCode::InvalidConfig, "output resolution must be positive");
    if (sigma < 0.0) throw CifError(ErrorCode::InvalidConfig, "sigma must be >= 0");
    const int rows = static_cast<int>(patch_scores.rows());
    const int cols = static_cast<int>(patch_scores.cols());

    // Bilinear upsample with half-pixel-aligned centers, edges clamped.
    auto src_coord = [](int dst, int dst_size, int src_size) {
        double s = (dst + 0.5) * static_cast<double>(src_size) / dst_size - 0.5;
        return std::clamp(s, 0.0, static_cast<double>(src_size - 1));
    };
    MatrixXd up(out_h, out_w);
    for (int r = 0; r < out_h; ++r) {
        double sr = src_coord(r, out_h, rows);
        int r0 = static_cast<int>(sr);
        int r1 = std::min(r0 + 1, rows - 1);
        double fr = sr - r0;
        for (int c = 0; c < out_w; ++c) {
            double sc = src_coord(c, out_w, cols);
            int c0 = static_cast<int>(sc);
            int c1 = std::min(c0 + 1, cols - 1);
            double fc = sc - c0;
            up(r, c) = (1 - fr) * ((1 - fc) * patch_scores(r0, c0) + fc * patch_scores(r0, c1)) +
                       fr * ((1 - fc) * patch_scores(r1, c0) + fc * patch_scores(r1, c1));
        }
    }
    if (sigma == 0.0) return up;

    // Separable Gaussian, truncated at 4 sigma, renormalized at the borders.
    int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    for (int t = -radius; t <= radius; ++t)
        kernel[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));

    MatrixXd tmp(out_h, out_w);
    for (int r = 0; r < out_h; ++r)
        for (int c = 0; c < out_w; ++c) {
            double acc = 0.0, wsum = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                int cc = c + t;
                if (cc < 0 || cc >= out_w) continue;
                acc += kernel[t + radius] * up(r, cc);
                wsum += kernel[t + radius];
            }
            tmp(r, c) = acc / wsum;
        }
    MatrixXd blurred(out_h, out_w);
    for (int r = 0; r < out_h; ++r)
        for (int c = 0; c < out_w; ++c) {
            double acc = 0.0, wsum = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                int rr = r + t;
                if (rr < 0 || rr >= out_h) continue;
                acc += kernel[t + radius] * tmp(rr, c);
                wsum += kernel[t + radius];
            }
            blurred(r, c) = acc / wsum;
        }
    return blurred;
}

namespace {

MatrixXd normalize_over_mask(const MatrixXd& map, const ForegroundMask* mask) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index r = 0; r < map.rows(); ++r)
        for (Eigen::Index c = 0; c < map.cols(); ++c) {
            if (mask && !mask->foreground(static_cast<int>(r * map.cols() + c))) continue;
            lo = std::min(lo, map(r, c));
            hi = std::max(hi, map(r, c));
        }
    if (!std::isfinite(lo) || hi <= lo) return MatrixXd::Zero(map.rows(), map.cols());
    return ((map.array() - lo) / (hi - lo)).max(0.0).matrix();
}

}  // namespace

MatrixXd fuse_modalities(const MatrixXd& map_a, const MatrixXd& map_b,
                         const ForegroundMask* mask) {
    if (map_a.rows() != map_b.rows() || map_a.cols() != map_b.cols())
        throw CifError(ErrorCode::ShapeMismatch, "fused maps must share a resolution");
    if (mask && (mask->rows != map_a.rows() || mask->cols != map_a.cols()))
        throw CifError(ErrorCode::ShapeMismatch, "mask does not match map resolution");
    return 0.5 * (normalize_over_mask(map_a, mask) + normalize_over_mask(map_b, mask));
}

AnomalyResult detect(const DetectInput& input, const std::map<Modality, MemoryBank>& banks,
                     const PipelineConfig& cfg) {
    cfg.search.validate();
    cfg.mp.validate();
    if (cfg.modalities.empty())
        throw CifError(ErrorCode::InvalidConfig, "no modalities requested");
    if (!input.features.count(Modality::RGB))
        throw CifError(ErrorCode::InvalidConfig, "RGB features are required for SAHC");

    const PatchGrid& rgb = input.features.at(Modality::RGB);
    Hypergraph hg = build_sahc(rgb, input.mask, cfg.sahc);

    std::vector<int> fg;
    for (int i = 0; i < hg.n_nodes; ++i)
        if (hg.hard_assign[i] != kBackground) fg.push_back(i);

    std::vector<MatrixXd> modality_scores;
    for (Modality m : cfg.modalities) {
        if (!input.features.count(m))
            throw CifError(ErrorCode::InvalidConfig,
                           std::string("sample missing modality ") + modality_name(m));
        if (!banks.count(m))
            throw CifError(ErrorCode::EmptyBank,
                           std::string("no memory bank for modality ") + modality_name(m));
        const MemoryBank& bank = banks.at(m);
        const PatchGrid& grid = input.features.at(m);
        if (grid.rows != rgb.rows || grid.cols != rgb.cols)
            throw CifError(ErrorCode::ShapeMismatch, "modality grids must share a shape");

        MatrixXd x = grid.values();
        MatrixXd x_fore(fg.size(), grid.dim);
        MatrixXd h_fore(fg.size(), hg.n_edges);
        for (size_t i = 0; i < fg.size(); ++i) {
            x_fore.row(i) = x.row(fg[i]);
            h_fore.row(i) = hg.incidence.row(fg[i]);
        }

        MatrixXd x_mem = bank.all_nodes();
        int k = std::min<int>({cfg.mp.k_cross, static_cast<int>(fg.size()),
                               static_cast<int>(x_mem.rows())});
        MatrixXd cross = build_cross_hyperedges(x_fore, x_mem, k);
        JointHypergraph joint =
            build_joint(x_fore, x_mem, h_fore, bank.bucket_incidence(), cross);
        MpConfig mp = cfg.mp;
        mp.k_cross = k;
        MatrixXd x_new_fore = apply_mp(joint, mp);

        MatrixXd x_new = x;
        for (size_t i = 0; i < fg.size(); ++i) x_new.row(fg[i]) = x_new_fore.row(i);

        int k_edges = std::min(cfg.search.k_edges, bank.n_edges);
        VectorXd structural = hgms_scores(x_new, hg, bank, k_edges, cfg.search.background);
        VectorXd global = global_nn_scores(x_new, hg, bank, cfg.search.background);
        VectorXd combined;
        switch (cfg.search.combine) {
            case CombineMode::Multiply: combined = combine_scores(structural, global); break;
            case CombineMode::HgmsOnly: combined = structural; break;
            case CombineMode::GlobalOnly: combined = global; break;
        }

        MatrixXd map(rgb.rows, rgb.cols);
        for (int r = 0; r < rgb.rows; ++r)
            for (int c = 0; c < rgb.cols; ++c) map(r, c) = combined[r * rgb.cols + c];
        modality_scores.push_back(std::move(map));
    }

    MatrixXd fused = modality_scores.size() == 1
                         ? modality_scores[0]
                         : fuse_modalities(modality_scores[0], modality_scores[1], &input.mask);

    AnomalyResult result;
    result.patch_scores = fused;
    result.image_score = 0.0;
    for (int i : fg)
        result.image_score = std::max(result.image_score, fused(i / rgb.cols, i % rgb.cols));

    int out_h = cfg.search.out_h;
    int out_w = cfg.search.out_w;
    if (out_h == 0 || out_w == 0) {
        if (input.depth) {
            out_h = input.depth->h;
            out_w = input.depth->w;
        } else {
            out_h = rgb.rows * 8;
            out_w = rgb.cols * 8;
        }
    }
    result.pixel_scores = postprocess(fused, out_h, out_w, cfg.search.smooth_sigma);

    if (!result.patch_scores.allFinite() || !result.pixel_scores.allFinite())
        throw CifError(ErrorCode::NonFiniteValue, "anomaly maps contain NaN/Inf");
    return result;
}

}  // namespace cif
