#include "cif/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace cif {

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw CifError(ErrorCode::LengthMismatch, "scores and labels differ in length");
    const size_t n = scores.size();
    size_t n_pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1)
            throw CifError(ErrorCode::InvalidConfig, "labels must be 0 or 1");
        n_pos += l;
    }
    size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw CifError(ErrorCode::SingleClass, "need both classes for AUROC");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Midranks over tied groups.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (size_t t = i; t < j; ++t)
            if (labels[order[t]] == 1) rank_sum_pos += midrank;
        i = j;
    }
    double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

/// 8-connected component labels; -1 marks non-anomalous pixels. Returns the
/// number of components found.
int label_components(const ForegroundMask& gt, std::vector<int>& labels, int first_id) {
    const int h = gt.rows, w = gt.cols;
    labels.assign(static_cast<size_t>(h) * w, -1);
    int next = first_id;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            size_t idx = static_cast<size_t>(r) * w + c;
            if (!gt.bits[idx] || labels[idx] >= 0) continue;
            std::queue<std::pair<int, int>> frontier;
            frontier.push({r, c});
            labels[idx] = next;
            while (!frontier.empty()) {
                auto [cr, cc] = frontier.front();
                frontier.pop();
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        int rr = cr + dr, cw = cc + dc;
                        if (rr < 0 || rr >= h || cw < 0 || cw >= w) continue;
                        size_t nidx = static_cast<size_t>(rr) * w + cw;
                        if (!gt.bits[nidx] || labels[nidx] >= 0) continue;
                        labels[nidx] = next;
                        frontier.push({rr, cw});
                    }
            }
            ++next;
        }
    }
    return next - first_id;
}

struct Pixel {
    double score;
    int component;  // -1 for truly-negative pixels
};

}  // namespace

double aupro(const std::vector<MatrixXd>& pixel_maps, const std::vector<ForegroundMask>& gt_masks,
             double fpr_limit) {
    if (pixel_maps.size() != gt_masks.size())
        throw CifError(ErrorCode::LengthMismatch, "maps and masks differ in count");
    if (pixel_maps.empty())
        throw CifError(ErrorCode::EmptyInput, "no pixel maps given");
    if (fpr_limit <= 0.0 || fpr_limit > 1.0)
        throw CifError(ErrorCode::InvalidConfig, "fpr_limit must be in (0,1]");

    std::vector<Pixel> pixels;
    std::vector<int64_t> comp_sizes;
    int64_t total_neg = 0;
    for (size_t s = 0; s < pixel_maps.size(); ++s) {
        const MatrixXd& map = pixel_maps[s];
        const ForegroundMask& gt = gt_masks[s];
        if (map.rows() != gt.rows || map.cols() != gt.cols)
            throw CifError(ErrorCode::ShapeMismatch, "map and mask resolutions differ");
        std::vector<int> labels;
        int found = label_components(gt, labels, static_cast<int>(comp_sizes.size()));
        comp_sizes.resize(comp_sizes.size() + found, 0);
        for (int r = 0; r < gt.rows; ++r)
            for (int c = 0; c < gt.cols; ++c) {
                size_t idx = static_cast<size_t>(r) * gt.cols + c;
                pixels.push_back({map(r, c), labels[idx]});
                if (labels[idx] >= 0)
                    ++comp_sizes[labels[idx]];
                else
                    ++total_neg;
            }
    }
    if (comp_sizes.empty())
        throw CifError(ErrorCode::NoAnomalousPixels, "ground truth has no anomalous region");

    std::sort(pixels.begin(), pixels.end(),
              [](const Pixel& a, const Pixel& b) { return a.score > b.score; });

    // Threshold levels: every distinct value, or at most 512 quantile-spaced
    // levels of the distinct-value list for large inputs.
    std::vector<double> distinct;
    for (const Pixel& p : pixels)
        if (distinct.empty() || p.score != distinct.back()) distinct.push_back(p.score);
    std::vector<double> thresholds;
    constexpr size_t kMaxLevels = 512;
    if (distinct.size() <= kMaxLevels) {
        thresholds = distinct;
    } else {
        thresholds.reserve(kMaxLevels);
        for (size_t i = 0; i < kMaxLevels; ++i) {
            size_t idx = i * (distinct.size() - 1) / (kMaxLevels - 1);
            if (thresholds.empty() || distinct[idx] != thresholds.back())
                thresholds.push_back(distinct[idx]);
        }
    }

    // Sweep descending, accumulating pixels with score >= threshold.
    std::vector<int64_t> comp_hits(comp_sizes.size(), 0);
    int64_t false_pos = 0;
    size_t cursor = 0;
    double area = 0.0;
    double prev_fpr = 0.0, prev_pro = 0.0;
    bool clipped = false;
    for (double threshold : thresholds) {
        while (cursor < pixels.size() && pixels[cursor].score >= threshold) {
            if (pixels[cursor].component >= 0)
                ++comp_hits[pixels[cursor].component];
            else
                ++false_pos;
            ++cursor;
        }
        double pro = 0.0;
        for (size_t cmp = 0; cmp < comp_sizes.size(); ++cmp)
            pro += static_cast<double>(comp_hits[cmp]) / static_cast<double>(comp_sizes[cmp]);
        pro /= static_cast<double>(comp_sizes.size());
        double fpr = total_neg > 0 ? static_cast<double>(false_pos) /
                                         static_cast<double>(total_neg)
                                   : 0.0;
        if (fpr >= fpr_limit) {
            double pro_at = pro;
            if (fpr > prev_fpr)
                pro_at = prev_pro + (pro - prev_pro) * (fpr_limit - prev_fpr) / (fpr - prev_fpr);
            area += 0.5 * (prev_pro + pro_at) * (fpr_limit - prev_fpr);
            clipped = true;
            break;
        }
        area += 0.5 * (prev_pro + pro) * (fpr - prev_fpr);
        prev_fpr = fpr;
        prev_pro = pro;
    }
    if (!clipped)
        area += (fpr_limit - prev_fpr) * prev_pro;  // flat extension; FPR never reached the limit
    return area / fpr_limit;
}

EvalReport evaluate_run(const std::string& class_name, const std::vector<EvalSample>& samples,
                        double fpr_limit) {
    if (samples.empty()) throw CifError(ErrorCode::EmptyInput, "no samples to evaluate");

    EvalReport report;
    report.class_name = class_name;
    report.n_test = static_cast<int>(samples.size());
    report.fpr_limit = fpr_limit;

    std::vector<double> image_scores;
    std::vector<int> image_labels;
    std::vector<double> pixel_scores;
    std::vector<int> pixel_labels;
    std::vector<MatrixXd> maps;
    std::vector<ForegroundMask> gts;

    for (const EvalSample& s : samples) {
        image_scores.push_back(s.image_score);
        image_labels.push_back(s.label == Label::Anomalous ? 1 : 0);

        ForegroundMask gt;
        if (s.gt_mask) {
            gt = *s.gt_mask;
            if (gt.rows != s.pixel_scores.rows() || gt.cols != s.pixel_scores.cols())
                throw CifError(ErrorCode::ShapeMismatch,
                               "ground-truth mask does not match pixel map for '" + s.id + "'");
        } else {
            gt.rows = static_cast<int>(s.pixel_scores.rows());
            gt.cols = static_cast<int>(s.pixel_scores.cols());
            gt.bits.assign(static_cast<size_t>(gt.rows) * gt.cols, 0);
        }
        for (Eigen::Index r = 0; r < s.pixel_scores.rows(); ++r)
            for (Eigen::Index c = 0; c < s.pixel_scores.cols(); ++c) {
                pixel_scores.push_back(s.pixel_scores(r, c));
                pixel_labels.push_back(gt.bits[static_cast<size_t>(r) * gt.cols + c]);
            }
        maps.push_back(s.pixel_scores);
        gts.push_back(std::move(gt));
    }

    report.i_auroc = auroc(image_scores, image_labels);
    report.p_auroc = auroc(pixel_scores, pixel_labels);
    report.aupro = aupro(maps, gts, fpr_limit);
    return report;
}

}  // namespace cif
