#include "cif/foreground.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cif {

ForegroundMask extract_foreground_mask(const DepthMap& depth, int patch_rows, int patch_cols,
                                       int fill_iters, double threshold) {
    depth.validate();
    if (patch_rows <= 0 || patch_cols <= 0)
        throw CifError(ErrorCode::InvalidConfig, "patch grid must be positive");

    const int h = depth.h, w = depth.w;
    Eigen::MatrixXd vals = depth.values.cast<double>();
    Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic> missing(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) missing(r, c) = vals(r, c) == 0.0;

    // Min-max normalize over the non-missing entries.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (!missing(r, c)) {
                lo = std::min(lo, vals(r, c));
                hi = std::max(hi, vals(r, c));
            }
    bool any_present = std::isfinite(lo);
    if (any_present) {
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                if (!missing(r, c)) vals(r, c) = hi > lo ? (vals(r, c) - lo) / (hi - lo) : 0.5;
    }

    // Neighborhood mean interpolation of missing pixels, synchronous passes.
    for (int iter = 0; iter < fill_iters; ++iter) {
        Eigen::MatrixXd next = vals;
        auto next_missing = missing;
        bool changed = false;
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (!missing(r, c)) continue;
                double sum = 0.0;
                int count = 0;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        int rr = r + dr, cc = c + dc;
                        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                        if (missing(rr, cc)) continue;
                        sum += vals(rr, cc);
                        ++count;
                    }
                }
                if (count > 0) {
                    next(r, c) = sum / count;
                    next_missing(r, c) = 0;
                    changed = true;
                }
            }
        }
        vals.swap(next);
        missing.swap(next_missing);
        if (!changed) break;
    }

    bool all_missing = true;
    for (int r = 0; r < h && all_missing; ++r)
        for (int c = 0; c < w; ++c)
            if (!missing(r, c)) { all_missing = false; break; }
    if (all_missing)
        throw CifError(ErrorCode::AllDepthMissing, "depth map has no usable values");

    // Background level from the four corners; still-missing pixels count as 0.
    auto corner = [&](int r, int c) { return missing(r, c) ? 0.0 : vals(r, c); };
    double background =
        (corner(0, 0) + corner(0, w - 1) + corner(h - 1, 0) + corner(h - 1, w - 1)) / 4.0;

    std::vector<uint8_t> pixel_fg(static_cast<size_t>(h) * w, 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            pixel_fg[static_cast<size_t>(r) * w + c] =
                !missing(r, c) && std::abs(vals(r, c) - background) > threshold;

    // Pool to the patch grid: foreground iff > 50% of the patch's pixels are.
    ForegroundMask mask;
    mask.rows = patch_rows;
    mask.cols = patch_cols;
    mask.bits.assign(static_cast<size_t>(patch_rows) * patch_cols, 0);
    for (int pr = 0; pr < patch_rows; ++pr) {
        int r0 = static_cast<int>(static_cast<int64_t>(pr) * h / patch_rows);
        int r1 = static_cast<int>(static_cast<int64_t>(pr + 1) * h / patch_rows);
        for (int pc = 0; pc < patch_cols; ++pc) {
            int c0 = static_cast<int>(static_cast<int64_t>(pc) * w / patch_cols);
            int c1 = static_cast<int>(static_cast<int64_t>(pc + 1) * w / patch_cols);
            int total = (r1 - r0) * (c1 - c0);
            int fg = 0;
            for (int r = r0; r < r1; ++r)
                for (int c = c0; c < c1; ++c) fg += pixel_fg[static_cast<size_t>(r) * w + c];
            mask.bits[static_cast<size_t>(pr) * patch_cols + pc] = 2 * fg > total;
        }
    }
    return mask;
}

ForegroundMask full_foreground(int rows, int cols) {
    ForegroundMask mask;
    mask.rows = rows;
    mask.cols = cols;
    mask.bits.assign(static_cast<size_t>(rows) * cols, 1);
    return mask;
}

std::vector<uint8_t> upsample_mask(const ForegroundMask& mask, int h, int w) {
    mask.validate();
    std::vector<uint8_t> out(static_cast<size_t>(h) * w, 0);
    for (int r = 0; r < h; ++r) {
        int pr = std::min(static_cast<int>(static_cast<int64_t>(r) * mask.rows / h), mask.rows - 1);
        for (int c = 0; c < w; ++c) {
            int pc = std::min(static_cast<int>(static_cast<int64_t>(c) * mask.cols / w), mask.cols - 1);
            out[static_cast<size_t>(r) * w + c] = mask.bits[static_cast<size_t>(pr) * mask.cols + pc];
        }
    }
    return out;
}

}  // namespace cif
