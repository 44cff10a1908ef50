#ifndef CIF_FOREGROUND_HPP
#define CIF_FOREGROUND_HPP

#include "cif/types.hpp"

namespace cif {

/// Derives a patch-level foreground mask from a depth map.
///
/// Depth is min-max normalized over non-missing entries (0 marks missing),
/// missing values are filled by `fill_iters` passes of 8-neighbor mean
/// interpolation, the background level is estimated as the mean of the four
/// corner pixels, and a pixel is foreground when its depth deviates from
/// that level by more than `threshold`. The pixel mask is pooled to the
/// patch grid by majority: a patch is foreground iff more than half of its
/// pixels are.
ForegroundMask extract_foreground_mask(const DepthMap& depth, int patch_rows, int patch_cols,
                                       int fill_iters = 3, double threshold = 7e-3);

/// All-foreground mask for samples without depth information.
ForegroundMask full_foreground(int rows, int cols);

/// Nearest-neighbor upsampling of a patch mask to pixel resolution.
std::vector<uint8_t> upsample_mask(const ForegroundMask& mask, int h, int w);

}  // namespace cif

#endif
