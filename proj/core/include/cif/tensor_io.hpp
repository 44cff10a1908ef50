#ifndef CIF_TENSOR_IO_HPP
#define CIF_TENSOR_IO_HPP

#include <string>

#include "cif/types.hpp"

namespace cif {

// On-disk formats, all little-endian:
//   CIFT  feature tensor: magic "CIFT", u32 version=1, u32 rows, u32 cols,
//         u32 dim, u32 modality (0=rgb, 1=3d), then rows*cols*dim float32
//         row-major (24-byte header).
//   CIFM  mask: magic "CIFM", u32 version=1, u32 rows, u32 cols, then
//         rows*cols u8 (0/1).
//   CIFD  depth: magic "CIFD", u32 version=1, u32 h, u32 w, then h*w float32.

PatchGrid read_feature_tensor(const std::string& path);
void write_feature_tensor(const PatchGrid& grid, const std::string& path);

ForegroundMask read_mask(const std::string& path);
void write_mask(const ForegroundMask& mask, const std::string& path);

DepthMap read_depth(const std::string& path);
void write_depth(const DepthMap& depth, const std::string& path);

/// Writes `bytes` to `path` via a temp file and rename.
void atomic_write(const std::string& path, const std::string& bytes);

}  // namespace cif

#endif
