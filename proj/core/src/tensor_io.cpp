#include "cif/tensor_io.hpp"

#include <filesystem>
#include <fstream>

#include "io_util.hpp"

namespace cif {

using detail::BinReader;
using detail::append_f32;
using detail::append_u32;
using detail::checked_dim;
using detail::kFormatVersion;

void atomic_write(const std::string& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw CifError(ErrorCode::IoFailure, "cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw CifError(ErrorCode::IoFailure, "short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw CifError(ErrorCode::IoFailure, "cannot rename into '" + path + "'");
    }
}

PatchGrid read_feature_tensor(const std::string& path) {
    BinReader r(path, "CIFT");
    PatchGrid grid;
    grid.rows = checked_dim(r.read_u32("rows"), "rows", path);
    grid.cols = checked_dim(r.read_u32("cols"), "cols", path);
    grid.dim = checked_dim(r.read_u32("dim"), "dim", path);
    uint32_t modality = r.read_u32("modality");
    if (modality > 1)
        throw CifError(ErrorCode::VersionUnsupported,
                       "'" + path + "' has unknown modality tag " + std::to_string(modality));
    grid.modality = static_cast<Modality>(modality);
    grid.data.resize(static_cast<Eigen::Index>(grid.rows) * grid.cols, grid.dim);
    r.read_f32(grid.data.data(), static_cast<size_t>(grid.data.size()), "payload");
    if (!grid.data.allFinite())
        throw CifError(ErrorCode::NonFiniteValue, "'" + path + "' contains NaN/Inf");
    grid.validate();
    return grid;
}

void write_feature_tensor(const PatchGrid& grid, const std::string& path) {
    grid.validate();
    std::string bytes;
    bytes.reserve(24 + static_cast<size_t>(grid.data.size()) * sizeof(float));
    bytes.append("CIFT", 4);
    append_u32(bytes, kFormatVersion);
    append_u32(bytes, static_cast<uint32_t>(grid.rows));
    append_u32(bytes, static_cast<uint32_t>(grid.cols));
    append_u32(bytes, static_cast<uint32_t>(grid.dim));
    append_u32(bytes, static_cast<uint32_t>(grid.modality));
    append_f32(bytes, grid.data.data(), static_cast<size_t>(grid.data.size()));
    atomic_write(path, bytes);
}

ForegroundMask read_mask(const std::string& path) {
    BinReader r(path, "CIFM");
    ForegroundMask mask;
    mask.rows = checked_dim(r.read_u32("rows"), "rows", path);
    mask.cols = checked_dim(r.read_u32("cols"), "cols", path);
    mask.bits.resize(static_cast<size_t>(mask.rows) * mask.cols);
    r.read_u8(mask.bits.data(), mask.bits.size(), "payload");
    for (uint8_t& b : mask.bits)
        if (b > 1)
            throw CifError(ErrorCode::NonFiniteValue, "'" + path + "' has a mask byte not in {0,1}");
    mask.validate();
    return mask;
}

void write_mask(const ForegroundMask& mask, const std::string& path) {
    mask.validate();
    std::string bytes;
    bytes.append("CIFM", 4);
    append_u32(bytes, kFormatVersion);
    append_u32(bytes, static_cast<uint32_t>(mask.rows));
    append_u32(bytes, static_cast<uint32_t>(mask.cols));
    bytes.append(reinterpret_cast<const char*>(mask.bits.data()), mask.bits.size());
    atomic_write(path, bytes);
}

DepthMap read_depth(const std::string& path) {
    BinReader r(path, "CIFD");
    DepthMap depth;
    depth.h = checked_dim(r.read_u32("h"), "h", path);
    depth.w = checked_dim(r.read_u32("w"), "w", path);
    depth.values.resize(depth.h, depth.w);
    r.read_f32(depth.values.data(), static_cast<size_t>(depth.values.size()), "payload");
    if (!depth.values.allFinite())
        throw CifError(ErrorCode::NonFiniteValue, "'" + path + "' contains NaN/Inf");
    depth.validate();
    return depth;
}

void write_depth(const DepthMap& depth, const std::string& path) {
    depth.validate();
    std::string bytes;
    bytes.append("CIFD", 4);
    append_u32(bytes, kFormatVersion);
    append_u32(bytes, static_cast<uint32_t>(depth.h));
    append_u32(bytes, static_cast<uint32_t>(depth.w));
    append_f32(bytes, depth.values.data(), static_cast<size_t>(depth.values.size()));
    atomic_write(path, bytes);
}

}  // namespace cif
