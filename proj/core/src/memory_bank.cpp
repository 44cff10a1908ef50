#include "cif/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cif/tensor_io.hpp"
#include "io_util.hpp"

namespace cif {

namespace {

/// Hard-membership mean feature per hyperedge; empty edges give a zero row
/// and are reported through `non_empty`.
MatrixXd hard_edge_means(const MatrixXd& features, const Hypergraph& hg,
                         std::vector<bool>& non_empty) {
    MatrixXd means = MatrixXd::Zero(hg.n_edges, features.cols());
    std::vector<int> counts(hg.n_edges, 0);
    for (int i = 0; i < hg.n_nodes; ++i) {
        int e = hg.hard_assign[i];
        if (e == kBackground) continue;
        means.row(e) += features.row(i);
        ++counts[e];
    }
    non_empty.assign(hg.n_edges, false);
    for (int e = 0; e < hg.n_edges; ++e) {
        if (counts[e] > 0) {
            means.row(e) /= counts[e];
            non_empty[e] = true;
        }
    }
    return means;
}

/// Nearest bank edge per sample edge, Euclidean on edge features, ties to
/// the lowest bank index. Empty sample edges map to -1.
std::vector<int> match_edges(const MatrixXd& sample_edge_feats,
                             const std::vector<bool>& sample_edge_non_empty,
                             const MatrixXd& bank_edge_feats) {
    std::vector<int> match(sample_edge_feats.rows(), -1);
    for (Eigen::Index s = 0; s < sample_edge_feats.rows(); ++s) {
        if (!sample_edge_non_empty[s]) continue;
        int best = 0;
        double best_d = (sample_edge_feats.row(s) - bank_edge_feats.row(0)).squaredNorm();
        for (Eigen::Index e = 1; e < bank_edge_feats.rows(); ++e) {
            double d = (sample_edge_feats.row(s) - bank_edge_feats.row(e)).squaredNorm();
            if (d < best_d) { best_d = d; best = static_cast<int>(e); }
        }
        match[s] = best;
    }
    return match;
}

void append_rows(MatrixXd& bucket, const MatrixXd& features, const std::vector<int>& nodes) {
    if (nodes.empty()) return;
    Eigen::Index old_rows = bucket.rows();
    bucket.conservativeResize(old_rows + static_cast<Eigen::Index>(nodes.size()), features.cols());
    for (size_t i = 0; i < nodes.size(); ++i)
        bucket.row(old_rows + static_cast<Eigen::Index>(i)) = features.row(nodes[i]);
}

}  // namespace

int MemoryBank::total_nodes() const {
    int n = 0;
    for (const auto& b : buckets) n += static_cast<int>(b.rows());
    return n;
}

MatrixXd MemoryBank::all_nodes() const {
    MatrixXd out(total_nodes(), dim);
    Eigen::Index row = 0;
    for (const auto& b : buckets) {
        out.middleRows(row, b.rows()) = b;
        row += b.rows();
    }
    return out;
}

MatrixXd MemoryBank::bucket_incidence() const {
    MatrixXd out = MatrixXd::Zero(total_nodes(), n_edges);
    Eigen::Index row = 0;
    for (int e = 0; e < n_edges; ++e) {
        for (Eigen::Index i = 0; i < buckets[e].rows(); ++i) out(row++, e) = 1.0;
    }
    return out;
}

void MemoryBank::validate() const {
    if (n_edges < 1 || static_cast<int>(buckets.size()) != n_edges)
        throw CifError(ErrorCode::ShapeMismatch, "bank bucket count does not match n_edges");
    if (edge_feats.rows() != n_edges || edge_feats.cols() != dim)
        throw CifError(ErrorCode::ShapeMismatch, "bank edge_feats shape mismatch");
    if (sampling_rate <= 0.0 || sampling_rate > 1.0)
        throw CifError(ErrorCode::InvalidConfig, "sampling_rate must be in (0,1]");
    for (int e = 0; e < n_edges; ++e) {
        if (buckets[e].rows() == 0)
            throw CifError(ErrorCode::EmptyBucket, "bucket " + std::to_string(e) + " is empty");
        if (buckets[e].cols() != dim)
            throw CifError(ErrorCode::DimMismatch, "bucket dim mismatch");
    }
}

MemoryBank init_memory(const PatchGrid& sample, const Hypergraph& hg, Modality modality,
                       double rate, const std::string& class_name) {
    sample.validate();
    if (hg.n_nodes != sample.n_nodes())
        throw CifError(ErrorCode::ShapeMismatch, "hypergraph does not match sample grid");
    if (rate <= 0.0 || rate > 1.0)
        throw CifError(ErrorCode::InvalidConfig, "sampling rate must be in (0,1]");

    MemoryBank bank;
    bank.class_name = class_name;
    bank.modality = modality;
    bank.n_edges = hg.n_edges;
    bank.dim = sample.dim;
    bank.sampling_rate = rate;
    bank.buckets.assign(hg.n_edges, MatrixXd(0, sample.dim));

    MatrixXd features = sample.values();
    std::vector<std::vector<int>> members(hg.n_edges);
    for (int i = 0; i < hg.n_nodes; ++i) {
        int e = hg.hard_assign[i];
        if (e != kBackground) members[e].push_back(i);
    }
    for (int e = 0; e < hg.n_edges; ++e) {
        if (members[e].empty())
            throw CifError(ErrorCode::EmptyBucket,
                           "hyperedge " + std::to_string(e) + " has no hard-assigned node");
        append_rows(bank.buckets[e], features, members[e]);
    }
    update_hyperedges(bank);
    return bank;
}

void assign_nodes(MemoryBank& bank, const PatchGrid& sample, const Hypergraph& hg) {
    sample.validate();
    if (sample.dim != bank.dim)
        throw CifError(ErrorCode::DimMismatch, "sample dim does not match bank dim");
    if (hg.n_edges != bank.n_edges)
        throw CifError(ErrorCode::ShapeMismatch, "sample hyperedge count does not match bank");
    if (hg.n_nodes != sample.n_nodes())
        throw CifError(ErrorCode::ShapeMismatch, "hypergraph does not match sample grid");

    MatrixXd features = sample.values();
    std::vector<bool> non_empty;
    MatrixXd sample_ef = hard_edge_means(features, hg, non_empty);
    std::vector<int> match = match_edges(sample_ef, non_empty, bank.edge_feats);

    std::vector<std::vector<int>> members(hg.n_edges);
    for (int i = 0; i < hg.n_nodes; ++i) {
        int e = hg.hard_assign[i];
        if (e != kBackground) members[e].push_back(i);
    }
    for (int s = 0; s < hg.n_edges; ++s)
        if (match[s] >= 0) append_rows(bank.buckets[match[s]], features, members[s]);
}

void update_hyperedges(MemoryBank& bank) {
    bank.edge_feats.resize(bank.n_edges, bank.dim);
    for (int e = 0; e < bank.n_edges; ++e) {
        if (bank.buckets[e].rows() == 0)
            throw CifError(ErrorCode::EmptyBucket, "bucket " + std::to_string(e) + " is empty");
        bank.edge_feats.row(e) = bank.buckets[e].colwise().mean();
    }
}

std::vector<int> coreset_sample_bucket(const MatrixXd& nodes, double rate, uint64_t /*seed*/) {
    const int m = static_cast<int>(nodes.rows());
    if (m < 1) throw CifError(ErrorCode::EmptyInput, "cannot sample an empty bucket");
    if (rate <= 0.0 || rate > 1.0)
        throw CifError(ErrorCode::InvalidConfig, "sampling rate must be in (0,1]");
    const int target = std::max(1, static_cast<int>(std::ceil(rate * m)));

    Eigen::RowVectorXd mean = nodes.colwise().mean();
    int start = 0;
    double best = -1.0;
    for (int i = 0; i < m; ++i) {
        double d = (nodes.row(i) - mean).squaredNorm();
        if (d > best) { best = d; start = i; }
    }

    std::vector<int> selected{start};
    std::vector<double> min_sq(m);
    for (int i = 0; i < m; ++i) min_sq[i] = (nodes.row(i) - nodes.row(start)).squaredNorm();
    while (static_cast<int>(selected.size()) < target) {
        int next = 0;
        double far = -1.0;
        for (int i = 0; i < m; ++i)
            if (min_sq[i] > far) { far = min_sq[i]; next = i; }
        selected.push_back(next);
        for (int i = 0; i < m; ++i)
            min_sq[i] = std::min(min_sq[i], (nodes.row(i) - nodes.row(next)).squaredNorm());
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

int minimax_medoid(const MatrixXd& nodes) {
    const int m = static_cast<int>(nodes.rows());
    if (m < 1) throw CifError(ErrorCode::EmptyInput, "cannot pick a medoid of nothing");
    int best = 0;
    double best_max = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        double worst = 0.0;
        for (int j = 0; j < m; ++j)
            worst = std::max(worst, (nodes.row(i) - nodes.row(j)).squaredNorm());
        if (worst < best_max) { best_max = worst; best = i; }
    }
    return best;
}

std::map<Modality, MemoryBank> build_memory(const std::vector<TrainSample>& samples,
                                            const MemoryConfig& cfg) {
    if (samples.empty())
        throw CifError(ErrorCode::EmptyInput, "need at least one training sample");
    if (cfg.modalities.empty())
        throw CifError(ErrorCode::InvalidConfig, "no modalities requested");
    for (const auto& sample : samples) {
        if (!sample.features.count(Modality::RGB))
            throw CifError(ErrorCode::InvalidConfig,
                           "every training sample needs RGB features (hypergraph reference)");
        for (Modality m : cfg.modalities)
            if (!sample.features.count(m))
                throw CifError(ErrorCode::InvalidConfig,
                               std::string("sample missing requested modality ") +
                                   modality_name(m));
    }

    // The RGB bank is always built: its edge features drive the
    // sample-to-bank matching whose structure every modality bank inherits.
    std::vector<Modality> built = cfg.modalities;
    if (std::find(built.begin(), built.end(), Modality::RGB) == built.end())
        built.push_back(Modality::RGB);

    std::map<Modality, MemoryBank> banks;
    for (Modality m : built)
        banks.emplace(m, init_memory(samples[0].features.at(m), samples[0].hg, m,
                                     cfg.sampling_rate, cfg.class_name));

    for (size_t s = 1; s < samples.size(); ++s) {
        const TrainSample& sample = samples[s];
        if (sample.hg.n_edges != samples[0].hg.n_edges)
            throw CifError(ErrorCode::ShapeMismatch, "inconsistent hyperedge count across samples");

        MatrixXd rgb_features = sample.features.at(Modality::RGB).values();
        std::vector<bool> non_empty;
        MatrixXd sample_ef = hard_edge_means(rgb_features, sample.hg, non_empty);
        std::vector<int> match = match_edges(sample_ef, non_empty,
                                             banks.at(Modality::RGB).edge_feats);

        std::vector<std::vector<int>> members(sample.hg.n_edges);
        for (int i = 0; i < sample.hg.n_nodes; ++i) {
            int e = sample.hg.hard_assign[i];
            if (e != kBackground) members[e].push_back(i);
        }

        for (auto& [modality, bank] : banks) {
            MatrixXd features = sample.features.at(modality).values();
            if (features.cols() != bank.dim)
                throw CifError(ErrorCode::DimMismatch, "sample dim does not match bank dim");
            for (int se = 0; se < sample.hg.n_edges; ++se)
                if (match[se] >= 0) append_rows(bank.buckets[match[se]], features, members[se]);
            update_hyperedges(bank);
        }
    }

    // Memory bank sampling stage: greedy coreset per bucket, with the
    // minimax medoid as the guaranteed-non-empty fallback.
    for (auto& [modality, bank] : banks) {
        for (int e = 0; e < bank.n_edges; ++e) {
            std::vector<int> keep = coreset_sample_bucket(bank.buckets[e], cfg.sampling_rate,
                                                          cfg.seed);
            if (keep.empty()) keep.push_back(minimax_medoid(bank.buckets[e]));
            MatrixXd sampled(keep.size(), bank.dim);
            for (size_t i = 0; i < keep.size(); ++i) sampled.row(i) = bank.buckets[e].row(keep[i]);
            bank.buckets[e] = std::move(sampled);
        }
        update_hyperedges(bank);
        bank.validate();
    }

    if (std::find(cfg.modalities.begin(), cfg.modalities.end(), Modality::RGB) ==
        cfg.modalities.end())
        banks.erase(Modality::RGB);
    return banks;
}

MemoryBank read_memory_bank(const std::string& path) {
    detail::BinReader r(path, "CIFB");
    MemoryBank bank;
    bank.n_edges = detail::checked_dim(r.read_u32("n_edges"), "n_edges", path);
    bank.dim = detail::checked_dim(r.read_u32("dim"), "dim", path);
    bank.sampling_rate = r.read_f64("rate");
    uint32_t modality = r.read_u32("modality");
    if (modality > 1)
        throw CifError(ErrorCode::VersionUnsupported, "'" + path + "' has unknown modality tag");
    bank.modality = static_cast<Modality>(modality);
    uint32_t name_len = r.read_u32("name length");
    if (name_len > 4096)
        throw CifError(ErrorCode::TruncatedFile, "'" + path + "' has implausible name length");
    bank.class_name = r.read_string(name_len, "class name");

    bank.buckets.resize(bank.n_edges);
    std::vector<float> row_buf;
    for (int e = 0; e < bank.n_edges; ++e) {
        uint32_t count = r.read_u32("bucket count");
        if (count == 0 || count > (1u << 24))
            throw CifError(ErrorCode::EmptyBucket,
                           "'" + path + "' bucket " + std::to_string(e) + " is empty");
        row_buf.resize(static_cast<size_t>(count) * bank.dim);
        r.read_f32(row_buf.data(), row_buf.size(), "bucket payload");
        bank.buckets[e].resize(count, bank.dim);
        for (uint32_t i = 0; i < count; ++i)
            for (int d = 0; d < bank.dim; ++d)
                bank.buckets[e](i, d) = row_buf[static_cast<size_t>(i) * bank.dim + d];
    }
    row_buf.resize(static_cast<size_t>(bank.n_edges) * bank.dim);
    r.read_f32(row_buf.data(), row_buf.size(), "edge features");
    bank.edge_feats.resize(bank.n_edges, bank.dim);
    for (int e = 0; e < bank.n_edges; ++e)
        for (int d = 0; d < bank.dim; ++d)
            bank.edge_feats(e, d) = row_buf[static_cast<size_t>(e) * bank.dim + d];
    bank.validate();
    return bank;
}

void write_memory_bank(const MemoryBank& bank, const std::string& path) {
    bank.validate();
    std::string bytes;
    bytes.append("CIFB", 4);
    detail::append_u32(bytes, detail::kFormatVersion);
    detail::append_u32(bytes, static_cast<uint32_t>(bank.n_edges));
    detail::append_u32(bytes, static_cast<uint32_t>(bank.dim));
    detail::append_f64(bytes, bank.sampling_rate);
    detail::append_u32(bytes, static_cast<uint32_t>(bank.modality));
    detail::append_u32(bytes, static_cast<uint32_t>(bank.class_name.size()));
    bytes.append(bank.class_name);
    std::vector<float> row_buf;
    for (const MatrixXd& bucket : bank.buckets) {
        detail::append_u32(bytes, static_cast<uint32_t>(bucket.rows()));
        row_buf.resize(static_cast<size_t>(bucket.rows()) * bank.dim);
        for (Eigen::Index i = 0; i < bucket.rows(); ++i)
            for (int d = 0; d < bank.dim; ++d)
                row_buf[static_cast<size_t>(i) * bank.dim + d] = static_cast<float>(bucket(i, d));
        detail::append_f32(bytes, row_buf.data(), row_buf.size());
    }
    row_buf.resize(static_cast<size_t>(bank.n_edges) * bank.dim);
    for (int e = 0; e < bank.n_edges; ++e)
        for (int d = 0; d < bank.dim; ++d)
            row_buf[static_cast<size_t>(e) * bank.dim + d] =
                static_cast<float>(bank.edge_feats(e, d));
    detail::append_f32(bytes, row_buf.data(), row_buf.size());
    atomic_write(path, bytes);
}

}  // namespace cif
