#include "cif/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cif/foreground.hpp"
#include "cif/tensor_io.hpp"

namespace cif {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) { known = true; break; }
        if (!known)
            throw CifError(ErrorCode::InvalidConfig, "unknown key '" + it.key() + "' in " + where);
    }
}

CombineMode combine_from_string(const std::string& s) {
    if (s == "multiply") return CombineMode::Multiply;
    if (s == "hgms_only") return CombineMode::HgmsOnly;
    if (s == "global_only") return CombineMode::GlobalOnly;
    throw CifError(ErrorCode::InvalidConfig, "unknown combine mode '" + s + "'");
}

BackgroundPolicy background_from_string(const std::string& s) {
    if (s == "zero") return BackgroundPolicy::Zero;
    if (s == "global_only") return BackgroundPolicy::GlobalOnly;
    throw CifError(ErrorCode::InvalidConfig, "unknown background policy '" + s + "'");
}

std::string bank_filename(Modality m) {
    return std::string("bank_") + modality_name(m) + ".cifb";
}

}  // namespace

std::vector<Modality> RunConfig::modalities() const {
    if (modality == "rgb") return {Modality::RGB};
    if (modality == "3d") return {Modality::PC3D};
    if (modality == "both") return {Modality::RGB, Modality::PC3D};
    throw CifError(ErrorCode::InvalidConfig, "modality must be rgb, 3d, or both");
}

void RunConfig::validate() const {
    sahc.validate();
    mp.validate();
    search.validate();
    if (rate <= 0.0 || rate > 1.0)
        throw CifError(ErrorCode::InvalidConfig, "rate must be in (0,1]");
    if (fpr_limit <= 0.0 || fpr_limit > 1.0)
        throw CifError(ErrorCode::InvalidConfig, "fpr_limit must be in (0,1]");
    modalities();
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw CifError(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") +
                                                     e.what());
    }
    RunConfig cfg;
    try {
        reject_unknown(doc,
                       {"edges", "tau", "kmeans_iters", "seed", "alpha", "layers", "k_cross",
                        "k_edges", "combine", "background", "smooth_sigma", "output_resolution",
                        "rate", "modality", "fpr_limit", "synth"},
                       "config");
        if (doc.contains("edges")) cfg.sahc.n_edges = doc["edges"].get<int>();
        if (doc.contains("tau")) cfg.sahc.tau = doc["tau"].get<double>();
        if (doc.contains("kmeans_iters")) cfg.sahc.kmeans_iters = doc["kmeans_iters"].get<int>();
        if (doc.contains("seed")) cfg.sahc.seed = doc["seed"].get<uint64_t>();
        if (doc.contains("alpha")) cfg.mp.alpha = doc["alpha"].get<double>();
        if (doc.contains("layers")) cfg.mp.layers = doc["layers"].get<int>();
        if (doc.contains("k_cross")) cfg.mp.k_cross = doc["k_cross"].get<int>();
        if (doc.contains("k_edges")) cfg.search.k_edges = doc["k_edges"].get<int>();
        if (doc.contains("combine"))
            cfg.search.combine = combine_from_string(doc["combine"].get<std::string>());
        if (doc.contains("background"))
            cfg.search.background = background_from_string(doc["background"].get<std::string>());
        if (doc.contains("smooth_sigma")) cfg.search.smooth_sigma = doc["smooth_sigma"].get<double>();
        if (doc.contains("output_resolution")) {
            auto res = doc["output_resolution"].get<std::vector<int>>();
            if (res.size() != 2)
                throw CifError(ErrorCode::InvalidConfig, "output_resolution must be [h, w]");
            cfg.search.out_h = res[0];
            cfg.search.out_w = res[1];
        }
        if (doc.contains("rate")) cfg.rate = doc["rate"].get<double>();
        if (doc.contains("modality")) cfg.modality = doc["modality"].get<std::string>();
        if (doc.contains("fpr_limit")) cfg.fpr_limit = doc["fpr_limit"].get<double>();
        if (doc.contains("synth")) {
            const json& s = doc["synth"];
            reject_unknown(s,
                           {"class_name", "grid_rows", "grid_cols", "dim", "k_true",
                            "noise_sigma", "anomaly_delta", "n_train", "n_test_normal",
                            "n_test_anomalous", "pixels_per_patch", "emit_3d"},
                           "synth config");
            if (s.contains("class_name")) cfg.synth.class_name = s["class_name"].get<std::string>();
            if (s.contains("grid_rows")) cfg.synth.grid_rows = s["grid_rows"].get<int>();
            if (s.contains("grid_cols")) cfg.synth.grid_cols = s["grid_cols"].get<int>();
            if (s.contains("dim")) cfg.synth.dim = s["dim"].get<int>();
            if (s.contains("k_true")) cfg.synth.k_true = s["k_true"].get<int>();
            if (s.contains("noise_sigma")) cfg.synth.noise_sigma = s["noise_sigma"].get<double>();
            if (s.contains("anomaly_delta"))
                cfg.synth.anomaly_delta = s["anomaly_delta"].get<double>();
            if (s.contains("n_train")) cfg.synth.n_train = s["n_train"].get<int>();
            if (s.contains("n_test_normal")) cfg.synth.n_test_normal = s["n_test_normal"].get<int>();
            if (s.contains("n_test_anomalous"))
                cfg.synth.n_test_anomalous = s["n_test_anomalous"].get<int>();
            if (s.contains("pixels_per_patch"))
                cfg.synth.pixels_per_patch = s["pixels_per_patch"].get<int>();
            if (s.contains("emit_3d")) cfg.synth.emit_3d = s["emit_3d"].get<bool>();
        }
    } catch (const json::exception& e) {
        throw CifError(ErrorCode::InvalidConfig, std::string("config is malformed: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw CifError(ErrorCode::IoFailure, "cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

namespace {

ForegroundMask mask_for_entry(const SampleEntry& entry, const std::string& base_dir,
                              const PatchGrid& rgb) {
    if (entry.depth_path) {
        DepthMap depth = read_depth((fs::path(base_dir) / *entry.depth_path).string());
        return extract_foreground_mask(depth, rgb.rows, rgb.cols);
    }
    return full_foreground(rgb.rows, rgb.cols);
}

}  // namespace

std::vector<TrainSample> load_train_samples(const DatasetManifest& manifest,
                                            const std::string& base_dir, int shots,
                                            const RunConfig& cfg) {
    auto train = manifest.train_samples();
    if (train.empty())
        throw CifError(ErrorCode::EmptyInput, "manifest has no train samples");
    if (shots > static_cast<int>(train.size()))
        throw CifError(ErrorCode::InvalidConfig,
                       "requested " + std::to_string(shots) + " shots but only " +
                           std::to_string(train.size()) + " train samples exist");
    size_t take = shots > 0 ? static_cast<size_t>(shots) : train.size();

    std::vector<TrainSample> samples;
    for (size_t i = 0; i < take; ++i) {
        const SampleEntry& entry = *train[i];
        TrainSample sample;
        for (const auto& [mod, rel] : entry.feature_paths)
            sample.features[mod] = read_feature_tensor((fs::path(base_dir) / rel).string());
        if (!sample.features.count(Modality::RGB))
            throw CifError(ErrorCode::InvalidConfig,
                           "sample '" + entry.id + "' has no RGB features");
        const PatchGrid& rgb = sample.features.at(Modality::RGB);
        ForegroundMask mask = mask_for_entry(entry, base_dir, rgb);
        sample.hg = build_sahc(rgb, mask, cfg.sahc);
        samples.push_back(std::move(sample));
    }
    return samples;
}

DetectInput load_detect_input(const SampleEntry& entry, const std::string& base_dir) {
    DetectInput input;
    for (const auto& [mod, rel] : entry.feature_paths)
        input.features[mod] = read_feature_tensor((fs::path(base_dir) / rel).string());
    if (!input.features.count(Modality::RGB))
        throw CifError(ErrorCode::InvalidConfig, "sample '" + entry.id + "' has no RGB features");
    const PatchGrid& rgb = input.features.at(Modality::RGB);
    if (entry.depth_path)
        input.depth = read_depth((fs::path(base_dir) / *entry.depth_path).string());
    input.mask = entry.depth_path ? extract_foreground_mask(*input.depth, rgb.rows, rgb.cols)
                                  : full_foreground(rgb.rows, rgb.cols);
    return input;
}

std::map<Modality, MemoryBank> run_build_memory(const std::string& manifest_path,
                                                const RunConfig& cfg, int shots,
                                                const std::string& out_dir) {
    DatasetManifest manifest = read_manifest(manifest_path);
    std::string base_dir = manifest_base_dir(manifest_path);
    std::vector<TrainSample> samples = load_train_samples(manifest, base_dir, shots, cfg);

    MemoryConfig mem_cfg;
    mem_cfg.class_name = manifest.class_name;
    mem_cfg.sampling_rate = cfg.rate;
    mem_cfg.modalities = cfg.modalities();
    mem_cfg.seed = cfg.sahc.seed;
    auto banks = build_memory(samples, mem_cfg);

    fs::create_directories(out_dir);
    for (const auto& [mod, bank] : banks)
        write_memory_bank(bank, (fs::path(out_dir) / bank_filename(mod)).string());
    return banks;
}

std::map<Modality, MemoryBank> load_banks(const std::string& banks_dir, const RunConfig& cfg) {
    std::map<Modality, MemoryBank> banks;
    for (Modality m : cfg.modalities()) {
        fs::path path = fs::path(banks_dir) / bank_filename(m);
        if (!fs::exists(path))
            throw CifError(ErrorCode::IoFailure, "missing bank file '" + path.string() + "'");
        banks.emplace(m, read_memory_bank(path.string()));
    }
    return banks;
}

void write_pgm16(const MatrixXd& map, const std::string& path) {
    double lo = map.minCoeff();
    double hi = map.maxCoeff();
    double span = hi > lo ? hi - lo : 1.0;
    std::string bytes;
    bytes += "P5\n" + std::to_string(map.cols()) + " " + std::to_string(map.rows()) + "\n65535\n";
    for (Eigen::Index r = 0; r < map.rows(); ++r)
        for (Eigen::Index c = 0; c < map.cols(); ++c) {
            auto v = static_cast<uint16_t>(std::lround((map(r, c) - lo) / span * 65535.0));
            bytes += static_cast<char>(v >> 8);  // PGM samples are big-endian
            bytes += static_cast<char>(v & 0xff);
        }
    atomic_write(path, bytes);
}

DetectRunResult run_detect(const std::string& manifest_path, const std::string& banks_dir,
                           const RunConfig& cfg, const std::string& out_dir) {
    DatasetManifest manifest = read_manifest(manifest_path);
    std::string base_dir = manifest_base_dir(manifest_path);
    auto banks = load_banks(banks_dir, cfg);

    PipelineConfig pipe;
    pipe.sahc = cfg.sahc;
    pipe.mp = cfg.mp;
    pipe.search = cfg.search;
    pipe.modalities = cfg.modalities();

    fs::create_directories(fs::path(out_dir) / "maps");
    std::string csv = "id,image_score,label\n";
    DetectRunResult run;
    for (const SampleEntry* entry : manifest.test_samples()) {
        try {
            DetectInput input = load_detect_input(*entry, base_dir);
            AnomalyResult result = detect(input, banks, pipe);

            PatchGrid pixel_map;
            pixel_map.rows = static_cast<int>(result.pixel_scores.rows());
            pixel_map.cols = static_cast<int>(result.pixel_scores.cols());
            pixel_map.dim = 1;
            pixel_map.modality = Modality::RGB;
            MatrixXfRM flat = result.pixel_scores.cast<float>();
            pixel_map.data = Eigen::Map<MatrixXfRM>(flat.data(), flat.size(), 1);
            write_feature_tensor(pixel_map,
                                 (fs::path(out_dir) / "maps" / (entry->id + "_pixel.cift")).string());
            write_pgm16(result.pixel_scores,
                        (fs::path(out_dir) / "maps" / (entry->id + ".pgm")).string());

            std::ostringstream row;
            row.precision(17);
            row << entry->id << "," << result.image_score << ","
                << (entry->label == Label::Anomalous ? "anomalous" : "normal") << "\n";
            csv += row.str();
            ++run.n_ok;
        } catch (const std::exception& e) {
            std::cerr << "detect failed for sample '" << entry->id << "': " << e.what() << "\n";
            ++run.n_failed;
        }
    }
    atomic_write((fs::path(out_dir) / "scores.csv").string(), csv);
    return run;
}

EvalReport run_eval(const std::string& detect_dir, const std::string& manifest_path,
                    const RunConfig& cfg) {
    DatasetManifest manifest = read_manifest(manifest_path);
    std::string base_dir = manifest_base_dir(manifest_path);

    fs::path scores_path = fs::path(detect_dir) / "scores.csv";
    std::ifstream in(scores_path);
    if (!in)
        throw CifError(ErrorCode::IoFailure, "missing '" + scores_path.string() + "'");
    std::map<std::string, double> image_scores;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t a = line.find(',');
        size_t b = line.rfind(',');
        if (a == std::string::npos || b == a)
            throw CifError(ErrorCode::IoFailure, "malformed scores.csv row: " + line);
        image_scores[line.substr(0, a)] = std::stod(line.substr(a + 1, b - a - 1));
    }

    std::vector<EvalSample> samples;
    for (const SampleEntry* entry : manifest.test_samples()) {
        auto it = image_scores.find(entry->id);
        if (it == image_scores.end())
            throw CifError(ErrorCode::IoFailure,
                           "no detect output for test sample '" + entry->id + "'");
        EvalSample s;
        s.id = entry->id;
        s.label = entry->label;
        s.image_score = it->second;
        fs::path map_path = fs::path(detect_dir) / "maps" / (entry->id + "_pixel.cift");
        if (!fs::exists(map_path))
            throw CifError(ErrorCode::IoFailure, "missing score map '" + map_path.string() + "'");
        PatchGrid map_grid = read_feature_tensor(map_path.string());
        if (map_grid.dim != 1)
            throw CifError(ErrorCode::ShapeMismatch,
                           "score map '" + map_path.string() + "' is not single-channel");
        s.pixel_scores = Eigen::Map<MatrixXfRM>(map_grid.data.data(), map_grid.rows,
                                                map_grid.cols)
                             .cast<double>();
        if (entry->gt_mask_path)
            s.gt_mask = read_mask((fs::path(base_dir) / *entry->gt_mask_path).string());
        samples.push_back(std::move(s));
    }

    EvalReport report = evaluate_run(manifest.class_name, samples, cfg.fpr_limit);

    std::ostringstream csv;
    csv.precision(10);
    csv << "class,n_test,i_auroc,p_auroc,aupro,fpr_limit\n";
    csv << report.class_name << "," << report.n_test << "," << report.i_auroc << ","
        << report.p_auroc << "," << report.aupro << "," << report.fpr_limit << "\n";
    csv << "mean," << report.n_test << "," << report.i_auroc << "," << report.p_auroc << ","
        << report.aupro << "," << report.fpr_limit << "\n";
    atomic_write((fs::path(detect_dir) / "report.csv").string(), csv.str());

    std::ostringstream txt;
    txt.precision(6);
    txt << "class:     " << report.class_name << "\n"
        << "n_test:    " << report.n_test << "\n"
        << "I-AUROC:   " << report.i_auroc << "\n"
        << "P-AUROC:   " << report.p_auroc << "\n"
        << "AUPRO:     " << report.aupro << " (FPR limit " << report.fpr_limit << ")\n";
    atomic_write((fs::path(detect_dir) / "report.txt").string(), txt.str());
    return report;
}

std::string run_mp_diag(const std::string& manifest_path, const std::string& banks_dir,
                        const RunConfig& cfg, const std::vector<double>& alpha_grid,
                        const std::vector<int>& layer_grid, const std::string& out_csv) {
    DatasetManifest manifest = read_manifest(manifest_path);
    std::string base_dir = manifest_base_dir(manifest_path);
    RunConfig rgb_cfg = cfg;
    rgb_cfg.modality = "rgb";
    auto banks = load_banks(banks_dir, rgb_cfg);
    const MemoryBank& bank = banks.at(Modality::RGB);
    MatrixXd x_mem = bank.all_nodes();
    MatrixXd h_mem = bank.bucket_incidence();

    // Per test sample: foreground features before/after message passing.
    struct SampleCloud {
        MatrixXd x_fore;
        JointHypergraph joint;
    };
    std::vector<SampleCloud> clouds;
    for (const SampleEntry* entry : manifest.test_samples()) {
        DetectInput input = load_detect_input(*entry, base_dir);
        const PatchGrid& rgb = input.features.at(Modality::RGB);
        Hypergraph hg = build_sahc(rgb, input.mask, cfg.sahc);
        MatrixXd x = rgb.values();
        std::vector<int> fg;
        for (int i = 0; i < hg.n_nodes; ++i)
            if (hg.hard_assign[i] != kBackground) fg.push_back(i);
        SampleCloud cloud;
        cloud.x_fore.resize(fg.size(), rgb.dim);
        MatrixXd h_fore(fg.size(), hg.n_edges);
        for (size_t i = 0; i < fg.size(); ++i) {
            cloud.x_fore.row(i) = x.row(fg[i]);
            h_fore.row(i) = hg.incidence.row(fg[i]);
        }
        int k = std::min<int>({cfg.mp.k_cross, static_cast<int>(fg.size()),
                               static_cast<int>(x_mem.rows())});
        MatrixXd cross = build_cross_hyperedges(cloud.x_fore, x_mem, k);
        cloud.joint = build_joint(cloud.x_fore, x_mem, h_fore, h_mem, cross);
        clouds.push_back(std::move(cloud));
    }
    if (clouds.empty())
        throw CifError(ErrorCode::EmptyInput, "manifest has no test samples");

    double annd_baseline = 0.0;
    for (const auto& cloud : clouds) annd_baseline += annd(cloud.x_fore, x_mem);
    annd_baseline /= static_cast<double>(clouds.size());

    std::ostringstream csv;
    csv.precision(10);
    csv << "alpha,layers,annd_before,annd_after,pcs\n";
    csv << "1,0," << annd_baseline << "," << annd_baseline << ",1\n";  // no message passing
    for (int layers : layer_grid) {
        for (double alpha : alpha_grid) {
            MpConfig mp;
            mp.alpha = alpha;
            mp.layers = layers;
            mp.k_cross = cfg.mp.k_cross;
            double annd_after = 0.0;
            double pcs_mean = 0.0;
            for (const auto& cloud : clouds) {
                MatrixXd x_new = apply_mp(cloud.joint, mp);
                annd_after += annd(x_new, x_mem);
                pcs_mean += pcs(cloud.x_fore, x_new);
            }
            annd_after /= static_cast<double>(clouds.size());
            pcs_mean /= static_cast<double>(clouds.size());
            csv << alpha << "," << layers << "," << annd_baseline << "," << annd_after << ","
                << pcs_mean << "\n";
        }
    }
    std::string text = csv.str();
    if (!out_csv.empty()) atomic_write(out_csv, text);
    return text;
}

std::string run_hg_metrics(const std::string& manifest_path, const RunConfig& cfg,
                           const std::string& out_csv, const std::string& dump_dir) {
    DatasetManifest manifest = read_manifest(manifest_path);
    std::string base_dir = manifest_base_dir(manifest_path);
    if (!dump_dir.empty()) fs::create_directories(dump_dir);

    std::ostringstream csv;
    csv.precision(10);
    csv << "id,split,he,ics,icd,sil\n";
    for (const SampleEntry& entry : manifest.samples) {
        DetectInput input = load_detect_input(entry, base_dir);
        const PatchGrid& rgb = input.features.at(Modality::RGB);
        Hypergraph hg = build_sahc(rgb, input.mask, cfg.sahc);
        QualityMetrics qm = quality_metrics(rgb.values(), hg);
        csv << entry.id << "," << (entry.split == Split::Train ? "train" : "test") << ","
            << qm.he << "," << qm.ics << "," << qm.icd << "," << qm.sil << "\n";
        if (!dump_dir.empty())
            atomic_write((fs::path(dump_dir) / (entry.id + ".hg.json")).string(),
                         hypergraph_to_text(hg));
    }
    std::string text = csv.str();
    if (!out_csv.empty()) atomic_write(out_csv, text);
    return text;
}

}  // namespace cif
