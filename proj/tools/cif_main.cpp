// cif - command-line front end for the few-shot anomaly-detection pipeline:
// synthetic dataset generation, memory bank construction, detection,
// evaluation, and diagnostics.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cif/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    double alpha = 0.9, tau = 0.5, rate = 0.1, smooth_sigma = 4.0;
    int layers = 1, k_cross = 3, k_edges = 2, edges = 4;
    std::string modality = "both";
    CLI::App* cmd = nullptr;

    void attach(CLI::App* app) {
        cmd = app;
        app->add_option("--config", config_path, "JSON run configuration file");
        app->add_option("--seed", seed, "clustering / generator seed");
        app->add_option("--alpha", alpha, "message passing retention coefficient");
        app->add_option("--layers", layers, "message passing layers");
        app->add_option("--k-cross", k_cross, "cross hyperedge neighbor count");
        app->add_option("--k-edges", k_edges, "memory hyperedges searched per test hyperedge");
        app->add_option("--edges", edges, "hyperedges per class");
        app->add_option("--rate", rate, "memory sampling rate");
        app->add_option("--tau", tau, "hyperedge membership threshold");
        app->add_option("--modality", modality, "rgb, 3d, or both")
            ->check(CLI::IsMember({"rgb", "3d", "both"}));
        app->add_option("--smooth-sigma", smooth_sigma, "score map blur sigma in pixels");
    }

    cif::RunConfig resolve() const {
        cif::RunConfig cfg = config_path.empty() ? cif::RunConfig()
                                                 : cif::RunConfig::from_file(config_path);
        auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };
        if (passed("--seed")) cfg.sahc.seed = seed;
        if (passed("--alpha")) cfg.mp.alpha = alpha;
        if (passed("--layers")) cfg.mp.layers = layers;
        if (passed("--k-cross")) cfg.mp.k_cross = k_cross;
        if (passed("--k-edges")) cfg.search.k_edges = k_edges;
        if (passed("--edges")) cfg.sahc.n_edges = edges;
        if (passed("--rate")) cfg.rate = rate;
        if (passed("--tau")) cfg.sahc.tau = tau;
        if (passed("--modality")) cfg.modality = modality;
        if (passed("--smooth-sigma")) cfg.search.smooth_sigma = smooth_sigma;
        cfg.validate();
        return cfg;
    }
};

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

int exit_code_for(const cif::CifError& e) {
    switch (e.code()) {
        case cif::ErrorCode::InvalidConfig:
        case cif::ErrorCode::IoFailure:
        case cif::ErrorCode::BadMagic:
        case cif::ErrorCode::VersionUnsupported:
            return 2;
        default:
            return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CIF few-shot anomaly detection pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset class");
    CommonFlags synth_flags;
    std::string synth_out;
    synth_flags.attach(synth);
    synth->add_option("--out", synth_out, "output dataset directory")->required();

    // build-memory
    auto* build = app.add_subcommand("build-memory", "build per-modality memory banks");
    CommonFlags build_flags;
    std::string build_manifest, build_out;
    int shots = 0;
    build_flags.attach(build);
    build->add_option("--manifest", build_manifest, "dataset manifest")->required();
    build->add_option("--out", build_out, "bank output directory")->required();
    build->add_option("--shots", shots, "train samples to use (0 = all, manifest order)");

    // detect
    auto* det = app.add_subcommand("detect", "score the manifest's test samples");
    CommonFlags det_flags;
    std::string det_manifest, det_banks, det_out;
    det_flags.attach(det);
    det->add_option("--manifest", det_manifest, "dataset manifest")->required();
    det->add_option("--banks", det_banks, "bank directory from build-memory")->required();
    det->add_option("--out", det_out, "detection output directory")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a detect output directory");
    CommonFlags ev_flags;
    std::string ev_manifest, ev_dir;
    ev_flags.attach(ev);
    ev->add_option("--manifest", ev_manifest, "dataset manifest")->required();
    ev->add_option("--detect-dir", ev_dir, "directory produced by detect")->required();

    // mp-diag
    auto* diag = app.add_subcommand("mp-diag", "ANND/PCS sweep over (alpha, layers)");
    CommonFlags diag_flags;
    std::string diag_manifest, diag_banks, diag_out;
    std::string alpha_grid = "0.9,0.8,0.7,0.6,0.5,0.4,0.3,0.2,0.1,0.0";
    std::string layer_grid = "1,2,3,4,5,6";
    diag_flags.attach(diag);
    diag->add_option("--manifest", diag_manifest, "dataset manifest")->required();
    diag->add_option("--banks", diag_banks, "bank directory")->required();
    diag->add_option("--out", diag_out, "output CSV path")->required();
    diag->add_option("--alpha-grid", alpha_grid, "comma-separated alpha values");
    diag->add_option("--l-grid", layer_grid, "comma-separated layer counts");

    // hg-metrics
    auto* hgm = app.add_subcommand("hg-metrics", "per-sample hypergraph quality metrics");
    CommonFlags hgm_flags;
    std::string hgm_manifest, hgm_out, hgm_dump;
    hgm_flags.attach(hgm);
    hgm->add_option("--manifest", hgm_manifest, "dataset manifest")->required();
    hgm->add_option("--out", hgm_out, "output CSV path")->required();
    hgm->add_option("--dump-hg", hgm_dump, "also write each hypergraph as <id>.hg.json here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*synth) {
            cif::RunConfig cfg = synth_flags.resolve();
            uint64_t seed = synth->count("--seed") ? synth_flags.seed : cfg.sahc.seed;
            cif::DatasetManifest manifest =
                cif::generate_synthetic_class(cfg.synth, seed, synth_out);
            std::cout << "wrote " << manifest.samples.size() << " samples to " << synth_out
                      << "\n";
        } else if (*build) {
            cif::RunConfig cfg = build_flags.resolve();
            auto banks = cif::run_build_memory(build_manifest, cfg, shots, build_out);
            for (const auto& [mod, bank] : banks)
                std::cout << "bank " << cif::modality_name(mod) << ": " << bank.total_nodes()
                          << " nodes across " << bank.n_edges << " hyperedges\n";
        } else if (*det) {
            cif::RunConfig cfg = det_flags.resolve();
            cif::DetectRunResult run = cif::run_detect(det_manifest, det_banks, cfg, det_out);
            std::cout << "scored " << run.n_ok << " samples";
            if (run.n_failed > 0) std::cout << ", " << run.n_failed << " failed";
            std::cout << "\n";
            if (run.n_failed > 0) return 3;
        } else if (*ev) {
            cif::RunConfig cfg = ev_flags.resolve();
            cif::EvalReport report = cif::run_eval(ev_dir, ev_manifest, cfg);
            std::cout << report.class_name << ": I-AUROC " << report.i_auroc << ", P-AUROC "
                      << report.p_auroc << ", AUPRO " << report.aupro << "\n";
        } else if (*diag) {
            cif::RunConfig cfg = diag_flags.resolve();
            cif::run_mp_diag(diag_manifest, diag_banks, cfg, parse_double_list(alpha_grid),
                             parse_int_list(layer_grid), diag_out);
            std::cout << "wrote " << diag_out << "\n";
        } else if (*hgm) {
            cif::RunConfig cfg = hgm_flags.resolve();
            cif::run_hg_metrics(hgm_manifest, cfg, hgm_out, hgm_dump);
            std::cout << "wrote " << hgm_out << "\n";
        }
    } catch (const cif::CifError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
