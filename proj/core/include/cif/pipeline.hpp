#ifndef CIF_PIPELINE_HPP
#define CIF_PIPELINE_HPP

#include <map>
#include <string>
#include <vector>

#include "cif/eval.hpp"
#include "cif/manifest.hpp"
#include "cif/memory_bank.hpp"
#include "cif/search.hpp"
#include "cif/synthetic.hpp"

namespace cif {

/// Union of the per-module configurations, loadable from a JSON file whose
/// keys mirror the CLI flags. Unknown keys are rejected.
struct RunConfig {
    SahcConfig sahc;
    MpConfig mp;
    SearchConfig search;
    double rate = 0.1;
    std::string modality = "both";  // rgb | 3d | both
    double fpr_limit = 0.3;
    SynthConfig synth;

    std::vector<Modality> modalities() const;
    void validate() const;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text);
};

/// Loads the first `shots` train samples (manifest order) and builds their
/// RGB hypergraphs. shots = 0 means all train samples.
std::vector<TrainSample> load_train_samples(const DatasetManifest& manifest,
                                            const std::string& base_dir, int shots,
                                            const RunConfig& cfg);

/// Reads one sample's features, depth, and derived patch mask.
DetectInput load_detect_input(const SampleEntry& entry, const std::string& base_dir);

/// Builds and serializes the per-modality banks under `out_dir` as
/// bank_<modality>.cifb. Returns the banks.
std::map<Modality, MemoryBank> run_build_memory(const std::string& manifest_path,
                                                const RunConfig& cfg, int shots,
                                                const std::string& out_dir);

std::map<Modality, MemoryBank> load_banks(const std::string& banks_dir, const RunConfig& cfg);

struct DetectRunResult {
    int n_ok = 0;
    int n_failed = 0;
};

/// Runs detection over the manifest's test samples, writing scores.csv plus
/// per-sample PGM and CIFT score maps under `out_dir`. Failing samples are
/// reported on stderr and skipped.
DetectRunResult run_detect(const std::string& manifest_path, const std::string& banks_dir,
                           const RunConfig& cfg, const std::string& out_dir);

/// Evaluates a detect output directory against the manifest ground truth
/// and writes report.csv / report.txt under the detect directory.
EvalReport run_eval(const std::string& detect_dir, const std::string& manifest_path,
                    const RunConfig& cfg);

/// ANND / PCS sweep over (alpha, layers), averaged over the manifest's test
/// samples against the RGB bank. Writes a CSV including the
/// no-message-passing row and returns its text.
std::string run_mp_diag(const std::string& manifest_path, const std::string& banks_dir,
                        const RunConfig& cfg, const std::vector<double>& alpha_grid,
                        const std::vector<int>& layer_grid, const std::string& out_csv);

/// Per-sample hypergraph quality metrics CSV. When `dump_dir` is non-empty,
/// each sample's hypergraph is also written there as <id>.hg.json.
std::string run_hg_metrics(const std::string& manifest_path, const RunConfig& cfg,
                           const std::string& out_csv, const std::string& dump_dir = "");

/// 16-bit binary PGM (min-max scaled), big-endian samples per the format.
void write_pgm16(const MatrixXd& map, const std::string& path);

}  // namespace cif

#endif
