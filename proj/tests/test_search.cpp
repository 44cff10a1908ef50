#include <doctest.h>

#include <filesystem>
#include <random>

#include "cif/foreground.hpp"
#include "cif/manifest.hpp"
#include "cif/pipeline.hpp"
#include "cif/search.hpp"
#include "cif/synthetic.hpp"
#include "oracles.hpp"

using namespace cif;
namespace fs = std::filesystem;

namespace {

Hypergraph hand_hypergraph(int n_nodes, const std::vector<int>& hard, int n_edges) {
    Hypergraph hg;
    hg.n_nodes = n_nodes;
    hg.n_edges = n_edges;
    hg.hard_assign = hard;
    hg.incidence = MatrixXd::Zero(n_nodes, n_edges);
    for (int i = 0; i < n_nodes; ++i)
        if (hard[i] != kBackground) hg.incidence(i, hard[i]) = 1.0;
    return hg;
}

MemoryBank hand_bank(const std::vector<MatrixXd>& buckets) {
    MemoryBank bank;
    bank.n_edges = static_cast<int>(buckets.size());
    bank.dim = static_cast<int>(buckets[0].cols());
    bank.buckets = buckets;
    bank.sampling_rate = 1.0;
    update_hyperedges(bank);
    return bank;
}

}  // namespace

TEST_CASE("a test node equal to a bank node in its matched bucket scores zero") {
    MatrixXd bucket0(2, 2), bucket1(2, 2);
    bucket0 << 1, 0, 0.9, 0.1;
    bucket1 << 0, 1, 0.1, 0.9;
    MemoryBank bank = hand_bank({bucket0, bucket1});

    MatrixXd x(2, 2);
    x << 1, 0, 0, 1;
    Hypergraph hg = hand_hypergraph(2, {0, 1}, 2);
    VectorXd scores = hgms_scores(x, hg, bank, 1);
    CHECK(scores[0] == 0.0);
    CHECK(scores[1] == 0.0);
}

TEST_CASE("k_edges equal to the edge count reduces to global search") {
    std::mt19937 rng(51);
    for (int iter = 0; iter < 10; ++iter) {
        int n_edges = 2 + static_cast<int>(rng() % 3);
        std::vector<MatrixXd> buckets;
        for (int e = 0; e < n_edges; ++e)
            buckets.push_back(oracles::random_matrix(2 + static_cast<int>(rng() % 4), 3, rng));
        MemoryBank bank = hand_bank(buckets);

        int n = 4 + static_cast<int>(rng() % 6);
        MatrixXd x = oracles::random_matrix(n, 3, rng);
        std::vector<int> hard(n);
        for (int i = 0; i < n; ++i) hard[i] = static_cast<int>(rng() % n_edges);
        Hypergraph hg = hand_hypergraph(n, hard, n_edges);

        VectorXd structural = hgms_scores(x, hg, bank, n_edges);
        VectorXd global = global_nn_scores(x, hg, bank);
        CHECK((structural - global).cwiseAbs().maxCoeff() <= 1e-12);

        VectorXd combined = combine_scores(structural, global);
        CHECK((combined - global.cwiseProduct(global)).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("structural guidance can raise a mismatched node's score") {
    // Bucket 0 and bucket 1 hold well-separated content; the test node sits
    // near bucket 1 but its hyperedge matches bucket 0 structurally.
    MatrixXd bucket0(2, 2), bucket1(2, 2);
    bucket0 << 10, 0, 10.5, 0;
    bucket1 << 0, 10, 0, 10.5;
    MemoryBank bank = hand_bank({bucket0, bucket1});

    // Edge feature of the only test edge is near bucket 0's mean direction,
    // while the single odd node is close to bucket 1's content.
    MatrixXd x(3, 2);
    x << 10, 0, 10.2, 0, 0.5, 9.8;
    Hypergraph hg = hand_hypergraph(3, {0, 0, 0}, 1);

    VectorXd structural = hgms_scores(x, hg, bank, 1);
    VectorXd global = global_nn_scores(x, hg, bank);
    CHECK(structural[2] > global[2]);
    CHECK(global[2] == doctest::Approx((x.row(2) - bucket1.row(0)).norm()));

    // D <= A entrywise always.
    for (int i = 0; i < 3; ++i) CHECK(global[i] <= structural[i] + 1e-12);
}

TEST_CASE("global search worked values and background policies") {
    MatrixXd bucket(1, 2);
    bucket << 0, 0;
    MemoryBank bank = hand_bank({bucket});
    MatrixXd x(2, 2);
    x << 3, 4, 1, 1;
    Hypergraph hg = hand_hypergraph(2, {0, kBackground}, 1);

    VectorXd zero_policy = global_nn_scores(x, hg, bank, BackgroundPolicy::Zero);
    CHECK(zero_policy[0] == doctest::Approx(5.0));
    CHECK(zero_policy[1] == 0.0);

    VectorXd global_policy = global_nn_scores(x, hg, bank, BackgroundPolicy::GlobalOnly);
    CHECK(global_policy[1] == doctest::Approx(std::sqrt(2.0)));

    VectorXd structural = hgms_scores(x, hg, bank, 1, BackgroundPolicy::GlobalOnly);
    CHECK(structural[1] == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("scores are invariant under permuting nodes within buckets") {
    std::mt19937 rng(52);
    MatrixXd bucket0 = oracles::random_matrix(5, 3, rng);
    MatrixXd bucket1 = oracles::random_matrix(4, 3, rng);
    MemoryBank bank = hand_bank({bucket0, bucket1});

    MatrixXd shuffled0 = bucket0;
    shuffled0.row(0).swap(shuffled0.row(4));
    shuffled0.row(1).swap(shuffled0.row(2));
    MatrixXd shuffled1 = bucket1;
    shuffled1.row(0).swap(shuffled1.row(3));
    MemoryBank permuted = hand_bank({shuffled0, shuffled1});

    MatrixXd x = oracles::random_matrix(6, 3, rng);
    Hypergraph hg = hand_hypergraph(6, {0, 0, 1, 1, 0, 1}, 2);
    CHECK(hgms_scores(x, hg, bank, 1) == hgms_scores(x, hg, permuted, 1));
    CHECK(global_nn_scores(x, hg, bank) == global_nn_scores(x, hg, permuted));
}

TEST_CASE("combine_scores is the elementwise product") {
    VectorXd a(2), d(2);
    a << 2, 3;
    d << 1, 2;
    VectorXd combined = combine_scores(a, d);
    CHECK(combined[0] == 2.0);
    CHECK(combined[1] == 6.0);

    VectorXd zero = VectorXd::Zero(2);
    CHECK(combine_scores(a, zero).isZero());

    try {
        combine_scores(a, VectorXd::Zero(3));
        FAIL("expected LengthMismatch");
    } catch (const CifError& e) {
        CHECK(e.code() == ErrorCode::LengthMismatch);
    }
}

TEST_CASE("postprocess keeps constant maps constant") {
    MatrixXd patch = MatrixXd::Constant(3, 5, 2.5);
    MatrixXd pixels = postprocess(patch, 17, 23, 2.0);
    CHECK((pixels.array() - 2.5).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("single hot patch upsamples to the hand-computed bilinear ramp") {
    // 2x2 grid -> 4x4 pixels with half-pixel centers: the 1-D weight of the
    // hot patch along each axis is [1, 0.75, 0.25, 0] and the surface is the
    // outer product.
    MatrixXd patch = MatrixXd::Zero(2, 2);
    patch(0, 0) = 1.0;
    MatrixXd pixels = postprocess(patch, 4, 4, 0.0);
    double w[4] = {1.0, 0.75, 0.25, 0.0};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(pixels(r, c) == doctest::Approx(w[r] * w[c]).epsilon(1e-12));
}

TEST_CASE("light blur preserves the order of well-separated peaks") {
    MatrixXd patch = MatrixXd::Zero(8, 8);
    patch(1, 1) = 2.0;
    patch(6, 6) = 1.0;
    MatrixXd pixels = postprocess(patch, 64, 64, 1.5);
    double peak_a = pixels.block(0, 0, 24, 24).maxCoeff();
    double peak_b = pixels.block(40, 40, 24, 24).maxCoeff();
    CHECK(peak_a > peak_b);
    CHECK(pixels.minCoeff() >= 0.0);
}

TEST_CASE("fusion normalizes and averages") {
    MatrixXd a(2, 2), b(2, 2);
    a << 0, 1, 2, 3;
    b << 0, 0, 0, 0;

    SUBCASE("identical maps fuse to their normalized form") {
        MatrixXd fused = fuse_modalities(a, a);
        CHECK(fused(0, 0) == 0.0);
        CHECK(fused(1, 1) == 1.0);
        CHECK(fused(0, 1) == doctest::Approx(1.0 / 3));
    }
    SUBCASE("an all-zero map halves the other") {
        MatrixXd fused = fuse_modalities(a, b);
        CHECK(fused(1, 1) == doctest::Approx(0.5));
        CHECK(fused(0, 0) == 0.0);
    }
    SUBCASE("fusion is symmetric") {
        MatrixXd ab = fuse_modalities(a, b);
        MatrixXd ba = fuse_modalities(b, a);
        CHECK(ab == ba);
    }
    SUBCASE("shape mismatch is rejected") {
        try {
            fuse_modalities(a, MatrixXd::Zero(3, 2));
            FAIL("expected ShapeMismatch");
        } catch (const CifError& e) {
            CHECK(e.code() == ErrorCode::ShapeMismatch);
        }
    }
}

namespace {

struct SyntheticRun {
    fs::path dir;
    DatasetManifest manifest;
    RunConfig cfg;
    std::map<Modality, MemoryBank> banks;
};

SyntheticRun make_run(const std::string& name, const SynthConfig& synth, double rate,
                      int n_edges, uint64_t seed) {
    SyntheticRun run;
    run.dir = fs::temp_directory_path() / ("cif_search_" + name);
    fs::remove_all(run.dir);
    run.manifest = generate_synthetic_class(synth, seed, run.dir.string());
    run.cfg.sahc.n_edges = n_edges;
    run.cfg.rate = rate;
    auto samples = load_train_samples(run.manifest, run.dir.string(), 0, run.cfg);
    MemoryConfig mem_cfg;
    mem_cfg.sampling_rate = rate;
    run.banks = build_memory(samples, mem_cfg);
    return run;
}

}  // namespace

TEST_CASE("detect on the identical one-shot sample gives zero scores") {
    SynthConfig synth;
    synth.grid_rows = synth.grid_cols = 12;
    synth.dim = 8;
    synth.k_true = 2;
    synth.noise_sigma = 0.0;
    synth.anomaly_delta = 0.0;
    synth.n_train = 1;
    synth.n_test_normal = 1;
    synth.n_test_anomalous = 0;
    synth.pixels_per_patch = 4;
    SyntheticRun run = make_run("identity", synth, 1.0, 2, 20);

    PipelineConfig pipe;
    pipe.sahc = run.cfg.sahc;
    pipe.mp.alpha = 1.0;
    DetectInput input = load_detect_input(*run.manifest.test_samples()[0], run.dir.string());
    AnomalyResult result = detect(input, run.banks, pipe);
    CHECK(result.image_score == 0.0);
    CHECK(result.patch_scores.maxCoeff() == 0.0);
    CHECK(result.pixel_scores.maxCoeff() == 0.0);
}

TEST_CASE("easy synthetic anomalies outscore every normal sample") {
    SynthConfig synth;
    synth.grid_rows = synth.grid_cols = 12;
    synth.dim = 8;
    synth.k_true = 2;
    synth.noise_sigma = 0.05;
    synth.anomaly_delta = 0.5;  // 10 sigma
    synth.n_train = 2;
    synth.n_test_normal = 3;
    synth.n_test_anomalous = 3;
    synth.pixels_per_patch = 4;
    SyntheticRun run = make_run("easy", synth, 0.5, 2, 21);

    PipelineConfig pipe;
    pipe.sahc = run.cfg.sahc;

    double worst_anomalous = std::numeric_limits<double>::infinity();
    double best_normal = 0.0;
    for (const SampleEntry* entry : run.manifest.test_samples()) {
        DetectInput input = load_detect_input(*entry, run.dir.string());
        AnomalyResult result = detect(input, run.banks, pipe);
        CHECK(result.patch_scores.minCoeff() >= 0.0);
        if (entry->label == Label::Anomalous)
            worst_anomalous = std::min(worst_anomalous, result.image_score);
        else
            best_normal = std::max(best_normal, result.image_score);
    }
    CHECK(worst_anomalous > best_normal);
}

TEST_CASE("detect is deterministic") {
    SynthConfig synth;
    synth.grid_rows = synth.grid_cols = 12;
    synth.dim = 8;
    synth.k_true = 2;
    synth.n_train = 2;
    synth.n_test_normal = 1;
    synth.n_test_anomalous = 1;
    synth.pixels_per_patch = 4;
    SyntheticRun run = make_run("det", synth, 0.5, 2, 22);

    PipelineConfig pipe;
    pipe.sahc = run.cfg.sahc;
    DetectInput input = load_detect_input(*run.manifest.test_samples()[1], run.dir.string());
    AnomalyResult a = detect(input, run.banks, pipe);
    AnomalyResult b = detect(input, run.banks, pipe);
    CHECK(a.image_score == b.image_score);
    CHECK(a.patch_scores == b.patch_scores);
    CHECK(a.pixel_scores == b.pixel_scores);
}
