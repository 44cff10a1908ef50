#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cif/memory_bank.hpp"
#include "cif/synthetic.hpp"
#include "cif/tensor_io.hpp"
#include "cif/manifest.hpp"
#include "cif/foreground.hpp"
#include "cif/pipeline.hpp"
#include "oracles.hpp"

using namespace cif;
namespace fs = std::filesystem;

namespace {

PatchGrid grid_from(const MatrixXd& features, int rows, int cols,
                    Modality modality = Modality::RGB) {
    PatchGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.dim = static_cast<int>(features.cols());
    grid.data = features.cast<float>();
    grid.modality = modality;
    return grid;
}

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

MatrixXd column_points(std::initializer_list<double> values) {
    MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
    Eigen::Index i = 0;
    for (double v : values) m(i++, 0) = v;
    return m;
}

}  // namespace

TEST_CASE("init_memory buckets by hard assignment") {
    MatrixXd features(4, 2);
    features << 0, 0, 1, 1, 2, 2, 9, 9;

    SUBCASE("one node per edge") {
        Hypergraph hg = hand_hypergraph(4, {0, 1, 2, 3}, 4);
        MemoryBank bank = init_memory(grid_from(features, 2, 2), hg, Modality::RGB, 1.0);
        for (int e = 0; e < 4; ++e) {
            CHECK(bank.buckets[e].rows() == 1);
            CHECK(bank.edge_feats.row(e) == features.row(e));
        }
    }
    SUBCASE("single edge holds all foreground nodes") {
        Hypergraph hg = hand_hypergraph(4, {0, 0, 0, 0}, 1);
        MemoryBank bank = init_memory(grid_from(features, 2, 2), hg, Modality::RGB, 1.0);
        CHECK(bank.buckets[0].rows() == 4);
        CHECK(bank.edge_feats.row(0) == Eigen::RowVector2d(3, 3));
    }
    SUBCASE("background nodes are excluded") {
        Hypergraph hg = hand_hypergraph(4, {0, kBackground, 0, 0}, 1);
        MemoryBank bank = init_memory(grid_from(features, 2, 2), hg, Modality::RGB, 1.0);
        CHECK(bank.buckets[0].rows() == 3);
    }
    SUBCASE("an edge without hard members is an error") {
        Hypergraph hg = hand_hypergraph(4, {0, 0, 0, 0}, 2);
        hg.incidence(1, 1) = 1.0;  // soft-only membership does not populate buckets
        try {
            init_memory(grid_from(features, 2, 2), hg, Modality::RGB, 1.0);
            FAIL("expected EmptyBucket");
        } catch (const CifError& e) {
            CHECK(e.code() == ErrorCode::EmptyBucket);
        }
    }
}

TEST_CASE("assign_nodes merges into the nearest bank hyperedge") {
    MatrixXd first(2, 2);
    first << 0, 0, 10, 10;
    Hypergraph hg2 = hand_hypergraph(2, {0, 1}, 2);
    MemoryBank bank = init_memory(grid_from(first, 1, 2), hg2, Modality::RGB, 1.0);

    SUBCASE("identical sample doubles every bucket") {
        assign_nodes(bank, grid_from(first, 1, 2), hg2);
        CHECK(bank.buckets[0].rows() == 2);
        CHECK(bank.buckets[1].rows() == 2);
    }
    SUBCASE("sample edge near bucket 0 merges there") {
        MatrixXd sample(2, 2);
        sample << 1, 1, 11, 11;
        assign_nodes(bank, grid_from(sample, 1, 2), hg2);
        CHECK(bank.buckets[0].rows() == 2);
        CHECK(bank.buckets[0].row(1) == Eigen::RowVector2d(1, 1));
        CHECK(bank.buckets[1].rows() == 2);
    }
    SUBCASE("equidistant sample edge takes the lower index") {
        MatrixXd sample(2, 2);
        sample << 5, 5, 5, 5;  // edge mean (5,5), exactly between the bank edges
        Hypergraph hg_pair = hand_hypergraph(2, {0, 0}, 2);  // sample edge 1 stays empty
        assign_nodes(bank, grid_from(sample, 1, 2), hg_pair);
        CHECK(bank.buckets[0].rows() == 3);  // tie resolved to bucket 0
        CHECK(bank.buckets[1].rows() == 1);
    }
    SUBCASE("dimension mismatch is rejected") {
        MatrixXd bad(2, 3);
        bad.setZero();
        Hypergraph hg_bad = hand_hypergraph(2, {0, 1}, 2);
        try {
            assign_nodes(bank, grid_from(bad, 1, 2), hg_bad);
            FAIL("expected DimMismatch");
        } catch (const CifError& e) {
            CHECK(e.code() == ErrorCode::DimMismatch);
        }
    }
}

TEST_CASE("update_hyperedges recomputes bucket means") {
    MatrixXd first(2, 2);
    first << 0, 0, 2, 0;
    Hypergraph hg = hand_hypergraph(2, {0, 0}, 1);
    MemoryBank bank = init_memory(grid_from(first, 1, 2), hg, Modality::RGB, 1.0);
    CHECK(bank.edge_feats.row(0) == Eigen::RowVector2d(1, 0));

    SUBCASE("idempotent on unchanged buckets") {
        MatrixXd before = bank.edge_feats;
        update_hyperedges(bank);
        CHECK(bank.edge_feats == before);
    }
    SUBCASE("tracks merged nodes") {
        MatrixXd second(1, 2);
        second << 2, 2;
        Hypergraph hg1 = hand_hypergraph(1, {0}, 1);
        assign_nodes(bank, grid_from(second, 1, 1), hg1);
        update_hyperedges(bank);
        CHECK(bank.edge_feats.row(0) == Eigen::RowVector2d(4.0 / 3, 2.0 / 3));
    }
}

TEST_CASE("greedy coreset on the 1-D line 0..9") {
    MatrixXd nodes = column_points({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    // Farthest from the mean 4.5 ties between 0 and 9; index 0 wins, and the
    // next greedy pick is 9.
    std::vector<int> selected = coreset_sample_bucket(nodes, 0.2, 0);
    CHECK(selected == std::vector<int>{0, 9});

    SUBCASE("rate 1.0 keeps everything") {
        std::vector<int> all = coreset_sample_bucket(nodes, 1.0, 0);
        CHECK(all.size() == 10);
    }
    SUBCASE("a single node is always kept") {
        MatrixXd one = column_points({42});
        CHECK(coreset_sample_bucket(one, 0.01, 0) == std::vector<int>{0});
    }
    SUBCASE("output is independent of the seed") {
        CHECK(coreset_sample_bucket(nodes, 0.4, 1) == coreset_sample_bucket(nodes, 0.4, 999));
    }
}

TEST_CASE("coreset selections grow as prefixes over rates") {
    std::mt19937 rng(12);
    for (int iter = 0; iter < 10; ++iter) {
        MatrixXd nodes = oracles::random_matrix(20, 3, rng);
        auto low = coreset_sample_bucket(nodes, 0.25, 0);
        auto high = coreset_sample_bucket(nodes, 0.6, 0);
        for (int idx : low)
            CHECK(std::find(high.begin(), high.end(), idx) != high.end());
    }
}

TEST_CASE("greedy coreset is a 2-approximation of the optimal covering radius") {
    std::mt19937 rng(13);
    for (int iter = 0; iter < 25; ++iter) {
        int m = 6 + static_cast<int>(rng() % 7);  // <= 12
        MatrixXd nodes = oracles::random_matrix(m, 2, rng);
        int t = 1 + static_cast<int>(rng() % 3);  // <= 3
        double rate = static_cast<double>(t) / m;
        std::vector<int> greedy = coreset_sample_bucket(nodes, rate, 0);
        REQUIRE(static_cast<int>(greedy.size()) == t);
        double greedy_radius = oracles::covering_radius(nodes, greedy);
        double optimal = oracles::optimal_covering_radius(nodes, t);
        CHECK(greedy_radius <= 2.0 * optimal + 1e-12);
    }
}

TEST_CASE("minimax medoid worked examples") {
    CHECK(minimax_medoid(column_points({0, 1, 10})) == 1);  // max dists 10, 9, 10
    CHECK(minimax_medoid(column_points({42})) == 0);
    CHECK(minimax_medoid(column_points({-1, 1})) == 0);  // tie resolves low

    SUBCASE("matches exhaustive argmin on random instances") {
        std::mt19937 rng(14);
        for (int iter = 0; iter < 20; ++iter) {
            int m = 2 + static_cast<int>(rng() % 10);
            MatrixXd nodes = oracles::random_matrix(m, 3, rng);
            int got = minimax_medoid(nodes);
            int expected = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                double worst = 0.0;
                for (int j = 0; j < m; ++j)
                    worst = std::max(worst, (nodes.row(i) - nodes.row(j)).norm());
                if (worst < best) { best = worst; expected = i; }
            }
            CHECK(got == expected);
        }
    }
}

namespace {

TrainSample make_sample(const MatrixXd& rgb, const MatrixXd& pc, const Hypergraph& hg, int rows,
                        int cols) {
    TrainSample sample;
    sample.features[Modality::RGB] = grid_from(rgb, rows, cols, Modality::RGB);
    sample.features[Modality::PC3D] = grid_from(pc, rows, cols, Modality::PC3D);
    sample.hg = hg;
    return sample;
}

}  // namespace

TEST_CASE("one-shot bank at rate 1.0 holds exactly the foreground nodes") {
    std::mt19937 rng(15);
    MatrixXd rgb = oracles::random_matrix(6, 3, rng);
    MatrixXd pc = oracles::random_matrix(6, 3, rng);
    Hypergraph hg = hand_hypergraph(6, {0, 0, 1, 1, kBackground, 0}, 2);

    MemoryConfig cfg;
    cfg.sampling_rate = 1.0;
    TrainSample sample = make_sample(rgb, pc, hg, 2, 3);
    auto banks = build_memory({sample}, cfg);
    CHECK(banks.at(Modality::RGB).total_nodes() == 5);
    CHECK(banks.at(Modality::PC3D).total_nodes() == 5);
    CHECK(banks.at(Modality::RGB).buckets[0].rows() == 3);
    CHECK(banks.at(Modality::RGB).buckets[1].rows() == 2);
    // The 3-D bank mirrors the RGB bucket structure; bucket 0 starts with
    // node 0's (float-quantized) features.
    MatrixXd pc_values = sample.features.at(Modality::PC3D).values();
    CHECK(banks.at(Modality::PC3D).buckets[0].row(0) == pc_values.row(0));
}

TEST_CASE("k identical samples at rate 1/k keep single-sample bucket sizes") {
    std::mt19937 rng(16);
    const int k = 4;
    MatrixXd rgb = oracles::random_matrix(8, 3, rng);
    MatrixXd pc = oracles::random_matrix(8, 3, rng);
    Hypergraph hg = hand_hypergraph(8, {0, 0, 0, 1, 1, 1, 1, 1}, 2);

    std::vector<TrainSample> samples(k, make_sample(rgb, pc, hg, 2, 4));
    MemoryConfig cfg;
    cfg.sampling_rate = 1.0 / k;
    auto banks = build_memory(samples, cfg);
    // ceil(rate * k * m_e) = m_e for each bucket.
    CHECK(banks.at(Modality::RGB).buckets[0].rows() == 3);
    CHECK(banks.at(Modality::RGB).buckets[1].rows() == 5);
}

TEST_CASE("bank construction is deterministic and serialization round trips") {
    auto dir = fs::temp_directory_path() / "cif_bank_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    SynthConfig synth;
    synth.grid_rows = synth.grid_cols = 12;
    synth.dim = 8;
    synth.k_true = 2;
    synth.n_train = 2;
    synth.n_test_normal = 1;
    synth.n_test_anomalous = 1;
    synth.pixels_per_patch = 4;
    generate_synthetic_class(synth, 9, (dir / "data").string());

    RunConfig cfg;
    cfg.sahc.n_edges = 2;
    cfg.rate = 0.5;
    DatasetManifest manifest = read_manifest((dir / "data" / "manifest.json").string());
    auto samples = load_train_samples(manifest, (dir / "data").string(), 0, cfg);

    MemoryConfig mem_cfg;
    mem_cfg.sampling_rate = cfg.rate;
    auto banks_a = build_memory(samples, mem_cfg);
    auto banks_b = build_memory(samples, mem_cfg);
    for (auto& [mod, bank] : banks_a) {
        CHECK(bank.edge_feats == banks_b.at(mod).edge_feats);
        for (int e = 0; e < bank.n_edges; ++e)
            CHECK(bank.buckets[e] == banks_b.at(mod).buckets[e]);
    }

    MemoryBank& bank = banks_a.at(Modality::RGB);
    bank.class_name = "roundtrip";
    auto path = (dir / "bank.cifb").string();
    write_memory_bank(bank, path);
    MemoryBank back = read_memory_bank(path);
    CHECK(back.class_name == "roundtrip");
    CHECK(back.n_edges == bank.n_edges);
    CHECK(back.sampling_rate == bank.sampling_rate);
    CHECK(back.total_nodes() == bank.total_nodes());

    // File-level round trip is exact.
    write_memory_bank(back, (dir / "bank2.cifb").string());
    std::ifstream a_in(path, std::ios::binary), b_in(dir / "bank2.cifb", std::ios::binary);
    std::string a_bytes((std::istreambuf_iterator<char>(a_in)), std::istreambuf_iterator<char>());
    std::string b_bytes((std::istreambuf_iterator<char>(b_in)), std::istreambuf_iterator<char>());
    CHECK(a_bytes == b_bytes);
}

TEST_CASE("retained node bound holds after sampling") {
    std::mt19937 rng(18);
    MatrixXd rgb = oracles::random_matrix(12, 3, rng);
    MatrixXd pc = oracles::random_matrix(12, 3, rng);
    std::vector<int> hard(12);
    for (int i = 0; i < 12; ++i) hard[i] = i % 3;
    Hypergraph hg = hand_hypergraph(12, hard, 3);

    std::vector<TrainSample> samples;
    for (int s = 0; s < 3; ++s) {
        MatrixXd jitter_rgb = rgb + 0.01 * oracles::random_matrix(12, 3, rng);
        MatrixXd jitter_pc = pc + 0.01 * oracles::random_matrix(12, 3, rng);
        samples.push_back(make_sample(jitter_rgb, jitter_pc, hg, 3, 4));
    }
    MemoryConfig cfg;
    cfg.sampling_rate = 0.3;
    auto banks = build_memory(samples, cfg);
    for (auto& [mod, bank] : banks) {
        for (int e = 0; e < bank.n_edges; ++e) {
            CHECK(bank.buckets[e].rows() >= 1);
            // Each bucket had 4 nodes per sample * 3 samples = 12 before
            // sampling; ceil(0.3 * 12) = 4.
            CHECK(bank.buckets[e].rows() <= 4);
        }
        // edge_feats stays in sync with the sampled buckets.
        for (int e = 0; e < bank.n_edges; ++e)
            CHECK((bank.edge_feats.row(e) - bank.buckets[e].colwise().mean()).norm() < 1e-12);
    }
}
