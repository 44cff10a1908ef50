#include <benchmark/benchmark.h>

#include <random>

#include "cif/eval.hpp"
#include "cif/hypergraph.hpp"
#include "cif/memory_bank.hpp"
#include "cif/message_passing.hpp"
#include "cif/search.hpp"

using namespace cif;

namespace {

MatrixXd random_matrix(int rows, int cols, uint32_t seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
    return m;
}

PatchGrid random_grid(int rows, int cols, int dim, uint32_t seed) {
    PatchGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.dim = dim;
    grid.data = random_matrix(rows * cols, dim, seed).cast<float>();
    return grid;
}

ForegroundMask all_fg(int rows, int cols) {
    ForegroundMask mask;
    mask.rows = rows;
    mask.cols = cols;
    mask.bits.assign(static_cast<size_t>(rows) * cols, 1);
    return mask;
}

/// Memory bank with the acceptance-scale shape: 4 buckets of 40 nodes.
MemoryBank bench_bank(int dim) {
    MemoryBank bank;
    bank.n_edges = 4;
    bank.dim = dim;
    bank.sampling_rate = 0.1;
    for (int e = 0; e < 4; ++e)
        bank.buckets.push_back(random_matrix(40, dim, 100 + e).rowwise() +
                               Eigen::RowVectorXd::Constant(dim, 2.0 * e).eval());
    update_hyperedges(bank);
    return bank;
}

void bm_kmeans(benchmark::State& state) {
    MatrixXd points = random_matrix(400, 64, 1);
    for (auto _ : state) {
        KmeansResult result = kmeans(points, 4, 100, 7);
        benchmark::DoNotOptimize(result.centers);
    }
}
BENCHMARK(bm_kmeans)->Unit(benchmark::kMillisecond);

void bm_build_sahc(benchmark::State& state) {
    PatchGrid grid = random_grid(28, 28, 64, 2);
    ForegroundMask mask = all_fg(28, 28);
    SahcConfig cfg;
    for (auto _ : state) {
        Hypergraph hg = build_sahc(grid, mask, cfg);
        benchmark::DoNotOptimize(hg.incidence);
    }
}
BENCHMARK(bm_build_sahc)->Unit(benchmark::kMillisecond);

void bm_coreset(benchmark::State& state) {
    MatrixXd nodes = random_matrix(static_cast<int>(state.range(0)), 64, 3);
    for (auto _ : state) {
        auto selected = coreset_sample_bucket(nodes, 0.1, 0);
        benchmark::DoNotOptimize(selected);
    }
}
BENCHMARK(bm_coreset)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

void bm_apply_mp(benchmark::State& state) {
    MatrixXd x_test = random_matrix(400, 64, 4);
    MemoryBank bank = bench_bank(64);
    MatrixXd x_mem = bank.all_nodes();
    MatrixXd h_test = MatrixXd::Zero(400, 4);
    for (int i = 0; i < 400; ++i) h_test(i, i % 4) = 1.0;
    MatrixXd cross = build_cross_hyperedges(x_test, x_mem, 3);
    JointHypergraph joint = build_joint(x_test, x_mem, h_test, bank.bucket_incidence(), cross);
    MpConfig cfg;
    for (auto _ : state) {
        MatrixXd x_new = apply_mp(joint, cfg);
        benchmark::DoNotOptimize(x_new);
    }
}
BENCHMARK(bm_apply_mp)->Unit(benchmark::kMillisecond);

void bm_hgms_scores(benchmark::State& state) {
    MemoryBank bank = bench_bank(64);
    MatrixXd x = random_matrix(784, 64, 5);
    Hypergraph hg;
    hg.n_nodes = 784;
    hg.n_edges = 4;
    hg.hard_assign.resize(784);
    hg.incidence = MatrixXd::Zero(784, 4);
    for (int i = 0; i < 784; ++i) {
        hg.hard_assign[i] = i % 4;
        hg.incidence(i, i % 4) = 1.0;
    }
    for (auto _ : state) {
        VectorXd scores = hgms_scores(x, hg, bank, 2);
        benchmark::DoNotOptimize(scores);
    }
}
BENCHMARK(bm_hgms_scores)->Unit(benchmark::kMillisecond);

void bm_postprocess(benchmark::State& state) {
    MatrixXd patch = random_matrix(28, 28, 6).cwiseAbs();
    for (auto _ : state) {
        MatrixXd pixels = postprocess(patch, 224, 224, 4.0);
        benchmark::DoNotOptimize(pixels);
    }
}
BENCHMARK(bm_postprocess)->Unit(benchmark::kMillisecond);

void bm_auroc(benchmark::State& state) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    int n = static_cast<int>(state.range(0));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        scores[i] = dist(rng);
        labels[i] = static_cast<int>(rng() % 2);
    }
    labels[0] = 0;
    labels[1] = 1;
    for (auto _ : state) {
        double value = auroc(scores, labels);
        benchmark::DoNotOptimize(value);
    }
}
BENCHMARK(bm_auroc)->Arg(100000)->Unit(benchmark::kMillisecond);

void bm_aupro(benchmark::State& state) {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<MatrixXd> maps;
    std::vector<ForegroundMask> gts;
    for (int s = 0; s < 10; ++s) {
        MatrixXd map(224, 224);
        ForegroundMask gt;
        gt.rows = gt.cols = 224;
        gt.bits.assign(224 * 224, 0);
        for (int r = 0; r < 224; ++r)
            for (int c = 0; c < 224; ++c) {
                map(r, c) = dist(rng);
                gt.bits[static_cast<size_t>(r) * 224 + c] = r < 32 && c < 32;
            }
        maps.push_back(map);
        gts.push_back(gt);
    }
    for (auto _ : state) {
        double value = aupro(maps, gts);
        benchmark::DoNotOptimize(value);
    }
}
BENCHMARK(bm_aupro)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
