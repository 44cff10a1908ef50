#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "cif/manifest.hpp"
#include "cif/tensor_io.hpp"

using namespace cif;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("cif_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

PatchGrid random_grid(int rows, int cols, int dim, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    PatchGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.dim = dim;
    grid.modality = Modality::RGB;
    grid.data.resize(rows * cols, dim);
    for (Eigen::Index i = 0; i < grid.data.size(); ++i) grid.data.data()[i] = dist(rng);
    return grid;
}

}  // namespace

TEST_CASE("smallest well-formed CIFT file") {
    auto dir = temp_dir("ciftsmall");
    PatchGrid grid;
    grid.rows = grid.cols = 1;
    grid.dim = 2;
    grid.data.resize(1, 2);
    grid.data << 1.0f, 2.0f;
    auto path = (dir / "a.cift").string();
    write_feature_tensor(grid, path);

    PatchGrid back = read_feature_tensor(path);
    CHECK(back.rows == 1);
    CHECK(back.cols == 1);
    CHECK(back.dim == 2);
    CHECK(back.data(0, 0) == 1.0f);
    CHECK(back.data(0, 1) == 2.0f);
}

TEST_CASE("CIFT header is 24 bytes plus float32 payload") {
    auto dir = temp_dir("ciftheader");
    PatchGrid grid;
    grid.rows = grid.cols = grid.dim = 1;
    grid.data.resize(1, 1);
    grid.data << 0.0f;
    auto path = (dir / "one.cift").string();
    write_feature_tensor(grid, path);
    CHECK(fs::file_size(path) == 24 + 4);
}

TEST_CASE("28x28x768 tensor round trips bit-for-bit") {
    auto dir = temp_dir("ciftbig");
    PatchGrid grid = random_grid(28, 28, 768, 7);
    grid.modality = Modality::PC3D;
    auto path = (dir / "big.cift").string();
    write_feature_tensor(grid, path);
    PatchGrid back = read_feature_tensor(path);
    CHECK(back.modality == Modality::PC3D);
    REQUIRE(back.data.size() == grid.data.size());
    CHECK(std::memcmp(back.data.data(), grid.data.data(),
                      sizeof(float) * grid.data.size()) == 0);
}

TEST_CASE("bad magic is rejected") {
    auto dir = temp_dir("ciftmagic");
    PatchGrid grid = random_grid(2, 2, 3, 1);
    auto path = dir / "x.cift";
    write_feature_tensor(grid, path.string());
    std::string bytes = read_bytes(path);
    bytes[3] = 'X';  // CIFT -> CIFX
    write_bytes(path, bytes);
    try {
        read_feature_tensor(path.string());
        FAIL("expected BadMagic");
    } catch (const CifError& e) {
        CHECK(e.code() == ErrorCode::BadMagic);
    }
}

TEST_CASE("truncation and version errors") {
    auto dir = temp_dir("cifttrunc");
    PatchGrid grid = random_grid(2, 2, 3, 2);
    auto path = dir / "x.cift";
    write_feature_tensor(grid, path.string());
    std::string bytes = read_bytes(path);

    SUBCASE("payload truncated") {
        write_bytes(path, bytes.substr(0, bytes.size() - 5));
        try {
            read_feature_tensor(path.string());
            FAIL("expected TruncatedFile");
        } catch (const CifError& e) {
            CHECK(e.code() == ErrorCode::TruncatedFile);
        }
    }
    SUBCASE("header truncated") {
        write_bytes(path, bytes.substr(0, 10));
        try {
            read_feature_tensor(path.string());
            FAIL("expected TruncatedFile");
        } catch (const CifError& e) {
            CHECK(e.code() == ErrorCode::TruncatedFile);
        }
    }
    SUBCASE("unsupported version") {
        bytes[4] = 2;
        write_bytes(path, bytes);
        try {
            read_feature_tensor(path.string());
            FAIL("expected VersionUnsupported");
        } catch (const CifError& e) {
            CHECK(e.code() == ErrorCode::VersionUnsupported);
        }
    }
    SUBCASE("non-finite payload") {
        float nan = std::numeric_limits<float>::quiet_NaN();
        std::memcpy(bytes.data() + 24, &nan, sizeof(nan));
        write_bytes(path, bytes);
        try {
            read_feature_tensor(path.string());
            FAIL("expected NonFiniteValue");
        } catch (const CifError& e) {
            CHECK(e.code() == ErrorCode::NonFiniteValue);
        }
    }
}

TEST_CASE("unwritable path raises IoFailure") {
    PatchGrid grid = random_grid(1, 1, 1, 3);
    try {
        write_feature_tensor(grid, "/proc/definitely/not/writable/x.cift");
        FAIL("expected IoFailure");
    } catch (const CifError& e) {
        CHECK(e.code() == ErrorCode::IoFailure);
    }
}

TEST_CASE("mask and depth files round trip") {
    auto dir = temp_dir("maskdepth");
    ForegroundMask mask;
    mask.rows = 3;
    mask.cols = 4;
    mask.bits = {1, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0};
    write_mask(mask, (dir / "m.cifm").string());
    ForegroundMask mask_back = read_mask((dir / "m.cifm").string());
    CHECK(mask_back.rows == 3);
    CHECK(mask_back.cols == 4);
    CHECK(mask_back.bits == mask.bits);

    DepthMap depth;
    depth.h = 2;
    depth.w = 3;
    depth.values.resize(2, 3);
    depth.values << 0.0f, 0.5f, 1.0f, 0.25f, 0.0f, 0.75f;
    write_depth(depth, (dir / "d.cifd").string());
    DepthMap depth_back = read_depth((dir / "d.cifd").string());
    CHECK(depth_back.values == depth.values);
}

TEST_CASE("round trip property over random grids") {
    auto dir = temp_dir("roundtrip");
    std::mt19937 rng(99);
    for (int iter = 0; iter < 10; ++iter) {
        int rows = 1 + static_cast<int>(rng() % 6);
        int cols = 1 + static_cast<int>(rng() % 6);
        int dim = 1 + static_cast<int>(rng() % 16);
        PatchGrid grid = random_grid(rows, cols, dim, rng());
        auto path = (dir / "g.cift").string();
        write_feature_tensor(grid, path);
        PatchGrid back = read_feature_tensor(path);
        CHECK(std::memcmp(back.data.data(), grid.data.data(),
                          sizeof(float) * grid.data.size()) == 0);
    }
}

TEST_CASE("manifest round trips and validates") {
    auto dir = temp_dir("manifest");
    PatchGrid grid = random_grid(2, 2, 3, 5);
    write_feature_tensor(grid, (dir / "feat.cift").string());

    DatasetManifest manifest;
    manifest.class_name = "widget";
    SampleEntry train;
    train.id = "train_000";
    train.split = Split::Train;
    train.label = Label::Normal;
    train.feature_paths[Modality::RGB] = "feat.cift";
    manifest.samples.push_back(train);
    SampleEntry test = train;
    test.id = "test_000";
    test.split = Split::Test;
    test.label = Label::Anomalous;
    manifest.samples.push_back(test);

    auto path = (dir / "manifest.json").string();
    write_manifest(manifest, path);
    DatasetManifest back = read_manifest(path);
    CHECK(back.class_name == "widget");
    REQUIRE(back.samples.size() == 2);
    CHECK(back.samples[0].id == "train_000");
    CHECK(back.samples[1].label == Label::Anomalous);
    CHECK(back.train_samples().size() == 1);
    CHECK(back.test_samples().size() == 1);
}

TEST_CASE("manifest rejects anomalous train samples and unknown keys") {
    auto dir = temp_dir("manifestbad");
    PatchGrid grid = random_grid(2, 2, 3, 5);
    write_feature_tensor(grid, (dir / "feat.cift").string());

    SUBCASE("anomalous train sample") {
        std::string doc = R"({"class":"w","samples":[{"id":"t","split":"train",
            "label":"anomalous","features":{"rgb":"feat.cift"}}]})";
        write_bytes(dir / "bad.json", doc);
        CHECK_THROWS_AS(read_manifest((dir / "bad.json").string()), CifError);
    }
    SUBCASE("unknown key") {
        std::string doc = R"({"class":"w","samples":[],"bogus":1})";
        write_bytes(dir / "bad.json", doc);
        CHECK_THROWS_AS(read_manifest((dir / "bad.json").string()), CifError);
    }
    SUBCASE("unresolvable path") {
        std::string doc = R"({"class":"w","samples":[{"id":"t","split":"train",
            "label":"normal","features":{"rgb":"missing.cift"}}]})";
        write_bytes(dir / "bad.json", doc);
        CHECK_THROWS_AS(read_manifest((dir / "bad.json").string()), CifError);
    }
}
