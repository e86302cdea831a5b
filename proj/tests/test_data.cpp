#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fan/dataset.hpp"

using namespace fan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("fan_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("idx round-trip preserves bytes and counts") {
    TempDir tmp;
    std::vector<uint8_t> pixels(5 * 4 * 3);
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<uint8_t>(i * 7 % 256);
    std::vector<uint8_t> labels = {0, 3, 9, 1, 7};
    idx::write_images(tmp.file("img"), pixels, 5, 4, 3);
    idx::write_labels(tmp.file("lab"), labels);

    auto ds = load_idx(tmp.file("img"), tmp.file("lab"));
    CHECK(ds.images.shape() == Shape{5, 1, 4, 3});
    CHECK(ds.labels == std::vector<int>{0, 3, 9, 1, 7});
    for (size_t i = 0; i < pixels.size(); ++i)
        CHECK(ds.images[static_cast<int64_t>(i)] ==
              Catch::Approx(pixels[i] / 255.0f).margin(1e-7));

    auto raw = idx::read_images(tmp.file("img"));
    CHECK(raw.pixels == pixels);
}

TEST_CASE("idx loader: images without labels give an unlabeled dataset") {
    TempDir tmp;
    idx::write_images(tmp.file("img"), std::vector<uint8_t>(9 * 28 * 28, 128), 9, 28, 28);
    auto ds = load_idx(tmp.file("img"));
    CHECK(ds.size() == 9);
    CHECK_FALSE(ds.labeled());
}

TEST_CASE("idx loader error paths") {
    TempDir tmp;
    idx::write_images(tmp.file("img9"), std::vector<uint8_t>(9 * 2 * 2, 0), 9, 2, 2);
    idx::write_labels(tmp.file("lab10"), std::vector<uint8_t>(10, 1));
    SECTION("count mismatch") {
        CHECK_THROWS_AS(load_idx(tmp.file("img9"), tmp.file("lab10")), FormatError);
    }
    SECTION("bad magic") {
        std::ofstream out(tmp.file("bad"), std::ios::binary);
        out.write("\x00\x00\x08\x05", 4);
        out.write("\x00\x00\x00\x01", 4);
        out.close();
        CHECK_THROWS_AS(load_idx(tmp.file("bad")), FormatError);
    }
    SECTION("truncated payload") {
        std::ofstream out(tmp.file("trunc"), std::ios::binary);
        idx::write_be32(out, idx::kImagesMagic);
        idx::write_be32(out, 100);
        idx::write_be32(out, 28);
        idx::write_be32(out, 28);
        out.write("abc", 3);
        out.close();
        CHECK_THROWS_AS(load_idx(tmp.file("trunc")), FormatError);
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_idx(tmp.file("nope")), FormatError);
    }
}

TEST_CASE("resize_bilinear: constant stays constant, 28x28 is identity") {
    Tensor flat({1, 16, 16}, 0.42f);
    Tensor r = resize_bilinear(flat);
    for (int64_t i = 0; i < r.size(); ++i) CHECK(r[i] == Catch::Approx(0.42f).margin(1e-6));

    Tensor img({1, 28, 28});
    Rng rng(3);
    for (int64_t i = 0; i < img.size(); ++i) img[i] = rng.uniform(0, 1);
    Tensor same = resize_bilinear(img);
    for (int64_t i = 0; i < img.size(); ++i) CHECK(same[i] == img[i]);
}

TEST_CASE("resize_bilinear keeps a ramp monotone along rows") {
    Tensor ramp({1, 16, 16});
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) ramp[i * 16 + j] = static_cast<float>(j) / 15.0f;
    Tensor up = resize_bilinear(ramp);
    for (int i = 0; i < 28; ++i)
        for (int j = 1; j < 28; ++j) CHECK(up[i * 28 + j] >= up[i * 28 + j - 1]);
}

TEST_CASE("rgb_to_gray applies ITU-R 601 weights") {
    Tensor white({3, 2, 2}, 1.0f);
    Tensor g = rgb_to_gray(white);
    for (int64_t i = 0; i < 4; ++i) CHECK(g[i] == Catch::Approx(1.0f));

    Tensor red({3, 1, 1}, {1, 0, 0});
    CHECK(rgb_to_gray(red)[0] == Catch::Approx(0.299f));

    Rng rng(9);
    Tensor img({3, 5, 5});
    for (int64_t i = 0; i < img.size(); ++i) img[i] = rng.uniform(0, 1);
    Tensor gray = rgb_to_gray(img);
    for (int64_t i = 0; i < 25; ++i) {
        float expect = 0.299f * img[i] + 0.587f * img[25 + i] + 0.114f * img[50 + i];
        CHECK(gray[i] == Catch::Approx(expect).margin(1e-6));
    }
}

TEST_CASE("sample_protocol: n = N is a permutation, seeding is deterministic") {
    auto base = make_glyph_dataset(50, 1);
    auto perm = sample_protocol(base, 50, 7);
    std::vector<int> sorted = perm.labels;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect = base.labels;
    std::sort(expect.begin(), expect.end());
    CHECK(sorted == expect);

    auto a = sample_protocol(base, 20, 7);
    auto b = sample_protocol(base, 20, 7);
    CHECK(a.labels == b.labels);
    CHECK(a.images.vec() == b.images.vec());
    auto c = sample_protocol(base, 20, 8);
    CHECK(a.images.vec() != c.images.vec());
}

TEST_CASE("sample_protocol rejects oversampling") {
    auto base = make_glyph_dataset(10, 1);
    CHECK_THROWS_AS(sample_protocol(base, 11, 0), ArgumentError);
}

TEST_CASE("sample_protocol: 2000-draw class histogram within 4 sigma of expectation") {
    auto base = make_glyph_dataset(6000, 2);
    auto draw = sample_protocol(base, 2000, 5);
    std::array<int, 10> hist{};
    for (int l : draw.labels) hist[l]++;
    double expect = 200.0;
    double sigma = std::sqrt(2000.0 * 0.1 * 0.9);
    for (int c = 0; c < 10; ++c) {
        INFO("class " << c << " count " << hist[c]);
        CHECK(std::abs(hist[c] - expect) <= 4.0 * sigma);
    }
}

TEST_CASE("synth_domain_pair: invert is an involution and withholds labels") {
    auto base = make_glyph_dataset(40, 3);
    auto [src, tgt] = synth_domain_pair(base, Shift::Invert, 11);
    CHECK(src.labeled());
    CHECK_FALSE(tgt.labeled());
    CHECK(tgt.eval_labels == base.labels);
    CHECK(tgt.domain == DomainTag::Target);

    DomainDataset relabeled = tgt;
    relabeled.labels = tgt.eval_labels;
    auto [src2, twice] = synth_domain_pair(relabeled, Shift::Invert, 11);
    for (int64_t i = 0; i < base.images.size(); ++i)
        CHECK(std::abs(twice.images[i] - base.images[i]) < 1e-7f);
}

TEST_CASE("synth_domain_pair: noise and brightness stay in range") {
    auto base = make_glyph_dataset(30, 4);
    for (Shift s : {Shift::Noise, Shift::Brightness}) {
        auto [src, tgt] = synth_domain_pair(base, s, 13);
        CHECK_NOTHROW(tgt.validate());
        CHECK_NOTHROW(src.validate());
    }
}

TEST_CASE("glyph dataset satisfies dataset invariants and is deterministic") {
    auto a = make_glyph_dataset(100, 42);
    auto b = make_glyph_dataset(100, 42);
    CHECK_NOTHROW(a.validate());
    CHECK(a.images.vec() == b.images.vec());
    CHECK(a.labels == b.labels);
    // all ten classes present and images distinct across samples of one class
    std::array<int, 10> hist{};
    for (int l : a.labels) hist[l]++;
    for (int c = 0; c < 10; ++c) CHECK(hist[c] == 10);
    CHECK(make_glyph_dataset(100, 43).images.vec() != a.images.vec());
}

TEST_CASE("one_hot builds valid label rows") {
    Tensor t = one_hot({0, 9, 4});
    CHECK(t.shape() == Shape{3, 10});
    for (int i = 0; i < 3; ++i) {
        float sum = 0;
        for (int j = 0; j < 10; ++j) sum += t[i * 10 + j];
        CHECK(sum == 1.0f);
    }
    CHECK(t[0] == 1.0f);
    CHECK(t[19] == 1.0f);
    CHECK(t[24] == 1.0f);
    CHECK_THROWS_AS(one_hot({10}), ArgumentError);
}

TEST_CASE("to_28x28 resizes non-native sizes only") {
    DomainDataset ds;
    ds.images = Tensor({3, 1, 16, 16}, 0.5f);
    ds.labels = {1, 2, 3};
    auto out = to_28x28(ds);
    CHECK(out.images.shape() == Shape{3, 1, 28, 28});
    CHECK(out.labels == ds.labels);
    auto same = to_28x28(out);
    CHECK(same.images.vec() == out.images.vec());
}
