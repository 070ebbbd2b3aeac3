#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coalsort/features/extract.hpp"

using namespace coalsort;

namespace {

img::ImageTensor gray_image(int h, int w, const std::vector<double>& v) {
    img::ImageTensor im(h, w, 1);
    im.data = v;
    return im;
}

img::ImageTensor noise_image(int h, int w, int channels, uint64_t seed) {
    Rng rng(seed);
    img::ImageTensor im(h, w, channels);
    for (auto& v : im.data) v = rng.uniform();
    return im;
}

// 90 degrees clockwise: (y, x) -> (x, h - 1 - y)
img::ImageTensor rot90(const img::ImageTensor& in) {
    img::ImageTensor out(in.width, in.height, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c)
                out.at(x, in.height - 1 - y, c) = in.at(y, x, c);
    return out;
}

}  // namespace

TEST_CASE("to_grayscale applies the luma weights") {
    img::ImageTensor im(1, 2, 3);
    im.at(0, 0, 0) = 1.0;  // pure red
    im.at(0, 1, 0) = 0.2;
    im.at(0, 1, 1) = 0.4;
    im.at(0, 1, 2) = 0.8;
    auto g = feat::to_grayscale(im);
    CHECK(g.channels == 1);
    CHECK(g.at(0, 0, 0) == Catch::Approx(0.299).margin(1e-15));
    CHECK(g.at(0, 1, 0) == Catch::Approx(0.299 * 0.2 + 0.587 * 0.4 + 0.114 * 0.8).margin(1e-15));
    CHECK_THROWS_AS(feat::to_grayscale(img::ImageTensor(2, 2, 1)), Error);
}

TEST_CASE("quantize_gray floors into levels and saturates at the top") {
    auto im = gray_image(1, 5, {0.0, 0.124, 0.125, 0.5, 1.0});
    auto q = feat::quantize_gray(im, 8);
    CHECK(q.levels == std::vector<int>{0, 0, 1, 4, 7});
    CHECK(q.height == 1);
    CHECK(q.width == 5);

    CHECK_THROWS_AS(feat::quantize_gray(im, 1), Error);
    auto bad = gray_image(1, 1, {1.5});
    CHECK_THROWS_AS(feat::quantize_gray(bad, 8), Error);
}

TEST_CASE("lbp code on a 3x3 patch matches the hand-computed bits") {
    // p=4 r=1 neighbors in bit order: right, up, left, down
    auto im = gray_image(3, 3,
                         {0.1, 0.9, 0.2,
                          0.3, 0.5, 0.8,
                          0.4, 0.7, 0.6});
    auto codes = feat::lbp_codes(im, 4, 1);
    REQUIRE(codes.size() == 1);
    // right 0.8>=0.5, up 0.9>=0.5, left 0.3<0.5, down 0.7>=0.5
    CHECK(codes[0] == 0b1011u);
}

TEST_CASE("equal neighbors count as >= so constant images give the all-ones code") {
    auto im = gray_image(5, 5, std::vector<double>(25, 0.4));
    for (int p : {4, 8}) {
        auto codes = feat::lbp_codes(im, p, 1);
        for (uint32_t c : codes) CHECK(c == (1u << p) - 1u);
    }
    // all-ones has zero transitions, popcount p: everything lands in bin p
    auto fv = feat::lbp_uniform_histogram(im, 8, 1);
    REQUIRE(fv.values.size() == 10);
    CHECK(fv.values[8] == 1.0);
    for (int b : {0, 1, 2, 3, 4, 5, 6, 7, 9}) CHECK(fv.values[size_t(b)] == 0.0);
}

TEST_CASE("transition counting is circular") {
    CHECK(feat::detail::transitions(0b0000, 4) == 0);
    CHECK(feat::detail::transitions(0b1111, 4) == 0);
    CHECK(feat::detail::transitions(0b0011, 4) == 2);
    CHECK(feat::detail::transitions(0b0101, 4) == 4);
    CHECK(feat::detail::transitions(0b00000001, 8) == 2);
}

TEST_CASE("lbp histograms are distributions of the right size") {
    auto im = noise_image(12, 14, 1, 77);
    auto raw = feat::lbp_histogram(im, 8, 1);
    REQUIRE(raw.values.size() == 256);
    double s = 0.0;
    for (double v : raw.values) {
        CHECK(v >= 0.0);
        s += v;
    }
    CHECK(s == Catch::Approx(1.0).margin(1e-12));

    auto riu2 = feat::lbp_uniform_histogram(im, 8, 1);
    REQUIRE(riu2.values.size() == 10);
    s = 0.0;
    for (double v : riu2.values) s += v;
    CHECK(s == Catch::Approx(1.0).margin(1e-12));
    CHECK(riu2.descriptor_id == "lbp_riu2_p8r1");
}

TEST_CASE("riu2 histograms are invariant to 90 degree rotation") {
    auto im = noise_image(24, 24, 1, 4242);
    auto a = feat::multiscale_lbp(im);
    auto b = feat::multiscale_lbp(rot90(im));
    REQUIRE(a.values.size() == b.values.size());
    for (size_t i = 0; i < a.values.size(); ++i)
        CHECK(a.values[i] == Catch::Approx(b.values[i]).margin(1e-12));
}

TEST_CASE("multiscale lbp length follows p+2 per scale") {
    auto im = noise_image(16, 16, 1, 9);
    feat::LBPConfig cfg;
    size_t want = 0;
    for (auto [p, r] : cfg.scales) want += size_t(p) + 2;
    CHECK(want == 80);
    auto fv = feat::multiscale_lbp(im);
    CHECK(fv.values.size() == want);
    CHECK(fv.descriptor_id == "lbp_riu2_p8r1_p16r2_p24r3_p24r4");

    feat::LBPConfig bad;
    bad.scales = {{3, 1}};
    CHECK_THROWS_AS(feat::multiscale_lbp(im, bad), Error);
    // radius 5 needs sides > 10
    auto tiny = noise_image(9, 9, 1, 9);
    CHECK_THROWS_AS(feat::lbp_codes(tiny, 8, 5), Error);
}

TEST_CASE("glcm counts match the worked 4x4 example") {
    feat::GrayLevels q{4, 4,
                       {0, 0, 1, 1,
                        0, 0, 1, 1,
                        0, 2, 2, 2,
                        2, 2, 3, 3}};
    feat::GLCMConfig cfg;
    cfg.levels = 4;
    cfg.offsets = {{0, 1}};
    cfg.symmetric = false;
    cfg.normalized = false;

    auto mats = feat::glcm(q, cfg);
    REQUIRE(mats.size() == 1);
    const auto& m = mats[0];
    CHECK(m.at(0, 0) == 2.0);
    CHECK(m.at(0, 1) == 2.0);
    CHECK(m.at(0, 2) == 1.0);
    CHECK(m.at(1, 1) == 2.0);
    CHECK(m.at(2, 2) == 3.0);
    CHECK(m.at(2, 3) == 1.0);
    CHECK(m.at(3, 3) == 1.0);
    double total = 0.0;
    for (double v : m.p) total += v;
    CHECK(total == 12.0);

    cfg.symmetric = true;
    auto sym = feat::glcm(q, cfg)[0];
    CHECK(sym.at(0, 0) == 4.0);
    CHECK(sym.at(0, 1) == 2.0);
    CHECK(sym.at(1, 0) == 2.0);
    CHECK(sym.at(0, 2) == 1.0);
    CHECK(sym.at(2, 0) == 1.0);
    CHECK(sym.at(2, 2) == 6.0);
    CHECK(sym.at(2, 3) == 1.0);
    CHECK(sym.at(3, 2) == 1.0);
    CHECK(sym.at(3, 3) == 2.0);

    cfg.normalized = true;
    auto norm = feat::glcm(q, cfg)[0];
    CHECK(norm.at(0, 0) == Catch::Approx(4.0 / 24.0).margin(1e-15));
    total = 0.0;
    for (double v : norm.p) total += v;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("glcm vertical offset counts are direction-sensitive") {
    feat::GrayLevels q{4, 4,
                       {0, 0, 1, 1,
                        0, 0, 1, 1,
                        0, 2, 2, 2,
                        2, 2, 3, 3}};
    feat::GLCMConfig cfg;
    cfg.levels = 4;
    cfg.offsets = {{1, 0}};
    cfg.symmetric = false;
    cfg.normalized = false;
    auto m = feat::glcm(q, cfg)[0];
    CHECK(m.at(0, 0) == 3.0);
    CHECK(m.at(1, 1) == 2.0);
    CHECK(m.at(0, 2) == 2.0);
    CHECK(m.at(1, 2) == 2.0);
    CHECK(m.at(2, 2) == 1.0);
    CHECK(m.at(2, 3) == 2.0);
    CHECK(m.at(2, 0) == 0.0);
}

TEST_CASE("glcm rejects bad configs and out-of-range levels") {
    feat::GrayLevels q{1, 2, {0, 1}};
    feat::GLCMConfig cfg;
    cfg.levels = 2;
    cfg.offsets = {{0, 0}};
    CHECK_THROWS_AS(feat::glcm(q, cfg), Error);
    cfg.offsets = {{0, 1}};
    feat::GrayLevels hot{1, 2, {0, 5}};
    CHECK_THROWS_AS(feat::glcm(hot, cfg), Error);
}

TEST_CASE("glcm properties match closed forms on 2x2 matrices") {
    feat::GlcmMatrix diag{2, {0.5, 0.0, 0.0, 0.5}};
    auto p = feat::glcm_properties(diag);
    REQUIRE(p.size() == 6);
    CHECK(p[0] == Catch::Approx(0.0).margin(1e-15));        // contrast
    CHECK(p[1] == Catch::Approx(0.0).margin(1e-15));        // dissimilarity
    CHECK(p[2] == Catch::Approx(1.0).margin(1e-15));        // homogeneity
    CHECK(p[3] == Catch::Approx(std::sqrt(0.5)).margin(1e-15));  // energy
    CHECK(p[4] == Catch::Approx(1.0).margin(1e-12));        // correlation
    CHECK(p[5] == Catch::Approx(0.5).margin(1e-15));        // ASM

    feat::GlcmMatrix anti{2, {0.0, 0.5, 0.5, 0.0}};
    p = feat::glcm_properties(anti);
    CHECK(p[0] == Catch::Approx(1.0).margin(1e-15));
    CHECK(p[1] == Catch::Approx(1.0).margin(1e-15));
    CHECK(p[2] == Catch::Approx(0.5).margin(1e-15));
    CHECK(p[4] == Catch::Approx(-1.0).margin(1e-12));

    // single-cell mass: zero marginal variance, correlation pinned to 1
    feat::GlcmMatrix point{2, {1.0, 0.0, 0.0, 0.0}};
    CHECK(feat::glcm_properties(point)[4] == 1.0);

    feat::GlcmMatrix raw{2, {2.0, 0.0, 0.0, 2.0}};
    CHECK_THROWS_AS(feat::glcm_properties(raw), Error);
}

TEST_CASE("glcm feature vector is 6 properties per offset") {
    auto im = noise_image(16, 16, 3, 123);
    auto fv = feat::glcm_features(feat::to_grayscale(im));
    CHECK(fv.values.size() == 24);
    CHECK(fv.descriptor_id == "glcm_l8_o4_sym");

    // constant image: all mass on one diagonal cell for every offset
    img::ImageTensor flat(8, 8, 1);
    for (auto& v : flat.data) v = 0.3;
    auto cf = feat::glcm_features(flat);
    for (size_t o = 0; o < 4; ++o) {
        CHECK(cf.values[o * 6 + 0] == 0.0);  // contrast
        CHECK(cf.values[o * 6 + 1] == 0.0);  // dissimilarity
        CHECK(cf.values[o * 6 + 2] == Catch::Approx(1.0).margin(1e-15));
        CHECK(cf.values[o * 6 + 3] == Catch::Approx(1.0).margin(1e-15));
        CHECK(cf.values[o * 6 + 4] == 1.0);
        CHECK(cf.values[o * 6 + 5] == Catch::Approx(1.0).margin(1e-15));
    }
}

TEST_CASE("haar block transform matches the 2x2 closed form") {
    feat::Plane in(2, 2);
    in.at(0, 0) = 1.0;
    in.at(0, 1) = 2.0;
    in.at(1, 0) = 3.0;
    in.at(1, 1) = 4.0;
    auto b = feat::haar_dwt2(in);
    CHECK(b.ll.at(0, 0) == 5.0);
    CHECK(b.lh.at(0, 0) == -1.0);
    CHECK(b.hl.at(0, 0) == -2.0);
    CHECK(b.hh.at(0, 0) == 0.0);

    feat::Plane odd(3, 4);
    CHECK_THROWS_AS(feat::haar_dwt2(odd), Error);
}

TEST_CASE("haar transform preserves energy") {
    Rng rng(55);
    feat::Plane in(8, 10);
    for (auto& v : in.v) v = rng.normal();
    auto b = feat::haar_dwt2(in);
    double e_in = 0.0, e_out = 0.0;
    for (double v : in.v) e_in += v * v;
    for (const feat::Plane* p : {&b.ll, &b.lh, &b.hl, &b.hh})
        for (double v : p->v) e_out += v * v;
    CHECK(e_out == Catch::Approx(e_in).epsilon(1e-12));
}

TEST_CASE("three-level haar decomposition reconstructs the input") {
    Rng rng(99);
    feat::Plane in(16, 16);
    for (auto& v : in.v) v = rng.uniform();

    feat::Plane ll = in;
    std::vector<feat::HaarBands> stack;
    for (int level = 0; level < 3; ++level) {
        stack.push_back(feat::haar_dwt2(ll));
        ll = stack.back().ll;
    }
    for (int level = 2; level >= 0; --level) {
        stack[size_t(level)].ll = ll;
        ll = feat::haar_idwt2(stack[size_t(level)]);
    }
    REQUIRE(ll.height == 16);
    REQUIRE(ll.width == 16);
    double worst = 0.0;
    for (size_t i = 0; i < in.v.size(); ++i) worst = std::max(worst, std::abs(ll.v[i] - in.v[i]));
    CHECK(worst <= 1e-10);
}

TEST_CASE("pad_to_even replicates the last row and column") {
    feat::Plane in(3, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) in.at(y, x) = y * 3 + x;
    auto out = feat::pad_to_even(in);
    REQUIRE(out.height == 4);
    REQUIRE(out.width == 4);
    CHECK(out.at(3, 3) == 8.0);
    CHECK(out.at(3, 1) == 7.0);
    CHECK(out.at(1, 3) == 5.0);
    CHECK(out.at(2, 2) == 8.0);

    feat::Plane even(4, 6);
    auto same = feat::pad_to_even(even);
    CHECK(same.height == 4);
    CHECK(same.width == 6);
}

TEST_CASE("msws emits 54 values at defaults") {
    auto im = noise_image(32, 32, 3, 2718);
    auto fv = feat::msws_features(im);
    CHECK(fv.values.size() == 54);
    CHECK(fv.descriptor_id == "msws_haar_l3");
}

TEST_CASE("msws is exactly zero on constant images") {
    img::ImageTensor im(16, 16, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) im.at(y, x, c) = 0.1 * (c + 1);
    auto fv = feat::msws_features(im);
    REQUIRE(fv.values.size() == 54);
    for (double v : fv.values) CHECK(v == 0.0);
}

TEST_CASE("msws single-level stats are hand-checkable on a 2x2 image") {
    img::ImageTensor im(2, 2, 3);
    im.at(0, 0, 0) = 1.0;  // other entries zero
    feat::WaveletConfig cfg;
    cfg.levels = 1;
    auto fv = feat::msws_features(im, cfg);
    REQUIRE(fv.values.size() == 18);
    // channel 0: single block [[1,0],[0,0]], LH = HL = HH = 0.5, variance 0
    CHECK(fv.values[0] == 0.5);
    CHECK(fv.values[1] == 0.0);
    CHECK(fv.values[2] == 0.5);
    CHECK(fv.values[3] == 0.0);
    CHECK(fv.values[4] == 0.5);
    CHECK(fv.values[5] == 0.0);
    for (size_t i = 6; i < 18; ++i) CHECK(fv.values[i] == 0.0);
}

TEST_CASE("msws validates its input shape") {
    CHECK_THROWS_AS(feat::msws_features(noise_image(32, 32, 1, 3)), Error);
    // depth 3 needs sides >= 8
    CHECK_THROWS_AS(feat::msws_features(noise_image(4, 4, 3, 3)), Error);
    feat::WaveletConfig bad;
    bad.levels = 0;
    CHECK_THROWS_AS(feat::msws_features(noise_image(32, 32, 3, 3), bad), Error);
}

TEST_CASE("extractor names round-trip and reject unknowns") {
    CHECK(feat::method_from_name("lbp") == feat::Method::lbp);
    CHECK(feat::method_from_name("glcm") == feat::Method::glcm);
    CHECK(feat::method_from_name("msws") == feat::Method::msws);
    CHECK(std::string(feat::method_name(feat::Method::msws)) == "msws");
    try {
        feat::method_from_name("hog");
        FAIL("expected usage error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::usage);
        CHECK(std::string(e.what()).find("valid methods") != std::string::npos);
    }
}

TEST_CASE("extract dispatches to the right descriptor") {
    auto im = noise_image(32, 32, 3, 31);
    CHECK(feat::extract(im, feat::Method::lbp).values.size() == 80);
    CHECK(feat::extract(im, feat::Method::glcm).values.size() == 24);
    CHECK(feat::extract(im, feat::Method::msws).values.size() == 54);
}

TEST_CASE("features csv writes a parseable header and full-precision values") {
    std::string path = "/tmp/coalsort_feat_test.csv";
    std::vector<feat::FeatureRow> rows = {
        {"img0", "coal", "train", {1.0 / 3.0, -2.5e-17}},
        {"img1", "waste", "test", {0.0, 123456.789012345678}},
    };
    feat::write_features_csv(path, rows);

    std::ifstream f(path);
    REQUIRE(f.good());
    std::string header;
    std::getline(f, header);
    CHECK(header == "image_id,label,split,f0,f1");
    std::string line;
    std::getline(f, line);
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    CHECK(cell == "img0");
    std::getline(ss, cell, ',');
    CHECK(cell == "coal");
    std::getline(ss, cell, ',');
    CHECK(cell == "train");
    std::getline(ss, cell, ',');
    CHECK(std::strtod(cell.c_str(), nullptr) == 1.0 / 3.0);
    std::getline(ss, cell, ',');
    CHECK(std::strtod(cell.c_str(), nullptr) == -2.5e-17);

    std::vector<feat::FeatureRow> mixed = {
        {"a", "coal", "train", {1.0, 2.0}},
        {"b", "coal", "train", {1.0}},
    };
    CHECK_THROWS_AS(feat::write_features_csv(path, mixed), Error);
    std::remove(path.c_str());
}
