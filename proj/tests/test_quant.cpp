#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "unca/codegen.hpp"
#include "unca/model_io.hpp"
#include "unca/quantize.hpp"

using namespace unca;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

// Deterministic non-trivial model used for the emission snapshots.
QuantizedModel snapshot_model(int n_lap, int n_x, int n_y) {
    const ModelConfig cfg = make_config(n_lap, n_x, n_y);
    const Params p = test::random_params(cfg.channels, 42, 0.3);
    return quantize(p, cfg);
}

int count_floats(const std::string& text, const std::string& marker) {
    const size_t start = text.find(marker);
    REQUIRE(start != std::string::npos);
    const size_t open = text.find('(', start);
    const size_t close = text.find(");", open);
    REQUIRE(close != std::string::npos);
    int count = 1;
    for (size_t i = open; i < close; ++i)
        if (text[i] == ',') ++count;
    return count;
}

}  // namespace

TEST_CASE("quantization of the zero rule") {
    const ModelConfig cfg = make_config(2, 1, 1);
    const Params zero(cfg.channels);
    const QuantizedModel qm = quantize(zero, cfg);
    CHECK(qm.w_scale == 1.0f);
    CHECK(qm.b_scale == 1.0f);
    for (int8_t c : qm.w_q) CHECK(c == 0);
    for (int8_t c : qm.b_q) CHECK(c == 0);
}

TEST_CASE("quantization rounds half away from zero at the stated scale") {
    const ModelConfig cfg = make_config(2, 1, 1);
    Params p(cfg.channels);
    p.w[0] = 0.254;
    p.w[1] = 0.127;
    const QuantizedModel qm = quantize(p, cfg);
    CHECK(qm.w_scale == doctest::Approx(0.002).epsilon(1e-9));
    CHECK(qm.w_q[0] == 127);
    CHECK(qm.w_q[1] == 64);  // 63.5 rounds away from zero
}

TEST_CASE("round-trip error is bounded by half a scale step") {
    const ModelConfig cfg = make_config(4, 2, 2);
    const Params p = test::random_params(cfg.channels, 7, 0.4);
    const QuantizedModel qm = quantize(p, cfg);
    const Params back = dequantize(qm);
    for (size_t i = 0; i < p.w.size(); ++i)
        CHECK(std::abs(back.w[i] - p.w[i]) <= qm.w_scale / 2 + 1e-12);
    for (size_t i = 0; i < p.b.size(); ++i)
        CHECK(std::abs(back.b[i] - p.b[i]) <= qm.b_scale / 2 + 1e-12);
}

TEST_CASE("re-quantizing a dequantized model is the identity on codes") {
    const ModelConfig cfg = make_config(2, 2, 2);
    const Params p = test::random_params(cfg.channels, 9, 0.2);
    const QuantizedModel qm = quantize(p, cfg);
    const QuantizedModel qm2 = quantize(dequantize(qm), cfg);
    CHECK(qm.w_q == qm2.w_q);
    CHECK(qm.b_q == qm2.b_q);
    CHECK(qm.w_scale == qm2.w_scale);
    CHECK(qm.b_scale == qm2.b_scale);

    CHECK(dequantize(qm).w[0] == static_cast<double>(qm.w_q[0]) * qm.w_scale);
}

TEST_CASE("model files have the documented layout and sizes") {
    const ModelConfig cfg = make_config(2, 1, 1);
    const Params p = test::random_params(cfg.channels, 11, 0.3);
    const QuantizedModel qm = quantize(p, cfg);

    const std::string qpath = temp_path("unca_test_q.unca");
    save_model(qm, qpath);
    const auto qbytes = read_bytes(qpath);
    CHECK(qbytes.size() == 85);  // 4+1+1+3 header, 8 scales, 68 codes
    CHECK(qbytes[0] == 'u');
    CHECK(qbytes[1] == 'N');
    CHECK(qbytes[2] == 'C');
    CHECK(qbytes[3] == 'A');
    CHECK(qbytes[4] == 1);
    CHECK(qbytes[5] == 1);

    const ModelFile mf = load_model(qpath);
    CHECK(mf.quantized);
    CHECK(mf.qm.w_q == qm.w_q);
    CHECK(mf.qm.b_q == qm.b_q);
    // The file narrows scales to float32.
    CHECK(static_cast<float>(mf.qm.w_scale) == static_cast<float>(qm.w_scale));

    // Save-load-save reproduces the bytes exactly.
    const std::string qpath2 = temp_path("unca_test_q2.unca");
    save_model(mf.qm, qpath2);
    CHECK(read_bytes(qpath2) == qbytes);

    const std::string fpath = temp_path("unca_test_f.unca");
    save_model(p, cfg, fpath);
    const auto fbytes = read_bytes(fpath);
    CHECK(fbytes.size() == 9 + 4u * 68);
    const ModelFile ff = load_model(fpath);
    CHECK_FALSE(ff.quantized);
    for (size_t i = 0; i < p.w.size(); ++i)
        CHECK(ff.params.w[i] == doctest::Approx(p.w[i]).epsilon(1e-7));

    std::remove(qpath.c_str());
    std::remove(qpath2.c_str());
    std::remove(fpath.c_str());
}

TEST_CASE("loader distinguishes bad magic, version and length") {
    const ModelConfig cfg = make_config(2, 1, 1);
    const QuantizedModel qm = quantize(test::random_params(4, 13, 0.1), cfg);
    const std::string path = temp_path("unca_test_corrupt.unca");
    save_model(qm, path);
    auto bytes = read_bytes(path);

    auto write_back = [&](const std::vector<uint8_t>& b) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    };

    auto truncated = bytes;
    truncated.resize(bytes.size() - 5);
    write_back(truncated);
    CHECK_THROWS_AS(load_model(path), BadLengthError);

    auto wrong_magic = bytes;
    wrong_magic[0] = 'x';
    write_back(wrong_magic);
    CHECK_THROWS_AS(load_model(path), BadMagicError);

    auto wrong_version = bytes;
    wrong_version[4] = 9;
    write_back(wrong_version);
    CHECK_THROWS_AS(load_model(path), BadVersionError);

    std::remove(path.c_str());
}

TEST_CASE("emitted C source matches its golden snapshot") {
    const std::string got = emit_c(snapshot_model(2, 1, 1));
    const std::string want = read_text(std::string(UNCA_GOLDEN_DIR) + "/nca68.c");
    CHECK(got == want);
}

TEST_CASE("emitted C source stays compact for the largest config") {
    const std::string src = emit_c(snapshot_model(4, 4, 4));
    CHECK(src.size() < 20000);
    CHECK(src.find("ca_step") != std::string::npos);
    CHECK(src.find("P6") != std::string::npos);
}

TEST_CASE("emitted GLSL matches golden snapshots for one and three planes") {
    const std::string got4 = emit_glsl(snapshot_model(2, 1, 1));
    CHECK(got4 == read_text(std::string(UNCA_GOLDEN_DIR) + "/nca68.frag"));
    CHECK(got4.find("#version 300 es") == 0);

    const std::string got12 = emit_glsl(snapshot_model(4, 4, 4));
    CHECK(got12 == read_text(std::string(UNCA_GOLDEN_DIR) + "/nca588.frag"));
}

TEST_CASE("emitted GLSL embeds exactly n_params weights for every published config") {
    const int rows[][3] = {{2, 1, 1}, {2, 2, 2}, {4, 2, 2}, {4, 4, 4}};
    for (const auto& r : rows) {
        const QuantizedModel qm = snapshot_model(r[0], r[1], r[2]);
        const std::string src = emit_glsl(qm);
        const int wn = count_floats(src, "const float W[");
        const int bn = count_floats(src, "const float B[");
        CHECK(wn + bn == qm.config.n_params);
    }
}
