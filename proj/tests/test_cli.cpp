#include <doctest.h>

#include <stdexcept>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "unca/cli.hpp"
#include "unca/image_io.hpp"
#include "unca/model_io.hpp"
#include "unca/nca.hpp"

using namespace unca;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("png round trip preserves 8-bit pixel values") {
    Image img = test::random_image(13, 17, 77);
    // Snap to the 8-bit lattice first so equality is exact.
    for (double& v : img.data) v = std::round(v * 255.0) / 255.0;
    const std::string path = temp_path("unca_roundtrip.png");
    write_png(img, path);
    const Image back = read_png(path);
    REQUIRE(back.height == img.height);
    REQUIRE(back.width == img.width);
    for (size_t i = 0; i < img.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("ppm round trip at both depths") {
    Image img = test::random_image(6, 5, 78);
    const std::string p8 = temp_path("unca_8.ppm"), p16 = temp_path("unca_16.ppm");
    write_ppm(img, p8, 255);
    write_ppm(img, p16, 65535);
    const Image b8 = read_ppm(p8), b16 = read_ppm(p16);
    for (size_t i = 0; i < img.size(); ++i) {
        CHECK(std::abs(b8.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-12);
        CHECK(std::abs(b16.data[i] - img.data[i]) <= 0.5 / 65535.0 + 1e-12);
    }
    std::remove(p8.c_str());
    std::remove(p16.c_str());
}

TEST_CASE("config files parse key = value lines with comments") {
    const std::string path = temp_path("unca_cfg.txt");
    {
        std::ofstream out(path);
        out << "# texture run\n"
            << "filters = 4,2,2\n"
            << "steps = 17   # flags override this\n"
            << "lr = 0.005\n"
            << "ablate_overflow = true\n"
            << "\n";
    }
    RunConfig rc;
    apply_config_file(rc, path);
    CHECK(rc.filters == "4,2,2");
    CHECK(rc.steps == 17);
    CHECK(rc.lr == doctest::Approx(0.005));
    CHECK(rc.ablate_overflow);
    CHECK_FALSE(rc.ablate_gradnorm);

    {
        std::ofstream out(path);
        out << "no_such_key = 1\n";
    }
    CHECK_THROWS_AS(apply_config_file(rc, path), std::invalid_argument);
    std::remove(path.c_str());
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(cli_main({}) == 1);
    CHECK(cli_main({"frobnicate"}) == 1);
    CHECK(cli_main({"generate"}) == 1);  // missing model argument
    CHECK(cli_main({"generate", "/nonexistent/model.unca"}) == 2);
}

TEST_CASE("generate with zero steps writes the clamped seed noise") {
    const ModelConfig cfg = make_config(2, 1, 1);
    const Params zero(cfg.channels);
    const std::string model = temp_path("unca_zero.unca");
    save_model(zero, cfg, model);

    const std::string out = temp_path("unca_gen.png");
    CHECK(cli_main({"generate", model, "--steps", "0", "--size", "16",
                    "--seed", "9", "--out", out}) == 0);

    Rng rng(9);
    const Image want = to_rgb(seed_grid(16, 16, cfg, rng));
    const Image got = read_png(out);
    for (size_t i = 0; i < want.size(); ++i)
        CHECK(std::abs(got.data[i] - want.data[i]) <= 0.5 / 255.0 + 1e-12);
    std::remove(out.c_str());

    // Same seed, same bytes; different seed, different image.
    const std::string out_a = temp_path("unca_gen_a.png");
    const std::string out_b = temp_path("unca_gen_b.png");
    const std::string out_c = temp_path("unca_gen_c.png");
    CHECK(cli_main({"generate", model, "--steps", "0", "--size", "16", "--seed", "5", "--out", out_a}) == 0);
    CHECK(cli_main({"generate", model, "--steps", "0", "--size", "16", "--seed", "5", "--out", out_b}) == 0);
    CHECK(cli_main({"generate", model, "--steps", "0", "--size", "16", "--seed", "6", "--out", out_c}) == 0);
    CHECK(read_bytes(out_a) == read_bytes(out_b));
    CHECK(read_bytes(out_a) != read_bytes(out_c));
    std::remove(out_a.c_str());
    std::remove(out_b.c_str());
    std::remove(out_c.c_str());
    std::remove(model.c_str());
}

TEST_CASE("quantize and emit subcommands produce the expected artifacts") {
    const ModelConfig cfg = make_config(2, 1, 1);
    const Params p = test::random_params(cfg.channels, 81, 0.3);
    const std::string model = temp_path("unca_cli_f.unca");
    save_model(p, cfg, model);

    const std::string qmodel = temp_path("unca_cli_q.unca");
    CHECK(cli_main({"quantize", model, "--out", qmodel}) == 0);
    CHECK(read_bytes(qmodel).size() == 85);

    const std::string frag = temp_path("unca_cli.frag");
    CHECK(cli_main({"emit", qmodel, "--target", "glsl", "--out", frag}) == 0);
    std::ifstream in(frag);
    std::string first_line;
    std::getline(in, first_line);
    CHECK(first_line == "#version 300 es");

    const std::string csrc = temp_path("unca_cli.c");
    CHECK(cli_main({"emit", model, "--target", "c", "--out", csrc}) == 0);
    CHECK(read_bytes(csrc).size() > 0);

    CHECK(cli_main({"emit", model, "--target", "rust", "--out", csrc}) == 1);

    std::remove(model.c_str());
    std::remove(qmodel.c_str());
    std::remove(frag.c_str());
    std::remove(csrc.c_str());
}

TEST_CASE("flags override config file values") {
    const ModelConfig cfg = make_config(2, 1, 1);
    const Params zero(cfg.channels);
    const std::string model = temp_path("unca_cli_zero.unca");
    save_model(zero, cfg, model);

    const std::string cfg_path = temp_path("unca_cli_cfg.txt");
    {
        std::ofstream out(cfg_path);
        out << "size = 12\nseed = 3\n";
    }
    const std::string out_file = temp_path("unca_cli_over.png");
    // --size on the command line beats size from the file.
    CHECK(cli_main({"generate", model, "--config", cfg_path, "--steps", "0",
                    "--size", "20", "--out", out_file}) == 0);
    const Image got = read_png(out_file);
    CHECK(got.height == 20);
    CHECK(got.width == 20);

    std::remove(model.c_str());
    std::remove(cfg_path.c_str());
    std::remove(out_file.c_str());
}
