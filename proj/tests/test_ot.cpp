#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <set>

#include "test_util.hpp"
#include "unca/pyramid.hpp"
#include "unca/sinkhorn.hpp"
#include "unca/texture_loss.hpp"

using namespace unca;

namespace {

double total_variation(const Image& img) {
    double tv = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                if (x + 1 < img.width) tv += std::abs(img.at(y, x + 1, c) - img.at(y, x, c));
                if (y + 1 < img.height) tv += std::abs(img.at(y + 1, x, c) - img.at(y, x, c));
            }
    return tv;
}

}  // namespace

TEST_CASE("blur keeps constants and spreads an impulse binomially") {
    Image flat(7, 9, 3);
    for (double& v : flat.data) v = 0.4;
    const Image b = gaussian_blur5(flat);
    for (double v : b.data) CHECK(v == doctest::Approx(0.4).epsilon(1e-14));

    Image impulse(9, 9, 1);
    impulse.at(4, 4, 0) = 1.0;
    const Image r = gaussian_blur5(impulse);
    const double tap[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
            CHECK(r.at(4 + dy, 4 + dx, 0) ==
                  doctest::Approx(tap[dy + 2] * tap[dx + 2]).epsilon(1e-14));
    CHECK(r.at(4, 4, 0) == doctest::Approx(36.0 / 256.0).epsilon(1e-14));

    const Image noisy = test::random_image(16, 16, 99);
    CHECK(total_variation(gaussian_blur5(noisy)) <= total_variation(noisy));
}

TEST_CASE("sharpen is linear, fixes constants, and overshoots edges") {
    Image flat(8, 8, 3);
    for (double& v : flat.data) v = 0.7;
    const Image s = sharpen(flat);
    for (double v : s.data) CHECK(v == doctest::Approx(0.7).epsilon(1e-14));

    Image edge(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 4; x < 8; ++x) edge.at(y, x, 0) = 1.0;
    const Image se = sharpen(edge);
    CHECK(se.at(4, 3, 0) < 0.0);  // undershoot on the dark side
    CHECK(se.at(4, 4, 0) > 1.0);  // overshoot on the bright side

    const Image u = test::random_image(10, 10, 5);
    Image u2 = u;
    for (double& v : u2.data) v *= 3.5;
    const Image s1 = sharpen(u), s2 = sharpen(u2);
    for (size_t i = 0; i < s1.size(); ++i)
        CHECK(s2.data[i] == doctest::Approx(3.5 * s1.data[i]).epsilon(1e-12));
}

TEST_CASE("downscale2 halves sizes and suppresses checkerboard aliasing") {
    Image flat(6, 6, 2);
    for (double& v : flat.data) v = 0.3;
    const Image half = downscale2(flat);
    CHECK(half.height == 3);
    CHECK(half.width == 3);
    for (double v : half.data) CHECK(v == doctest::Approx(0.3).epsilon(1e-14));

    CHECK(downscale2(Image(128, 128, 3)).height == 64);
    CHECK(downscale2(Image(5, 7, 1)).width == 4);

    Image checker(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            checker.at(y, x, 0) = (x + y) % 2 ? 1.0 : 0.0;
    const Image c2 = downscale2(checker);
    double mean = 0.0;
    for (double v : c2.data) mean += v;
    mean /= static_cast<double>(c2.size());
    for (double v : c2.data) CHECK(std::abs(v - mean) < 0.25);
}

TEST_CASE("extract_features counts patches per level") {
    const Image img8 = test::random_image(8, 8, 1);
    const PatchFeatures f1 = extract_features(img8, 1, 3);
    CHECK(f1.rows_per_level == std::vector<int>{36});
    CHECK(f1.row_length() == 27);
    CHECK(f1.levels[0].size() == 36u * 27u);

    const Image img16 = test::random_image(16, 16, 2);
    const PatchFeatures f2 = extract_features(img16, 2, 3);
    CHECK(f2.rows_per_level == std::vector<int>{196, 36});

    Image flat(8, 8, 3);
    for (double& v : flat.data) v = 0.5;
    const PatchFeatures fc = extract_features(flat, 1, 3);
    for (int r = 1; r < 36; ++r)
        for (int k = 0; k < 27; ++k)
            CHECK(fc.levels[0][r * 27 + k] == doctest::Approx(fc.levels[0][k]).epsilon(1e-14));

    CHECK_THROWS_AS(extract_features(img8, 3, 3), std::invalid_argument);
}

TEST_CASE("subsample takes everything when short and n distinct rows otherwise") {
    Rng rng(4);
    const auto all = subsample_indices(36, 2048, rng);
    CHECK(all.size() == 36);
    for (int i = 0; i < 36; ++i) CHECK(all[i] == i);

    const auto some = subsample_indices(5000, 2048, rng);
    CHECK(some.size() == 2048);
    std::set<int> uniq(some.begin(), some.end());
    CHECK(uniq.size() == 2048);
    for (int i : some) {
        CHECK(i >= 0);
        CHECK(i < 5000);
    }

    Rng r1(9), r2(9);
    CHECK(subsample_indices(500, 64, r1) == subsample_indices(500, 64, r2));
}

TEST_CASE("exact OT oracle enumerates assignments") {
    const std::vector<double> x{0.0, 2.0}, y{1.0, 3.0};
    CHECK(exact_ot_oracle(x, x, 2, 1) == 0.0);
    const std::vector<double> y_swapped{1.0, 0.0}, x01{0.0, 1.0};
    CHECK(exact_ot_oracle(x01, y_swapped, 2, 1) == 0.0);
    CHECK(exact_ot_oracle(x, y, 2, 1) == doctest::Approx(1.0));  // (1+1)/2 beats (9+1)/2
    std::vector<double> big(9, 0.0);
    CHECK_THROWS_AS(exact_ot_oracle(big, big, 9, 1), std::invalid_argument);
}

TEST_CASE("debiased divergence of a set with itself is zero") {
    Rng rng(21);
    const int n = 20, d = 5;
    std::vector<double> x(n * d);
    for (double& v : x) v = rng.uniform();
    OTConfig cfg;
    const SinkhornResult res = sinkhorn_divergence(x, n, x, n, d, cfg);
    CHECK(std::abs(res.value) < 1e-8);
    for (double g : res.grad_x) CHECK(std::abs(g) < 1e-8);
}

TEST_CASE("single-pair transport has closed form value and gradient") {
    const std::vector<double> x{0.0}, y{1.0};
    OTConfig cfg;
    cfg.epsilon = 0.01;
    const SinkhornResult res = sinkhorn_divergence(x, 1, y, 1, 1, cfg);
    CHECK(res.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.grad_x[0] == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("sinkhorn tracks the brute-force oracle at small epsilon") {
    Rng rng(31);
    OTConfig cfg;
    cfg.epsilon = 0.01;
    cfg.max_iters = 20000;
    cfg.tolerance = 1e-10;
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 4, d = 2;
        std::vector<double> x(n * d), y(n * d);
        for (double& v : x) v = rng.uniform();
        for (double& v : y) v = rng.uniform();
        const double exact = exact_ot_oracle(x, y, n, d);
        const SinkhornResult res = sinkhorn_divergence(x, n, y, n, d, cfg);
        CHECK(test::rel_err(res.value, exact) < 0.05);
    }
}

TEST_CASE("divergence is symmetric and non-negative") {
    Rng rng(41);
    OTConfig cfg;
    cfg.tolerance = 1e-12;
    cfg.max_iters = 5000;
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 12, m = 9, d = 4;
        std::vector<double> x(n * d), y(m * d);
        for (double& v : x) v = rng.uniform();
        for (double& v : y) v = rng.uniform();
        const SinkhornResult xy = sinkhorn_divergence(x, n, y, m, d, cfg);
        const SinkhornResult yx = sinkhorn_divergence(y, m, x, n, d, cfg);
        CHECK(std::abs(xy.value - yx.value) < 1e-8);
        CHECK(xy.value > -1e-8);
    }
}

TEST_CASE("sinkhorn reports failure modes") {
    std::vector<double> x{0.0, 1.0}, bad{0.0, std::nan("")};
    OTConfig cfg;
    CHECK_THROWS_AS(sinkhorn_divergence(x, 2, bad, 2, 1, cfg), std::runtime_error);

    Rng rng(51);
    std::vector<double> a(16 * 3), b(16 * 3);
    for (double& v : a) v = rng.uniform();
    for (double& v : b) v = rng.uniform();
    OTConfig strict;
    strict.max_iters = 1;
    strict.tolerance = 1e-14;
    const SinkhornResult res = sinkhorn_divergence(a, 16, b, 16, 3, strict);
    CHECK_FALSE(res.converged);
    CHECK(res.final_violation > 0.0);
}

TEST_CASE("patch pyramid and its adjoint satisfy the inner-product identity") {
    Rng rng(61);
    const int cases[][4] = {{12, 12, 1, 3}, {13, 11, 2, 3}, {16, 16, 2, 5}, {21, 17, 3, 3}};
    for (const auto& cs : cases) {
        const int h = cs[0], w = cs[1], levels = cs[2], k = cs[3];
        const Image u = test::random_image(h, w, rng.next());
        const PatchFeatures fu = extract_features(u, levels, k);
        std::vector<std::vector<double>> v(levels);
        double lhs = 0.0;
        for (int l = 0; l < levels; ++l) {
            v[l].resize(fu.levels[l].size());
            for (double& e : v[l]) e = rng.uniform_signed();
            lhs += test::dot(fu.levels[l], v[l]);
        }
        const Image adj = extract_features_adjoint(v, h, w, 3, levels, k);
        const double rhs = test::dot(u.data, adj.data);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
    }
}

TEST_CASE("texture loss vanishes for an identical image") {
    const Image img = test::random_image(12, 12, 71);
    OTConfig cfg;
    cfg.patch_size = 3;
    cfg.n_levels = 1;
    cfg.n_subsample = 1 << 20;
    const PatchFeatures target = extract_features(img, cfg.n_levels, cfg.patch_size);
    const TextureLossResult res = texture_loss(img, target, cfg, 0);
    CHECK(std::abs(res.value) < 1e-6);
}

TEST_CASE("texture loss gradient matches central finite differences") {
    const Image target = test::stripe_image(12, 4);
    Image gen = test::random_image(12, 12, 81);
    OTConfig cfg;
    cfg.patch_size = 3;
    cfg.n_levels = 1;
    cfg.n_subsample = 1 << 20;
    cfg.tolerance = 1e-11;
    cfg.max_iters = 5000;
    const PatchFeatures feats = extract_features(target, cfg.n_levels, cfg.patch_size);
    const uint64_t seed = 12345;
    const TextureLossResult base = texture_loss(gen, feats, cfg, seed);

    Rng rng(91);
    const double h = 1e-6;
    for (int trial = 0; trial < 4; ++trial) {
        std::vector<double> dir(gen.size());
        for (double& v : dir) v = rng.uniform_signed();
        Image plus = gen, minus = gen;
        for (size_t i = 0; i < gen.size(); ++i) {
            plus.data[i] += h * dir[i];
            minus.data[i] -= h * dir[i];
        }
        const double fd = (texture_loss(plus, feats, cfg, seed).value -
                           texture_loss(minus, feats, cfg, seed).value) / (2 * h);
        const double analytic = test::dot(base.grads[0].data, dir);
        CHECK(test::rel_err(analytic, fd) < 1e-3);
    }
}
