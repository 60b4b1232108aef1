#include "unca/pyramid.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace unca {

namespace {

constexpr double kTap[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

// Mirror index into [0, n): ... 2 1 | 0 1 2 ... n-1 | n-1 n-2 ...
int reflect(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// One separable pass along an axis. Gather form.
Image blur_axis(const Image& img, bool along_x) {
    Image out(img.height, img.width, img.channels);
    const int n = along_x ? img.width : img.height;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int t = -2; t <= 2; ++t) {
                    const int i = reflect((along_x ? x : y) + t, n);
                    acc += kTap[t + 2] * (along_x ? img.at(y, i, c) : img.at(i, x, c));
                }
                out.at(y, x, c) = acc;
            }
    return out;
}

// Scatter form of the same pass: exact transpose of blur_axis.
Image blur_axis_adjoint(const Image& g, bool along_x) {
    Image out(g.height, g.width, g.channels);
    const int n = along_x ? g.width : g.height;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            for (int c = 0; c < g.channels; ++c) {
                const double v = g.at(y, x, c);
                for (int t = -2; t <= 2; ++t) {
                    const int i = reflect((along_x ? x : y) + t, n);
                    if (along_x) out.at(y, i, c) += kTap[t + 2] * v;
                    else out.at(i, x, c) += kTap[t + 2] * v;
                }
            }
    return out;
}

}  // namespace

Image gaussian_blur5(const Image& img) {
    return blur_axis(blur_axis(img, true), false);
}

Image gaussian_blur5_adjoint(const Image& g) {
    return blur_axis_adjoint(blur_axis_adjoint(g, false), true);
}

Image sharpen(const Image& img) {
    const Image blurred = gaussian_blur5(img);
    Image out(img.height, img.width, img.channels);
    for (size_t i = 0; i < img.size(); ++i)
        out.data[i] = 3.0 * img.data[i] - 2.0 * blurred.data[i];
    return out;
}

Image sharpen_adjoint(const Image& g) {
    const Image b = gaussian_blur5_adjoint(g);
    Image out(g.height, g.width, g.channels);
    for (size_t i = 0; i < g.size(); ++i)
        out.data[i] = 3.0 * g.data[i] - 2.0 * b.data[i];
    return out;
}

Image downscale2(const Image& img) {
    const Image blurred = gaussian_blur5(img);
    const int oh = (img.height + 1) / 2, ow = (img.width + 1) / 2;
    Image out(oh, ow, img.channels);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = blurred.at(2 * y, 2 * x, c);
    return out;
}

Image downscale2_adjoint(const Image& g, int out_h, int out_w) {
    Image full(out_h, out_w, g.channels);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            for (int c = 0; c < g.channels; ++c)
                full.at(2 * y, 2 * x, c) = g.at(y, x, c);
    return gaussian_blur5_adjoint(full);
}

std::vector<double> patchify(const Image& img, int patch_size) {
    const int K = patch_size;
    if (img.height < K || img.width < K)
        throw std::invalid_argument("patchify: image smaller than patch");
    const int ph = img.height - K + 1, pw = img.width - K + 1;
    const int row_len = K * K * img.channels;
    std::vector<double> rows(static_cast<size_t>(ph) * pw * row_len);
    size_t o = 0;
    for (int r = 0; r < ph; ++r)
        for (int c = 0; c < pw; ++c)
            for (int dy = 0; dy < K; ++dy)
                for (int dx = 0; dx < K; ++dx)
                    for (int ch = 0; ch < img.channels; ++ch)
                        rows[o++] = img.at(r + dy, c + dx, ch);
    return rows;
}

Image patchify_adjoint(const std::vector<double>& rows, int h, int w, int channels, int patch_size) {
    const int K = patch_size;
    const int ph = h - K + 1, pw = w - K + 1;
    if (rows.size() != static_cast<size_t>(ph) * pw * K * K * channels)
        throw std::invalid_argument("patchify_adjoint: size mismatch");
    Image out(h, w, channels);
    size_t o = 0;
    for (int r = 0; r < ph; ++r)
        for (int c = 0; c < pw; ++c)
            for (int dy = 0; dy < K; ++dy)
                for (int dx = 0; dx < K; ++dx)
                    for (int ch = 0; ch < channels; ++ch)
                        out.at(r + dy, c + dx, ch) += rows[o++];
    return out;
}

PatchFeatures extract_features(const Image& img, int n_levels, int patch_size) {
    if (n_levels < 1) throw std::invalid_argument("extract_features: n_levels must be >= 1");
    if (patch_size < 1) throw std::invalid_argument("extract_features: patch_size must be >= 1");
    // Validate the whole pyramid up front.
    {
        int h = img.height, w = img.width;
        for (int l = 0; l < n_levels; ++l) {
            if (h < patch_size || w < patch_size)
                throw std::invalid_argument(
                    "extract_features: level " + std::to_string(l + 1) + " is " +
                    std::to_string(h) + "x" + std::to_string(w) +
                    ", smaller than patch size " + std::to_string(patch_size));
            h = (h + 1) / 2;
            w = (w + 1) / 2;
        }
    }
    PatchFeatures feats;
    feats.patch_size = patch_size;
    feats.n_levels = n_levels;
    feats.channels = img.channels;
    Image level = img;
    for (int l = 0; l < n_levels; ++l) {
        const Image sharp = sharpen(level);
        feats.levels.push_back(patchify(sharp, patch_size));
        feats.rows_per_level.push_back((sharp.height - patch_size + 1) *
                                       (sharp.width - patch_size + 1));
        if (l + 1 < n_levels) level = downscale2(level);
    }
    return feats;
}

Image extract_features_adjoint(const std::vector<std::vector<double>>& per_level,
                               int h, int w, int channels, int n_levels, int patch_size) {
    if (static_cast<int>(per_level.size()) != n_levels)
        throw std::invalid_argument("extract_features_adjoint: level count mismatch");
    std::vector<std::pair<int, int>> sizes;
    {
        int lh = h, lw = w;
        for (int l = 0; l < n_levels; ++l) {
            sizes.emplace_back(lh, lw);
            lh = (lh + 1) / 2;
            lw = (lw + 1) / 2;
        }
    }
    // Walk the pyramid from the deepest level back up; each level adds the
    // sharpen/patchify adjoint of its own rows before the upsample adjoint.
    Image grad;  // gradient wrt level image l, built from below
    for (int l = n_levels - 1; l >= 0; --l) {
        const auto [lh, lw] = sizes[l];
        Image g = sharpen_adjoint(patchify_adjoint(per_level[l], lh, lw, channels, patch_size));
        if (l + 1 < n_levels) {
            const Image up = downscale2_adjoint(grad, lh, lw);
            for (size_t i = 0; i < g.size(); ++i) g.data[i] += up.data[i];
        }
        grad = std::move(g);
    }
    return grad;
}

std::vector<int> subsample_indices(int num_rows, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("subsample: n must be >= 1");
    std::vector<int> idx(num_rows);
    std::iota(idx.begin(), idx.end(), 0);
    if (num_rows <= n) return idx;
    // Partial Fisher-Yates: first n entries are the sample.
    for (int i = 0; i < n; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(0, static_cast<uint64_t>(num_rows - 1 - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
}

std::vector<double> subsample(const std::vector<double>& matrix, int row_len, int n, Rng& rng) {
    const int num_rows = static_cast<int>(matrix.size() / row_len);
    const std::vector<int> sel = subsample_indices(num_rows, n, rng);
    std::vector<double> out(sel.size() * static_cast<size_t>(row_len));
    for (size_t i = 0; i < sel.size(); ++i)
        std::copy_n(matrix.begin() + static_cast<size_t>(sel[i]) * row_len, row_len,
                    out.begin() + i * row_len);
    return out;
}

}  // namespace unca
