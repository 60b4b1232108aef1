#pragma once

#include <cstdint>
#include <vector>

#include "unca/image.hpp"
#include "unca/rng.hpp"

namespace unca {

// Flattened patch rows per pyramid level. Level l holds
// (H_l - K + 1) * (W_l - K + 1) rows of length K*K*channels, each a patch
// of the sharpened level image flattened (row, col, channel).
struct PatchFeatures {
    int patch_size = 0;
    int n_levels = 0;
    int channels = 0;
    std::vector<std::vector<double>> levels;  // row-major matrices
    std::vector<int> rows_per_level;

    int row_length() const { return patch_size * patch_size * channels; }
};

// Separable 5-tap binomial blur [1,4,6,4,1]/16 per axis, reflect padding
// (mirror including the edge sample).
Image gaussian_blur5(const Image& img);

// Exact transpose of gaussian_blur5 as a linear operator.
Image gaussian_blur5_adjoint(const Image& g);

// I + 2*(I - blur(I)); output not clamped.
Image sharpen(const Image& img);
Image sharpen_adjoint(const Image& g);

// Blur then keep even-index pixels; output is ceil(H/2) x ceil(W/2).
Image downscale2(const Image& img);

// Transpose: scatter to even indices of the full-size grid, then blur adjoint.
Image downscale2_adjoint(const Image& g, int out_h, int out_w);

// All overlapping KxK patches of img, flattened row-major into a
// rows x (K*K*channels) matrix. rows = (H-K+1)*(W-K+1), patch (r, c) at
// row index r*(W-K+1)+c.
std::vector<double> patchify(const Image& img, int patch_size);

// Transpose of patchify: scatter-add row gradients into image positions.
Image patchify_adjoint(const std::vector<double>& rows, int h, int w, int channels, int patch_size);

// Algorithm: per level sharpen, patchify, then downscale the unsharpened
// level image for the next level. Rejects configurations whose deepest
// level is smaller than the patch on either axis.
PatchFeatures extract_features(const Image& img, int n_levels, int patch_size);

// Transpose of extract_features (sharpen -> patchify chain across levels,
// with the downscale chain between levels). per_level[l] must have the
// same length as features level l would for an (h x w) image.
Image extract_features_adjoint(const std::vector<std::vector<double>>& per_level,
                               int h, int w, int channels, int n_levels, int patch_size);

// Uniform sample of n rows without replacement; all rows (in order) when
// the matrix has at most n. Returns selected row indices.
std::vector<int> subsample_indices(int num_rows, int n, Rng& rng);

// Convenience form returning the sampled rows themselves.
std::vector<double> subsample(const std::vector<double>& matrix, int row_len, int n, Rng& rng);

}  // namespace unca
