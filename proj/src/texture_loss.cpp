#include "unca/texture_loss.hpp"

#include <stdexcept>

#include "unca/rng.hpp"

namespace unca {

TextureLossResult texture_loss(const std::vector<Image>& gen_images,
                               const PatchFeatures& target,
                               const OTConfig& cfg, uint64_t sample_seed) {
    if (gen_images.empty()) throw std::invalid_argument("texture_loss: empty batch");
    if (target.patch_size != cfg.patch_size || target.n_levels != cfg.n_levels)
        throw std::invalid_argument("texture_loss: target features do not match config");
    const int batch = static_cast<int>(gen_images.size());
    const int row_len = target.row_length();

    std::vector<PatchFeatures> gen_feats;
    gen_feats.reserve(batch);
    for (const Image& img : gen_images)
        gen_feats.push_back(extract_features(img, cfg.n_levels, cfg.patch_size));

    TextureLossResult res;
    // Row gradients per (element, level), filled by the per-level scatter.
    std::vector<std::vector<std::vector<double>>> row_grads(batch);
    for (int e = 0; e < batch; ++e) {
        row_grads[e].resize(cfg.n_levels);
        for (int l = 0; l < cfg.n_levels; ++l)
            row_grads[e][l].assign(gen_feats[e].levels[l].size(), 0.0);
    }

    Rng rng(sample_seed);
    for (int l = 0; l < cfg.n_levels; ++l) {
        // Pool this level's rows across the batch.
        int total_rows = 0;
        for (int e = 0; e < batch; ++e) total_rows += gen_feats[e].rows_per_level[l];
        const std::vector<int> sel = subsample_indices(total_rows, cfg.n_subsample, rng);
        const int n = static_cast<int>(sel.size());
        std::vector<double> x(static_cast<size_t>(n) * row_len);
        for (int i = 0; i < n; ++i) {
            int idx = sel[i], e = 0;
            while (idx >= gen_feats[e].rows_per_level[l]) idx -= gen_feats[e].rows_per_level[l], ++e;
            std::copy_n(gen_feats[e].levels[l].begin() + static_cast<size_t>(idx) * row_len,
                        row_len, x.begin() + static_cast<size_t>(i) * row_len);
        }
        const std::vector<double> y =
            subsample(target.levels[l], row_len, cfg.n_subsample, rng);
        const int m = static_cast<int>(y.size()) / row_len;

        const SinkhornResult ot = sinkhorn_divergence(x, n, y, m, row_len, cfg);
        res.value += ot.value;
        res.converged = res.converged && ot.converged;

        for (int i = 0; i < n; ++i) {
            int idx = sel[i], e = 0;
            while (idx >= gen_feats[e].rows_per_level[l]) idx -= gen_feats[e].rows_per_level[l], ++e;
            double* dst = &row_grads[e][l][static_cast<size_t>(idx) * row_len];
            const double* src = &ot.grad_x[static_cast<size_t>(i) * row_len];
            for (int k = 0; k < row_len; ++k) dst[k] += src[k];
        }
    }

    res.grads.reserve(batch);
    for (int e = 0; e < batch; ++e)
        res.grads.push_back(extract_features_adjoint(
            row_grads[e], gen_images[e].height, gen_images[e].width,
            gen_images[e].channels, cfg.n_levels, cfg.patch_size));
    return res;
}

TextureLossResult texture_loss(const Image& gen_image, const PatchFeatures& target,
                               const OTConfig& cfg, uint64_t sample_seed) {
    return texture_loss(std::vector<Image>{gen_image}, target, cfg, sample_seed);
}

}  // namespace unca
