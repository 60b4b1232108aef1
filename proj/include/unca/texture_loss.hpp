#pragma once

#include <cstdint>
#include <vector>

#include "unca/image.hpp"
#include "unca/pyramid.hpp"
#include "unca/sinkhorn.hpp"

namespace unca {

struct TextureLossResult {
    double value = 0.0;
    std::vector<Image> grads;  // one per generated image, H x W x 3
    bool converged = true;     // all Sinkhorn solves met tolerance
};

// Sum over pyramid levels of the OT divergence between subsampled
// generated-patch rows and subsampled target-patch rows. The batch form
// pools patch rows of all generated images at each level before
// subsampling, so one divergence per level covers the whole batch.
// Gradients flow back through the subsample selection, the patch
// flattening (scatter-add) and the sharpen/downscale chain.
// sample_seed fixes the row selection; the same seed reproduces the same
// loss surface, which finite-difference checks rely on.
TextureLossResult texture_loss(const std::vector<Image>& gen_images,
                               const PatchFeatures& target,
                               const OTConfig& cfg, uint64_t sample_seed);

// Single-image convenience wrapper.
TextureLossResult texture_loss(const Image& gen_image, const PatchFeatures& target,
                               const OTConfig& cfg, uint64_t sample_seed);

}  // namespace unca
