#pragma once

#include <cstddef>
#include <vector>

namespace unca {

// Dense row-major image, values nominally in [0, 1] but not clamped by the
// type itself (loss gradients and sharpened pyramids go out of range).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;  // index (y, x, c)

    Image() = default;
    Image(int h, int w, int c) : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, 0.0) {}

    double& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

// Bilinear resample to (new_h, new_w). Used by the CLI to bring targets to
// the configured training size.
Image resize_bilinear(const Image& src, int new_h, int new_w);

}  // namespace unca
