#include "unca/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unca {

Image resize_bilinear(const Image& src, int new_h, int new_w) {
    if (new_h < 1 || new_w < 1) throw std::invalid_argument("resize: bad size");
    if (src.height == new_h && src.width == new_w) return src;
    Image dst(new_h, new_w, src.channels);
    const double sy = static_cast<double>(src.height) / new_h;
    const double sx = static_cast<double>(src.width) / new_w;
    for (int y = 0; y < new_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < src.channels; ++c) {
                const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
                const double bot = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
                dst.at(y, x, c) = top * (1 - wy) + bot * wy;
            }
        }
    }
    return dst;
}

}  // namespace unca
