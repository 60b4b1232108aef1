#include "unca/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace unca {

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + path);
}

uint32_t be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | p[3];
}

void push_be32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
}

std::vector<uint8_t> zlib_inflate(const uint8_t* data, size_t len, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf out_len = static_cast<uLongf>(expected);
    int rc = uncompress(out.data(), &out_len, data, static_cast<uLong>(len));
    if (rc != Z_OK || out_len != expected)
        throw std::runtime_error("PNG: corrupt compressed data");
    return out;
}

std::vector<uint8_t> zlib_deflate(const std::vector<uint8_t>& data) {
    uLongf bound = compressBound(static_cast<uLong>(data.size()));
    std::vector<uint8_t> out(bound);
    int rc = compress2(out.data(), &bound, data.data(),
                       static_cast<uLong>(data.size()), Z_DEFAULT_COMPRESSION);
    if (rc != Z_OK) throw std::runtime_error("PNG: deflate failed");
    out.resize(bound);
    return out;
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

constexpr uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

}  // namespace

Image read_png(const std::string& path) {
    const std::vector<uint8_t> file = read_file(path);
    if (file.size() < 8 || std::memcmp(file.data(), kPngSig, 8) != 0)
        throw std::runtime_error("PNG: bad signature in " + path);

    uint32_t w = 0, h = 0;
    int bit_depth = 0, color_type = -1, interlace = 0;
    std::vector<uint8_t> idat;
    std::vector<uint8_t> palette;  // 3 bytes per entry
    bool seen_ihdr = false, seen_iend = false;

    size_t pos = 8;
    while (pos + 8 <= file.size() && !seen_iend) {
        const uint32_t len = be32(&file[pos]);
        if (pos + 12 + len > file.size()) throw std::runtime_error("PNG: truncated chunk");
        const char* type = reinterpret_cast<const char*>(&file[pos + 4]);
        const uint8_t* body = &file[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("PNG: bad IHDR");
            w = be32(body);
            h = be32(body + 4);
            bit_depth = body[8];
            color_type = body[9];
            interlace = body[12];
            seen_ihdr = true;
        } else if (std::memcmp(type, "PLTE", 4) == 0) {
            palette.assign(body, body + len);
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), body, body + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || w == 0 || h == 0) throw std::runtime_error("PNG: missing IHDR");
    if (bit_depth != 8) throw std::runtime_error("PNG: only 8-bit depth supported");
    if (interlace != 0) throw std::runtime_error("PNG: interlaced files not supported");

    int nch = 0;
    switch (color_type) {
        case 0: nch = 1; break;  // gray
        case 2: nch = 3; break;  // rgb
        case 3: nch = 1; break;  // palette index
        case 4: nch = 2; break;  // gray + alpha
        case 6: nch = 4; break;  // rgba
        default: throw std::runtime_error("PNG: unsupported color type");
    }
    if (color_type == 3 && palette.empty()) throw std::runtime_error("PNG: missing PLTE");

    const size_t stride = static_cast<size_t>(w) * nch;
    const size_t raw_len = (stride + 1) * h;
    std::vector<uint8_t> raw = zlib_inflate(idat.data(), idat.size(), raw_len);

    // Undo per-row filters in place.
    std::vector<uint8_t> pix(stride * h);
    for (uint32_t y = 0; y < h; ++y) {
        const uint8_t filter = raw[y * (stride + 1)];
        const uint8_t* src = &raw[y * (stride + 1) + 1];
        uint8_t* cur = &pix[y * stride];
        const uint8_t* up = y > 0 ? &pix[(y - 1) * stride] : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<size_t>(nch) ? cur[i - nch] : 0;
            const int b = up ? up[i] : 0;
            const int c = (up && i >= static_cast<size_t>(nch)) ? up[i - nch] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw std::runtime_error("PNG: bad filter byte");
            }
            cur[i] = static_cast<uint8_t>(v & 0xff);
        }
    }

    Image img(static_cast<int>(h), static_cast<int>(w), 3);
    for (uint32_t y = 0; y < h; ++y) {
        for (uint32_t x = 0; x < w; ++x) {
            const uint8_t* p = &pix[y * stride + static_cast<size_t>(x) * nch];
            uint8_t r, g, b;
            switch (color_type) {
                case 0: case 4: r = g = b = p[0]; break;
                case 2: case 6: r = p[0]; g = p[1]; b = p[2]; break;
                default: {  // palette
                    const size_t idx = static_cast<size_t>(p[0]) * 3;
                    if (idx + 2 >= palette.size()) throw std::runtime_error("PNG: palette index out of range");
                    r = palette[idx]; g = palette[idx + 1]; b = palette[idx + 2];
                }
            }
            img.at(static_cast<int>(y), static_cast<int>(x), 0) = r / 255.0;
            img.at(static_cast<int>(y), static_cast<int>(x), 1) = g / 255.0;
            img.at(static_cast<int>(y), static_cast<int>(x), 2) = b / 255.0;
        }
    }
    return img;
}

void write_png(const Image& img, const std::string& path) {
    if (img.channels < 3) throw std::invalid_argument("write_png: need 3 channels");
    const size_t stride = static_cast<size_t>(img.width) * 3;
    std::vector<uint8_t> raw((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw[y * (stride + 1)] = 0;  // filter: none
        uint8_t* row = &raw[y * (stride + 1) + 1];
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
                row[x * 3 + c] = static_cast<uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    const std::vector<uint8_t> compressed = zlib_deflate(raw);

    std::vector<uint8_t> out(kPngSig, kPngSig + 8);
    auto chunk = [&out](const char* type, const std::vector<uint8_t>& body) {
        push_be32(out, static_cast<uint32_t>(body.size()));
        const size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), body.begin(), body.end());
        const uint32_t crc = crc32(0, &out[start], static_cast<uInt>(out.size() - start));
        push_be32(out, crc);
    };

    std::vector<uint8_t> ihdr;
    push_be32(ihdr, static_cast<uint32_t>(img.width));
    push_be32(ihdr, static_cast<uint32_t>(img.height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // color type: RGB
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // no interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", compressed);
    chunk("IEND", {});
    write_file(path, out);
}

Image read_ppm(const std::string& path) {
    const std::vector<uint8_t> file = read_file(path);
    size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < file.size()) {
            if (std::isspace(file[pos])) { ++pos; continue; }
            if (file[pos] == '#') { while (pos < file.size() && file[pos] != '\n') ++pos; continue; }
            break;
        }
        std::string t;
        while (pos < file.size() && !std::isspace(file[pos])) t.push_back(static_cast<char>(file[pos++]));
        return t;
    };
    if (token() != "P6") throw std::runtime_error("PPM: not a P6 file: " + path);
    const int w = std::stoi(token());
    const int h = std::stoi(token());
    const int maxval = std::stoi(token());
    if (w < 1 || h < 1) throw std::runtime_error("PPM: bad size");
    if (maxval != 255 && maxval != 65535) throw std::runtime_error("PPM: unsupported maxval");
    ++pos;  // single whitespace after maxval
    const int bytes_per = maxval > 255 ? 2 : 1;
    const size_t need = static_cast<size_t>(w) * h * 3 * bytes_per;
    if (file.size() - pos < need) throw std::runtime_error("PPM: truncated pixel data");
    Image img(h, w, 3);
    const uint8_t* p = &file[pos];
    for (size_t i = 0; i < static_cast<size_t>(w) * h * 3; ++i) {
        uint32_t v;
        if (bytes_per == 2) { v = (uint32_t(p[0]) << 8) | p[1]; p += 2; }
        else { v = *p++; }
        img.data[i] = static_cast<double>(v) / maxval;
    }
    return img;
}

void write_ppm(const Image& img, const std::string& path, int maxval) {
    if (maxval != 255 && maxval != 65535) throw std::invalid_argument("PPM: maxval must be 255 or 65535");
    std::vector<uint8_t> out;
    const std::string header = "P6\n" + std::to_string(img.width) + " " +
                               std::to_string(img.height) + "\n" + std::to_string(maxval) + "\n";
    out.insert(out.end(), header.begin(), header.end());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
                const uint32_t q = static_cast<uint32_t>(std::lround(v * maxval));
                if (maxval > 255) out.push_back(uint8_t(q >> 8));
                out.push_back(uint8_t(q & 0xff));
            }
    write_file(path, out);
}

}  // namespace unca
