#include "unca/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace unca {

namespace {

constexpr char kMagic[4] = {'u', 'N', 'C', 'A'};
constexpr uint8_t kVersion = 1;

void push_f32_le(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    out.push_back(uint8_t(bits));
    out.push_back(uint8_t(bits >> 8));
    out.push_back(uint8_t(bits >> 16));
    out.push_back(uint8_t(bits >> 24));
}

float read_f32_le(const uint8_t* p) {
    const uint32_t bits = uint32_t(p[0]) | (uint32_t(p[1]) << 8) |
                          (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + path);
}

std::vector<uint8_t> header(const ModelConfig& config, uint8_t mode) {
    std::vector<uint8_t> out(kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.push_back(mode);
    out.push_back(static_cast<uint8_t>(config.n_lap));
    out.push_back(static_cast<uint8_t>(config.n_x));
    out.push_back(static_cast<uint8_t>(config.n_y));
    return out;
}

}  // namespace

void save_model(const Params& params, const ModelConfig& config, const std::string& path) {
    std::vector<uint8_t> out = header(config, 0);
    for (double v : params.w) push_f32_le(out, static_cast<float>(v));
    for (double v : params.b) push_f32_le(out, static_cast<float>(v));
    write_bytes(path, out);
}

void save_model(const QuantizedModel& qm, const std::string& path) {
    std::vector<uint8_t> out = header(qm.config, 1);
    push_f32_le(out, static_cast<float>(qm.w_scale));
    push_f32_le(out, static_cast<float>(qm.b_scale));
    for (int8_t c : qm.w_q) out.push_back(static_cast<uint8_t>(c));
    for (int8_t c : qm.b_q) out.push_back(static_cast<uint8_t>(c));
    write_bytes(path, out);
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < kFloatHeaderBytes)
        throw BadLengthError("model file too short: " + path);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw BadMagicError("bad magic in " + path);
    if (bytes[4] != kVersion)
        throw BadVersionError("unsupported model version " + std::to_string(bytes[4]));
    const uint8_t mode = bytes[5];
    if (mode > 1) throw std::runtime_error("bad mode byte in " + path);

    ModelFile mf;
    mf.config = make_config(bytes[6], bytes[7], bytes[8]);
    const size_t n_params = static_cast<size_t>(mf.config.n_params);

    if (mode == 0) {
        const size_t expect = kFloatHeaderBytes + 4 * n_params;
        if (bytes.size() != expect)
            throw BadLengthError("model file length " + std::to_string(bytes.size()) +
                                 ", expected " + std::to_string(expect));
        mf.params = Params(mf.config.channels);
        const uint8_t* p = bytes.data() + kFloatHeaderBytes;
        for (size_t i = 0; i < mf.params.w.size(); ++i, p += 4)
            mf.params.w[i] = read_f32_le(p);
        for (size_t i = 0; i < mf.params.b.size(); ++i, p += 4)
            mf.params.b[i] = read_f32_le(p);
        return mf;
    }

    const size_t expect = kQuantHeaderBytes + n_params;
    if (bytes.size() != expect)
        throw BadLengthError("model file length " + std::to_string(bytes.size()) +
                             ", expected " + std::to_string(expect));
    mf.quantized = true;
    mf.qm.config = mf.config;
    mf.qm.w_scale = read_f32_le(bytes.data() + 9);
    mf.qm.b_scale = read_f32_le(bytes.data() + 13);
    const uint8_t* p = bytes.data() + kQuantHeaderBytes;
    const size_t wn = static_cast<size_t>(4) * mf.config.channels * mf.config.channels;
    mf.qm.w_q.resize(wn);
    mf.qm.b_q.resize(static_cast<size_t>(mf.config.channels));
    for (size_t i = 0; i < wn; ++i) mf.qm.w_q[i] = static_cast<int8_t>(p[i]);
    for (size_t i = 0; i < mf.qm.b_q.size(); ++i)
        mf.qm.b_q[i] = static_cast<int8_t>(p[wn + i]);
    mf.params = dequantize(mf.qm);
    return mf;
}

}  // namespace unca
