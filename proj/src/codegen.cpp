#include "unca/codegen.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>
#include <string>

namespace unca {

namespace {

std::string fmt_float(float v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    // Make sure the literal reads as floating point.
    if (!std::strpbrk(buf, ".eE")) std::strcat(buf, ".0");
    return buf;
}

std::string code_array(const std::vector<int8_t>& codes, int per_line) {
    std::ostringstream out;
    for (size_t i = 0; i < codes.size(); ++i) {
        if (i % per_line == 0) out << "\n    ";
        out << static_cast<int>(codes[i]);
        if (i + 1 < codes.size()) out << ", ";
    }
    out << "\n";
    return out.str();
}

std::string filter_table(const ModelConfig& cfg) {
    std::ostringstream out;
    for (int c = 0; c < cfg.channels; ++c) {
        if (c) out << ", ";
        out << (c < cfg.n_lap ? 0 : (c < cfg.n_lap + cfg.n_x ? 1 : 2));
    }
    return out.str();
}

}  // namespace

std::string emit_c(const QuantizedModel& qm) {
    const ModelConfig& cfg = qm.config;
    std::ostringstream out;
    out << "/* Procedural texture generator: " << cfg.n_params
        << "-parameter cellular automaton rule.\n"
        << " * Build:  cc -O2 -std=c99 -o gen gen.c -lm\n"
        << " * Run:    ./gen WIDTH HEIGHT STEPS SEED [OUT.ppm]\n"
        << " * Output: binary PPM (P6, 16-bit) of the RGB channels after STEPS updates.\n"
        << " */\n"
        << "#include <math.h>\n"
        << "#include <stdio.h>\n"
        << "#include <stdlib.h>\n"
        << "\n"
        << "#define C " << cfg.channels << "\n"
        << "\n"
        << "static const signed char W_Q[4 * C * C] = {" << code_array(qm.w_q, 16) << "};\n"
        << "static const signed char B_Q[C] = {" << code_array(qm.b_q, 16) << "};\n"
        << "static const float W_SCALE = " << fmt_float(static_cast<float>(qm.w_scale)) << "f;\n"
        << "static const float B_SCALE = " << fmt_float(static_cast<float>(qm.b_scale)) << "f;\n"
        << "\n"
        << "/* 0 = laplacian, 1 = sobel x, 2 = sobel y, one filter per channel */\n"
        << "static const int FILT[C] = {" << filter_table(cfg) << "};\n"
        << "static const float KERN[3][9] = {\n"
        << "    {1, 2, 1, 2, -12, 2, 1, 2, 1},\n"
        << "    {-1, 0, 1, -2, 0, 2, -1, 0, 1},\n"
        << "    {-1, -2, -1, 0, 0, 0, 1, 2, 1},\n"
        << "};\n"
        << "\n"
        << "static unsigned long long rng_state;\n"
        << "\n"
        << "static void rng_seed(unsigned long long seed) {\n"
        << "    seed += 0x9E3779B97F4A7C15ULL;\n"
        << "    seed = (seed ^ (seed >> 30)) * 0xBF58476D1CE4E5B9ULL;\n"
        << "    seed = (seed ^ (seed >> 27)) * 0x94D049BB133111EBULL;\n"
        << "    seed ^= seed >> 31;\n"
        << "    rng_state = seed ? seed : 1;\n"
        << "}\n"
        << "\n"
        << "static double rng_uniform(void) {\n"
        << "    unsigned long long x = rng_state;\n"
        << "    x ^= x >> 12;\n"
        << "    x ^= x << 25;\n"
        << "    x ^= x >> 27;\n"
        << "    rng_state = x;\n"
        << "    return (double)((x * 0x2545F4914F6CDD1DULL) >> 11) * (1.0 / 9007199254740992.0);\n"
        << "}\n"
        << "\n"
        << "static void ca_step(const float *src, float *dst, int h, int w) {\n"
        << "    for (int y = 0; y < h; ++y) {\n"
        << "        const int ys[3] = {(y + h - 1) % h, y, (y + 1) % h};\n"
        << "        for (int x = 0; x < w; ++x) {\n"
        << "            const int xs[3] = {(x + w - 1) % w, x, (x + 1) % w};\n"
        << "            const float *s = src + (y * w + x) * C;\n"
        << "            float p[2 * C];\n"
        << "            for (int c = 0; c < C; ++c) {\n"
        << "                const float *k = KERN[FILT[c]];\n"
        << "                float acc = 0.0f;\n"
        << "                for (int dy = 0; dy < 3; ++dy)\n"
        << "                    for (int dx = 0; dx < 3; ++dx)\n"
        << "                        acc += k[dy * 3 + dx] * src[(ys[dy] * w + xs[dx]) * C + c];\n"
        << "                p[c] = s[c];\n"
        << "                p[C + c] = acc;\n"
        << "            }\n"
        << "            float *o = dst + (y * w + x) * C;\n"
        << "            for (int j = 0; j < C; ++j) {\n"
        << "                float acc = s[j] + B_Q[j] * B_SCALE;\n"
        << "                for (int k = 0; k < 2 * C; ++k) {\n"
        << "                    acc += p[k] * (W_Q[k * C + j] * W_SCALE);\n"
        << "                    acc += fabsf(p[k]) * (W_Q[(2 * C + k) * C + j] * W_SCALE);\n"
        << "                }\n"
        << "                o[j] = acc;\n"
        << "            }\n"
        << "        }\n"
        << "    }\n"
        << "}\n"
        << "\n"
        << "static void write_ppm16(const float *grid, int h, int w, const char *path) {\n"
        << "    FILE *f = fopen(path, \"wb\");\n"
        << "    if (!f) { perror(path); exit(2); }\n"
        << "    fprintf(f, \"P6\\n%d %d\\n65535\\n\", w, h);\n"
        << "    for (int i = 0; i < h * w; ++i)\n"
        << "        for (int c = 0; c < 3; ++c) {\n"
        << "            float v = grid[i * C + c];\n"
        << "            if (v < 0.0f) v = 0.0f;\n"
        << "            if (v > 1.0f) v = 1.0f;\n"
        << "            unsigned q = (unsigned)(v * 65535.0f + 0.5f);\n"
        << "            fputc((int)(q >> 8), f);\n"
        << "            fputc((int)(q & 255u), f);\n"
        << "        }\n"
        << "    fclose(f);\n"
        << "}\n"
        << "\n"
        << "int main(int argc, char **argv) {\n"
        << "    if (argc < 5) {\n"
        << "        fprintf(stderr, \"usage: %s WIDTH HEIGHT STEPS SEED [OUT.ppm]\\n\", argv[0]);\n"
        << "        return 1;\n"
        << "    }\n"
        << "    const int w = atoi(argv[1]), h = atoi(argv[2]), steps = atoi(argv[3]);\n"
        << "    const char *out = argc > 5 ? argv[5] : \"out.ppm\";\n"
        << "    if (w < 3 || h < 3 || steps < 0) { fprintf(stderr, \"bad size/steps\\n\"); return 1; }\n"
        << "    float *a = malloc((size_t)h * w * C * sizeof(float));\n"
        << "    float *b = malloc((size_t)h * w * C * sizeof(float));\n"
        << "    if (!a || !b) { fprintf(stderr, \"out of memory\\n\"); return 2; }\n"
        << "    rng_seed(strtoull(argv[4], NULL, 10));\n"
        << "    for (int i = 0; i < h * w * C; ++i)\n"
        << "        a[i] = (float)(rng_uniform() - 0.5);\n"
        << "    for (int s = 0; s < steps; ++s) {\n"
        << "        ca_step(a, b, h, w);\n"
        << "        float *t = a; a = b; b = t;\n"
        << "    }\n"
        << "    write_ppm16(a, h, w, out);\n"
        << "    free(a);\n"
        << "    free(b);\n"
        << "    return 0;\n"
        << "}\n";
    return out.str();
}

std::string emit_glsl(const QuantizedModel& qm) {
    const ModelConfig& cfg = qm.config;
    const int C = cfg.channels;
    const int planes = (C + 3) / 4;
    std::ostringstream w_lit, b_lit;
    for (size_t i = 0; i < qm.w_q.size(); ++i) {
        if (i % 8 == 0) w_lit << "\n    ";
        w_lit << fmt_float(static_cast<float>(qm.w_q[i] * qm.w_scale));
        if (i + 1 < qm.w_q.size()) w_lit << ", ";
    }
    for (size_t i = 0; i < qm.b_q.size(); ++i) {
        if (i) b_lit << ", ";
        b_lit << fmt_float(static_cast<float>(qm.b_q[i] * qm.b_scale));
    }

    std::ostringstream out;
    out << "#version 300 es\n"
        << "// One update of a " << cfg.n_params << "-parameter texture CA.\n"
        << "// State: " << planes << " RGBA plane(s) tiled horizontally in a float\n"
        << "// texture, each uGridSize.x wide; channel c lives in plane c/4.\n"
        << "precision highp float;\n"
        << "precision highp int;\n"
        << "\n"
        << "uniform sampler2D uState;\n"
        << "uniform ivec2 uGridSize;\n"
        << "\n"
        << "out vec4 outColor;\n"
        << "\n"
        << "const int C = " << C << ";\n"
        << "const int FILT[" << C << "] = int[](" << filter_table(cfg) << ");\n"
        << "const float KLAP[9] = float[](1., 2., 1., 2., -12., 2., 1., 2., 1.);\n"
        << "const float KX[9] = float[](-1., 0., 1., -2., 0., 2., -1., 0., 1.);\n"
        << "const float KY[9] = float[](-1., -2., -1., 0., 0., 0., 1., 2., 1.);\n"
        << "\n"
        << "const float W[" << 4 * C * C << "] = float[](" << w_lit.str() << "\n);\n"
        << "const float B[" << C << "] = float[](" << b_lit.str() << ");\n"
        << "\n"
        << "float stateAt(ivec2 cell, int c) {\n"
        << "    int plane = c / 4;\n"
        << "    vec4 t = texelFetch(uState, ivec2(cell.x + plane * uGridSize.x, cell.y), 0);\n"
        << "    return t[c - plane * 4];\n"
        << "}\n"
        << "\n"
        << "ivec2 wrapCell(ivec2 cell) {\n"
        << "    return ivec2((cell.x + uGridSize.x) % uGridSize.x,\n"
        << "                 (cell.y + uGridSize.y) % uGridSize.y);\n"
        << "}\n"
        << "\n"
        << "void main() {\n"
        << "    ivec2 fc = ivec2(gl_FragCoord.xy);\n"
        << "    int plane = fc.x / uGridSize.x;\n"
        << "    ivec2 cell = ivec2(fc.x - plane * uGridSize.x, fc.y);\n"
        << "\n"
        << "    float p[2 * C];\n"
        << "    for (int c = 0; c < C; ++c) {\n"
        << "        p[c] = stateAt(cell, c);\n"
        << "        float acc = 0.0;\n"
        << "        for (int dy = -1; dy <= 1; ++dy)\n"
        << "            for (int dx = -1; dx <= 1; ++dx) {\n"
        << "                int tap = (dy + 1) * 3 + (dx + 1);\n"
        << "                float k = FILT[c] == 0 ? KLAP[tap] : (FILT[c] == 1 ? KX[tap] : KY[tap]);\n"
        << "                acc += k * stateAt(wrapCell(cell + ivec2(dx, dy)), c);\n"
        << "            }\n"
        << "        p[C + c] = acc;\n"
        << "    }\n"
        << "\n"
        << "    vec4 next = vec4(0.0);\n"
        << "    for (int j = 0; j < 4; ++j) {\n"
        << "        int c = plane * 4 + j;\n"
        << "        if (c >= C) break;\n"
        << "        float acc = p[c] + B[c];\n"
        << "        for (int k = 0; k < 2 * C; ++k) {\n"
        << "            acc += p[k] * W[k * C + c];\n"
        << "            acc += abs(p[k]) * W[(2 * C + k) * C + c];\n"
        << "        }\n"
        << "        next[j] = acc;\n"
        << "    }\n"
        << "    outColor = next;\n"
        << "}\n";
    return out.str();
}

}  // namespace unca
