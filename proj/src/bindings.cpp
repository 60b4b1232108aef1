#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "unca/codegen.hpp"
#include "unca/image_io.hpp"
#include "unca/model_io.hpp"
#include "unca/nca.hpp"
#include "unca/quantize.hpp"
#include "unca/texture_loss.hpp"
#include "unca/trainer.hpp"

namespace py = pybind11;
using namespace unca;

namespace {

Grid grid_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) throw std::invalid_argument("grid array must be (H, W, C)");
    Grid g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
           static_cast<int>(a.shape(2)));
    std::memcpy(g.states.data(), a.data(), sizeof(double) * g.states.size());
    return g;
}

py::array_t<double> grid_to_array(const Grid& g) {
    py::array_t<double> a({g.height, g.width, g.channels});
    std::memcpy(a.mutable_data(), g.states.data(), sizeof(double) * g.states.size());
    return a;
}

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) throw std::invalid_argument("image array must be (H, W, C)");
    Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
              static_cast<int>(a.shape(2)));
    std::memcpy(img.data.data(), a.data(), sizeof(double) * img.size());
    return img;
}

py::array_t<double> image_to_array(const Image& img) {
    py::array_t<double> a({img.height, img.width, img.channels});
    std::memcpy(a.mutable_data(), img.data.data(), sizeof(double) * img.size());
    return a;
}

Params params_from_arrays(const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
                          const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
    if (w.ndim() != 2 || b.ndim() != 1) throw std::invalid_argument("expected W (4C, C) and b (C,)");
    const int c = static_cast<int>(b.shape(0));
    if (w.shape(0) != 4 * c || w.shape(1) != c)
        throw std::invalid_argument("W must have shape (4C, C)");
    Params p(c);
    std::memcpy(p.w.data(), w.data(), sizeof(double) * p.w.size());
    std::memcpy(p.b.data(), b.data(), sizeof(double) * p.b.size());
    return p;
}

py::tuple params_to_arrays(const Params& p) {
    py::array_t<double> w({4 * p.channels, p.channels});
    py::array_t<double> b(p.channels);
    std::memcpy(w.mutable_data(), p.w.data(), sizeof(double) * p.w.size());
    std::memcpy(b.mutable_data(), p.b.data(), sizeof(double) * p.b.size());
    return py::make_tuple(w, b);
}

OTConfig ot_from_kwargs(int patch_size, int n_levels, int n_subsample, double eps_rel,
                        int max_iters, double tolerance, bool debiased) {
    OTConfig ot;
    ot.patch_size = patch_size;
    ot.n_levels = n_levels;
    ot.n_subsample = n_subsample;
    ot.epsilon = eps_rel;
    ot.max_iters = max_iters;
    ot.tolerance = tolerance;
    ot.debiased = debiased;
    return ot;
}

}  // namespace

PYBIND11_MODULE(_unca, m) {
    m.doc() = "Compact texture cellular automata: training, quantization and code emission.";

    py::class_<ModelConfig>(m, "ModelConfig")
        .def_readonly("n_lap", &ModelConfig::n_lap)
        .def_readonly("n_x", &ModelConfig::n_x)
        .def_readonly("n_y", &ModelConfig::n_y)
        .def_readonly("channels", &ModelConfig::channels)
        .def_readonly("n_params", &ModelConfig::n_params);

    m.def("make_config", &make_config, py::arg("n_lap"), py::arg("n_x"), py::arg("n_y"));

    m.def("seed_grid",
          [](int height, int width, const ModelConfig& cfg, uint64_t seed) {
              Rng rng(seed);
              return grid_to_array(seed_grid(height, width, cfg, rng));
          },
          py::arg("height"), py::arg("width"), py::arg("config"), py::arg("seed") = 0);

    m.def("step",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& grid,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
             const ModelConfig& cfg) {
              return grid_to_array(step(grid_from_array(grid), params_from_arrays(w, b), cfg));
          },
          py::arg("grid"), py::arg("w"), py::arg("b"), py::arg("config"));

    m.def("rollout",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& grid,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
             const ModelConfig& cfg, int n_steps) {
              return grid_to_array(rollout(grid_from_array(grid), params_from_arrays(w, b), cfg, n_steps));
          },
          py::arg("grid"), py::arg("w"), py::arg("b"), py::arg("config"), py::arg("n_steps"));

    m.def("to_rgb",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& grid) {
              return image_to_array(to_rgb(grid_from_array(grid)));
          },
          py::arg("grid"));

    m.def("extract_features",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
             int n_levels, int patch_size) {
              const PatchFeatures f = extract_features(image_from_array(image), n_levels, patch_size);
              py::list levels;
              for (int l = 0; l < f.n_levels; ++l) {
                  py::array_t<double> a({f.rows_per_level[l], f.row_length()});
                  std::memcpy(a.mutable_data(), f.levels[l].data(),
                              sizeof(double) * f.levels[l].size());
                  levels.append(a);
              }
              return levels;
          },
          py::arg("image"), py::arg("n_levels"), py::arg("patch_size"));

    m.def("sinkhorn_divergence",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
             double eps_rel, int max_iters, double tolerance, bool debiased) {
              if (x.ndim() != 2 || y.ndim() != 2 || x.shape(1) != y.shape(1))
                  throw std::invalid_argument("expected point matrices (n, d) and (m, d)");
              const int n = static_cast<int>(x.shape(0));
              const int m_rows = static_cast<int>(y.shape(0));
              const int d = static_cast<int>(x.shape(1));
              std::vector<double> xv(x.data(), x.data() + n * d);
              std::vector<double> yv(y.data(), y.data() + m_rows * d);
              OTConfig cfg = ot_from_kwargs(0, 0, 0, eps_rel, max_iters, tolerance, debiased);
              const SinkhornResult r = sinkhorn_divergence(xv, n, yv, m_rows, d, cfg);
              py::array_t<double> grad({n, d});
              std::memcpy(grad.mutable_data(), r.grad_x.data(), sizeof(double) * r.grad_x.size());
              return py::make_tuple(r.value, grad);
          },
          py::arg("x"), py::arg("y"), py::arg("eps_rel") = 0.05, py::arg("max_iters") = 200,
          py::arg("tolerance") = 1e-6, py::arg("debiased") = true);

    m.def("texture_loss",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& gen,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& target,
             int patch_size, int n_levels, int n_subsample, double eps_rel, int max_iters,
             double tolerance, uint64_t sample_seed) {
              OTConfig cfg = ot_from_kwargs(patch_size, n_levels, n_subsample, eps_rel,
                                            max_iters, tolerance, true);
              const PatchFeatures feats =
                  extract_features(image_from_array(target), n_levels, patch_size);
              const TextureLossResult r =
                  texture_loss(image_from_array(gen), feats, cfg, sample_seed);
              return py::make_tuple(r.value, image_to_array(r.grads[0]));
          },
          py::arg("gen_image"), py::arg("target_image"), py::arg("patch_size") = 5,
          py::arg("n_levels") = 4, py::arg("n_subsample") = 2048, py::arg("eps_rel") = 0.05,
          py::arg("max_iters") = 200, py::arg("tolerance") = 1e-6, py::arg("sample_seed") = 0);

    m.def("train",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& target,
             const ModelConfig& cfg, int n_train, int n_batch, int n_pool, int seed_rate,
             int n_steps_min, int n_steps_max, int grid_size, double learning_rate,
             int patch_size, int n_levels, int n_subsample, double eps_rel,
             bool disable_step_grad_norm, bool disable_overflow_loss, uint64_t seed) {
              TrainConfig tc;
              tc.n_train = n_train;
              tc.n_batch = n_batch;
              tc.n_pool = n_pool;
              tc.seed_rate = seed_rate;
              tc.n_steps_min = n_steps_min;
              tc.n_steps_max = n_steps_max;
              tc.grid_size = grid_size;
              tc.learning_rate = learning_rate;
              tc.disable_step_grad_norm = disable_step_grad_norm;
              tc.disable_overflow_loss = disable_overflow_loss;
              tc.log_every = 0;
              OTConfig ot = ot_from_kwargs(patch_size, n_levels, n_subsample, eps_rel,
                                           200, 1e-6, true);
              Rng rng(seed);
              const TrainReport r = train(cfg, image_from_array(target), tc, ot, rng);
              py::dict out;
              out["texture_loss"] = r.texture_loss;
              out["overflow_loss"] = r.overflow_loss;
              out["grad_norm"] = r.grad_norm;
              out["max_abs_state"] = r.max_abs_state;
              out["completed"] = r.completed;
              out["abort_iteration"] = r.abort_iteration;
              out["abort_reason"] = r.abort_reason;
              out["params"] = params_to_arrays(r.params);
              return out;
          },
          py::arg("target_image"), py::arg("config"), py::arg("n_train") = 4000,
          py::arg("n_batch") = 4, py::arg("n_pool") = 256, py::arg("seed_rate") = 4,
          py::arg("n_steps_min") = 32, py::arg("n_steps_max") = 64, py::arg("grid_size") = 96,
          py::arg("learning_rate") = 1e-3, py::arg("patch_size") = 5, py::arg("n_levels") = 4,
          py::arg("n_subsample") = 2048, py::arg("eps_rel") = 0.05,
          py::arg("disable_step_grad_norm") = false, py::arg("disable_overflow_loss") = false,
          py::arg("seed") = 0);

    m.def("optimize_pixels",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& target,
             int patch_size, int n_levels, int n_subsample, double eps_rel, int iterations,
             double learning_rate, uint64_t seed) {
              OTConfig ot = ot_from_kwargs(patch_size, n_levels, n_subsample, eps_rel,
                                           200, 1e-6, true);
              Rng rng(seed);
              const PixelOptReport r =
                  optimize_pixels(image_from_array(target), ot, iterations, learning_rate, rng);
              return py::make_tuple(image_to_array(r.image), r.losses);
          },
          py::arg("target_image"), py::arg("patch_size") = 5, py::arg("n_levels") = 4,
          py::arg("n_subsample") = 2048, py::arg("eps_rel") = 0.05, py::arg("iterations") = 200,
          py::arg("learning_rate") = 1e-3, py::arg("seed") = 0);

    m.def("quantize",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
             const ModelConfig& cfg) {
              const QuantizedModel qm = quantize(params_from_arrays(w, b), cfg);
              py::dict out;
              py::array_t<int8_t> wq({4 * cfg.channels, cfg.channels});
              std::memcpy(wq.mutable_data(), qm.w_q.data(), qm.w_q.size());
              py::array_t<int8_t> bq(cfg.channels);
              std::memcpy(bq.mutable_data(), qm.b_q.data(), qm.b_q.size());
              out["w_q"] = wq;
              out["b_q"] = bq;
              out["w_scale"] = qm.w_scale;
              out["b_scale"] = qm.b_scale;
              return out;
          },
          py::arg("w"), py::arg("b"), py::arg("config"));

    m.def("save_model",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
             const ModelConfig& cfg, const std::string& path, bool quantized) {
              const Params p = params_from_arrays(w, b);
              if (quantized) save_model(quantize(p, cfg), path);
              else save_model(p, cfg, path);
          },
          py::arg("w"), py::arg("b"), py::arg("config"), py::arg("path"),
          py::arg("quantized") = false);

    m.def("load_model", [](const std::string& path) {
        const ModelFile mf = load_model(path);
        py::dict out;
        out["config"] = mf.config;
        out["quantized"] = mf.quantized;
        out["params"] = params_to_arrays(mf.params);
        return out;
    });

    m.def("emit_c",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
             const ModelConfig& cfg) { return emit_c(quantize(params_from_arrays(w, b), cfg)); },
          py::arg("w"), py::arg("b"), py::arg("config"));

    m.def("emit_glsl",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
             const ModelConfig& cfg) { return emit_glsl(quantize(params_from_arrays(w, b), cfg)); },
          py::arg("w"), py::arg("b"), py::arg("config"));

    m.def("read_png", [](const std::string& path) { return image_to_array(read_png(path)); });
    m.def("write_png",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
             const std::string& path) { write_png(image_from_array(img), path); });
}
