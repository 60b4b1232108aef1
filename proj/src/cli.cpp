#include "unca/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "unca/codegen.hpp"
#include "unca/image_io.hpp"
#include "unca/model_io.hpp"
#include "unca/nca.hpp"
#include "unca/quantize.hpp"
#include "unca/texture_loss.hpp"
#include "unca/trainer.hpp"

namespace unca {

namespace {

ModelConfig parse_filters(const std::string& value) {
    int l = 0, x = 0, y = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(value);
    if (!(in >> l >> c1 >> x >> c2 >> y) || c1 != ',' || c2 != ',')
        throw std::invalid_argument("bad --filters value '" + value + "', expected L,X,Y");
    return make_config(l, x, y);
}

OTConfig ot_config(const RunConfig& rc) {
    OTConfig ot;
    ot.epsilon = rc.eps_rel;
    ot.max_iters = rc.sinkhorn_iters;
    ot.tolerance = rc.sinkhorn_tol;
    ot.n_subsample = rc.n_subsample;
    ot.patch_size = rc.patch_size;
    ot.n_levels = rc.n_levels;
    return ot;
}

TrainConfig train_config(const RunConfig& rc) {
    TrainConfig tc;
    tc.n_train = rc.iters;
    tc.n_batch = rc.batch;
    tc.n_pool = rc.pool;
    tc.seed_rate = rc.seed_rate;
    tc.n_steps_min = rc.steps_min;
    tc.n_steps_max = rc.steps_max;
    tc.grid_size = rc.grid;
    tc.learning_rate = rc.lr;
    tc.disable_step_grad_norm = rc.ablate_gradnorm;
    tc.disable_overflow_loss = rc.ablate_overflow;
    return tc;
}

std::string stem(const std::string& path) {
    const size_t dot = path.find_last_of('.');
    const size_t slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

void echo_config(const std::string& cmd, const RunConfig& rc) {
    std::ostringstream out;
    out << "resolved config (" << cmd << "):\n"
        << "  filters = " << rc.filters << "\n"
        << "  size = " << rc.size << "\n"
        << "  steps = " << rc.steps << "\n"
        << "  seed = " << rc.seed << "\n"
        << "  out = " << rc.out << "\n"
        << "  target = " << rc.target_lang << "\n"
        << "  frames = " << rc.frames << "\n"
        << "  K = " << rc.patch_size << "\n"
        << "  levels = " << rc.n_levels << "\n"
        << "  subsample = " << rc.n_subsample << "\n"
        << "  eps_rel = " << rc.eps_rel << "\n"
        << "  sinkhorn_iters = " << rc.sinkhorn_iters << "\n"
        << "  sinkhorn_tol = " << rc.sinkhorn_tol << "\n"
        << "  iters = " << rc.iters << "\n"
        << "  batch = " << rc.batch << "\n"
        << "  pool = " << rc.pool << "\n"
        << "  seed_rate = " << rc.seed_rate << "\n"
        << "  steps_min = " << rc.steps_min << "\n"
        << "  steps_max = " << rc.steps_max << "\n"
        << "  grid = " << rc.grid << "\n"
        << "  lr = " << rc.lr << "\n"
        << "  ablate_gradnorm = " << (rc.ablate_gradnorm ? 1 : 0) << "\n"
        << "  ablate_overflow = " << (rc.ablate_overflow ? 1 : 0) << "\n";
    std::cerr << out.str();
}

Image load_target(const std::string& path, int size) {
    Image img = read_png(path);
    if (size > 0 && (img.height != size || img.width != size))
        img = resize_bilinear(img, size, size);
    return img;
}

int cmd_train(const std::string& target_path, RunConfig rc) {
    if (rc.size == 0) rc.size = 128;
    if (rc.out.empty()) rc.out = "model.unca";
    echo_config("train", rc);
    const Image target = load_target(target_path, rc.size);
    const ModelConfig mc = parse_filters(rc.filters);
    Rng rng(rc.seed);

    TrainHooks hooks;
    hooks.checkpoint_every = std::max(1, rc.iters / 4);
    const std::string preview_stem = stem(rc.out);
    hooks.on_checkpoint = [&](int iteration, const Params& params) {
        Rng preview_rng(rc.seed ^ 0x70726576ull);
        Grid g = seed_grid(rc.grid, rc.grid, mc, preview_rng);
        g = rollout(g, params, mc, rc.steps);
        char name[32];
        std::snprintf(name, sizeof(name), "_it%05d.png", iteration);
        write_png(to_rgb(g), preview_stem + name);
    };

    const TrainReport report = train(mc, target, train_config(rc), ot_config(rc), rng, &hooks);

    std::ofstream csv(rc.out + ".loss.csv");
    csv << "iteration,texture_loss,overflow_loss,grad_norm,max_abs_state\n";
    for (int i = 0; i < report.iterations_run(); ++i) {
        csv << (i + 1) << "," << report.texture_loss[i] << ","
            << (i < static_cast<int>(report.overflow_loss.size()) ? report.overflow_loss[i] : 0.0) << ","
            << (i < static_cast<int>(report.grad_norm.size()) ? report.grad_norm[i] : 0.0) << ","
            << (i < static_cast<int>(report.max_abs_state.size()) ? report.max_abs_state[i] : 0.0) << "\n";
    }

    if (!report.completed) {
        std::cerr << "training aborted at iteration " << report.abort_iteration << ": "
                  << report.abort_reason
                  << (report.gradnorm_ablated ? " [gradnorm ablated]" : "")
                  << (report.overflow_ablated ? " [overflow ablated]" : "") << "\n";
        return 2;
    }
    save_model(report.params, mc, rc.out);
    std::cerr << "model written to " << rc.out << "\n";
    return 0;
}

int cmd_generate(const std::string& model_path, RunConfig rc) {
    if (rc.size == 0) rc.size = 128;
    if (rc.out.empty()) rc.out = "frame.png";
    echo_config("generate", rc);
    const ModelFile mf = load_model(model_path);
    Rng rng(rc.seed);
    Grid g = seed_grid(rc.size, rc.size, mf.config, rng);
    if (rc.frames <= 1) {
        g = rollout(g, mf.params, mf.config, rc.steps);
        write_png(to_rgb(g), rc.out);
        return 0;
    }
    const std::string base = stem(rc.out);
    int done = 0;
    for (int f = 1; f <= rc.frames; ++f) {
        const int upto = static_cast<int>(static_cast<int64_t>(rc.steps) * f / rc.frames);
        g = rollout(g, mf.params, mf.config, upto - done);
        done = upto;
        char name[32];
        std::snprintf(name, sizeof(name), "_step%05d.png", upto);
        write_png(to_rgb(g), base + name);
    }
    return 0;
}

int cmd_quantize(const std::string& model_path, RunConfig rc) {
    if (rc.out.empty()) rc.out = stem(model_path) + ".q.unca";
    echo_config("quantize", rc);
    const ModelFile mf = load_model(model_path);
    const QuantizedModel qm = mf.quantized ? mf.qm : quantize(mf.params, mf.config);
    save_model(qm, rc.out);
    std::cerr << "quantized model written to " << rc.out << "\n";
    return 0;
}

int cmd_emit(const std::string& model_path, RunConfig rc) {
    const bool glsl = rc.target_lang == "glsl";
    if (!glsl && rc.target_lang != "c")
        throw std::invalid_argument("--target must be c or glsl");
    if (rc.out.empty()) rc.out = stem(model_path) + (glsl ? ".frag" : ".c");
    echo_config("emit", rc);
    const ModelFile mf = load_model(model_path);
    const QuantizedModel qm = mf.quantized ? mf.qm : quantize(mf.params, mf.config);
    std::ofstream out(rc.out, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + rc.out);
    out << (glsl ? emit_glsl(qm) : emit_c(qm));
    std::cerr << "source written to " << rc.out << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& target_path, RunConfig rc) {
    echo_config("eval", rc);
    const ModelFile mf = load_model(model_path);
    const Image target = load_target(target_path, rc.size);
    const OTConfig ot = ot_config(rc);
    const PatchFeatures feats = extract_features(target, ot.n_levels, ot.patch_size);
    Rng rng(rc.seed);
    Grid g = seed_grid(target.height, target.width, mf.config, rng);
    g = rollout(g, mf.params, mf.config, rc.steps);
    const TextureLossResult res = texture_loss(rgb_channels(g), feats, ot, rng.next());
    std::printf("%.6f\n", res.value);
    return 0;
}

int cmd_pixelopt(const std::string& target_path, RunConfig rc) {
    if (rc.out.empty()) rc.out = "pixelopt.png";
    echo_config("pixelopt", rc);
    const Image target = load_target(target_path, rc.size);
    Rng rng(rc.seed);
    const PixelOptReport report =
        optimize_pixels(target, ot_config(rc), rc.iters, rc.lr, rng);
    write_png(report.image, rc.out);
    std::cerr << "loss " << report.losses.front() << " -> " << report.losses.back() << "\n";
    return 0;
}

void trim(std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    const auto b = s.find_last_not_of(" \t\r\n");
    s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        trim(key);
        trim(value);
        auto as_int = [&] { return std::stoi(value); };
        auto as_double = [&] { return std::stod(value); };
        auto as_bool = [&] { return value == "1" || value == "true" || value == "yes"; };
        if (key == "filters") cfg.filters = value;
        else if (key == "size") cfg.size = as_int();
        else if (key == "steps") cfg.steps = as_int();
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "out") cfg.out = value;
        else if (key == "target") cfg.target_lang = value;
        else if (key == "frames") cfg.frames = as_int();
        else if (key == "K" || key == "k") cfg.patch_size = as_int();
        else if (key == "levels") cfg.n_levels = as_int();
        else if (key == "subsample") cfg.n_subsample = as_int();
        else if (key == "eps_rel") cfg.eps_rel = as_double();
        else if (key == "sinkhorn_iters") cfg.sinkhorn_iters = as_int();
        else if (key == "sinkhorn_tol") cfg.sinkhorn_tol = as_double();
        else if (key == "iters") cfg.iters = as_int();
        else if (key == "batch") cfg.batch = as_int();
        else if (key == "pool") cfg.pool = as_int();
        else if (key == "seed_rate") cfg.seed_rate = as_int();
        else if (key == "steps_min") cfg.steps_min = as_int();
        else if (key == "steps_max") cfg.steps_max = as_int();
        else if (key == "grid") cfg.grid = as_int();
        else if (key == "lr") cfg.lr = as_double();
        else if (key == "ablate_gradnorm") cfg.ablate_gradnorm = as_bool();
        else if (key == "ablate_overflow") cfg.ablate_overflow = as_bool();
        else throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
}

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"unca: train, inspect and export compact texture cellular automata"};
    app.require_subcommand(1);

    RunConfig rc;
    std::string input_path, second_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--filters", rc.filters, "filter counts L,X,Y");
        cmd->add_option("--size", rc.size, "image / grid size");
        cmd->add_option("--steps", rc.steps, "rollout steps");
        cmd->add_option("--seed", rc.seed, "rng seed");
        cmd->add_option("--config", rc.config_path, "key = value config file");
        cmd->add_option("--out", rc.out, "output path");
        cmd->add_option("--K", rc.patch_size, "patch size");
        cmd->add_option("--levels", rc.n_levels, "pyramid levels");
        cmd->add_option("--subsample", rc.n_subsample, "patch rows per level");
        cmd->add_option("--eps", rc.eps_rel, "relative Sinkhorn epsilon");
        cmd->add_option("--iters", rc.iters, "training / optimization iterations");
        cmd->add_option("--batch", rc.batch, "batch size");
        cmd->add_option("--pool", rc.pool, "pool size");
        cmd->add_option("--seed-rate", rc.seed_rate, "seed injection period");
        cmd->add_option("--steps-min", rc.steps_min, "min rollout steps per iteration");
        cmd->add_option("--steps-max", rc.steps_max, "max rollout steps per iteration");
        cmd->add_option("--grid", rc.grid, "training grid size");
        cmd->add_option("--lr", rc.lr, "learning rate");
        cmd->add_option("--frames", rc.frames, "frame count");
        cmd->add_option("--target", rc.target_lang, "emit target: c | glsl");
        cmd->add_flag("--ablate-gradnorm", rc.ablate_gradnorm, "disable per-step gradient normalization");
        cmd->add_flag("--ablate-overflow", rc.ablate_overflow, "disable the overflow loss");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a rule on a target texture");
    train_cmd->add_option("image", input_path, "target PNG")->required();
    add_common(train_cmd);

    CLI::App* gen_cmd = app.add_subcommand("generate", "roll out a model and write PNG frames");
    gen_cmd->add_option("model", input_path, "model file")->required();
    add_common(gen_cmd);

    CLI::App* quant_cmd = app.add_subcommand("quantize", "quantize a float model to one byte per parameter");
    quant_cmd->add_option("model", input_path, "model file")->required();
    add_common(quant_cmd);

    CLI::App* emit_cmd = app.add_subcommand("emit", "emit standalone C or GLSL source");
    emit_cmd->add_option("model", input_path, "model file")->required();
    add_common(emit_cmd);

    CLI::App* eval_cmd = app.add_subcommand("eval", "texture loss of a model against a target");
    eval_cmd->add_option("model", input_path, "model file")->required();
    eval_cmd->add_option("image", second_path, "target PNG")->required();
    add_common(eval_cmd);

    CLI::App* pixel_cmd = app.add_subcommand("pixelopt", "optimize pixels directly against the loss");
    pixel_cmd->add_option("image", input_path, "target PNG")->required();
    add_common(pixel_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        // Flags override the file: re-parse after loading it.
        if (!rc.config_path.empty()) {
            RunConfig file_cfg;
            apply_config_file(file_cfg, rc.config_path);
            rc = file_cfg;
            std::vector<std::string> again(args.rbegin(), args.rend());
            app.clear();
            app.parse(again);
        }
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*train_cmd) return cmd_train(input_path, rc);
        if (*gen_cmd) return cmd_generate(input_path, rc);
        if (*quant_cmd) return cmd_quantize(input_path, rc);
        if (*emit_cmd) return cmd_emit(input_path, rc);
        if (*eval_cmd) return cmd_eval(input_path, second_path, rc);
        if (*pixel_cmd) return cmd_pixelopt(input_path, rc);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace unca
