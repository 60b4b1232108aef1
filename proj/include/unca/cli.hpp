#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace unca {

// Settings shared by every subcommand, merged from defaults, an optional
// key = value config file and command-line flags (flags win). The resolved
// values are echoed to stderr so any run can be reproduced from its log.
struct RunConfig {
    std::string filters = "2,1,1";   // n_lap,n_x,n_y
    int size = 0;                    // target / output size; 0 = command default
    int steps = 64;                  // rollout steps (generate / eval)
    uint64_t seed = 0;
    std::string config_path;
    std::string out;
    std::string target_lang = "c";   // emit: c | glsl
    int frames = 1;

    // OT loss
    int patch_size = 5;
    int n_levels = 4;
    int n_subsample = 2048;
    double eps_rel = 0.05;
    int sinkhorn_iters = 200;
    double sinkhorn_tol = 1e-6;

    // training
    int iters = 4000;
    int batch = 4;
    int pool = 256;
    int seed_rate = 4;
    int steps_min = 32;
    int steps_max = 64;
    int grid = 96;
    double lr = 1e-3;
    bool ablate_gradnorm = false;
    bool ablate_overflow = false;
};

// Parses one `key = value` per line; '#' starts a comment. Unknown keys
// are an error. Exposed for tests.
void apply_config_file(RunConfig& cfg, const std::string& path);

// Entry point behind the `unca` binary. args excludes argv[0].
// Exit codes: 0 success, 1 usage error, 2 runtime/numeric failure.
int cli_main(const std::vector<std::string>& args);

}  // namespace unca
