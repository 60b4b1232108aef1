#include <string>
#include <vector>

#include "unca/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return unca::cli_main(args);
}
