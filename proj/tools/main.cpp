#include <vector>

#include "satsurf/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return satsurf::run_command(args);
}
