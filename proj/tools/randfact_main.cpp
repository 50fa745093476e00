#include <string>
#include <vector>

#include "randfact/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return randfact::run_cli(args);
}
