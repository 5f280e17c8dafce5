#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "negattn/errors.hpp"
#include "negattn/run_config.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        negattn::RunConfig cfg = negattn::parse_args(args);
        return negattn::run(cfg);
    } catch (const negattn::ConfigError& e) {
        std::fprintf(stderr, "negattn: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "negattn: %s\n", e.what());
        return 1;
    }
}
