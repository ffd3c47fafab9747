#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("curator"));
    std::vector<std::string> args(argv, argv + argc);
    return curator::cli::run(args, std::cout, std::cerr);
}
