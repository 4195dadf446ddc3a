#include <string>
#include <vector>

#include "cli/cli.hpp"

int main(int argc, char** argv) { return m2t::cli::run(std::vector<std::string>(argv + 1, argv + argc)); }
