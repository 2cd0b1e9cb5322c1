#include <string>
#include <vector>

#include "siphi/cli.hpp"

int main(int argc, char** argv) {
    return siphi::cli::run(std::vector<std::string>(argv, argv + argc));
}
