#include <string>
#include <vector>

#include "twinet/app/cli.hpp"

int main(int argc, char** argv) { return twinet::app::run_command(std::vector<std::string>(argv, argv + argc)); }
