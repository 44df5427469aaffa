#include <iostream>

#include "temprel/experiment.hpp"

int main(int argc, char** argv) {
  return temprel::run_cli(argc, argv, std::cout, std::cerr);
}
