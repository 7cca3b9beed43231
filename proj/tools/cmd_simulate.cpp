#include "cmd_simulate.hpp"

#include <stdexcept>

namespace ftc::cli {

int run_simulate(const SimulateArgs& a) {
  (void)a;
  throw std::runtime_error("simulate: not implemented");
}

}  // namespace ftc::cli
