#include "cmd_calibrate.hpp"

#include <stdexcept>

namespace ftc::cli {

int run_calibrate(const CalibrateArgs& a) {
  (void)a;
  throw std::runtime_error("calibrate: not implemented");
}

}  // namespace ftc::cli
