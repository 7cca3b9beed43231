#include "cmd_sysid.hpp"

#include <stdexcept>

namespace ftc::cli {

int run_sysid(const SysidArgs& a) {
  (void)a;
  throw std::runtime_error("sysid: not implemented");
}

}  // namespace ftc::cli
