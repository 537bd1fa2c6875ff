#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "optswitch/model.hpp"

namespace optswitch {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitOptimization = 3,
  kExitLearning = 4,
  kExitDiverged = 5,
};

/// `OFF temp=22 out=16`; unnamed variables default to 0.
HybridState parse_hybrid_state(const MultimodalSystem& sys, const std::string& text);

/// Comma or space separated numbers.
std::vector<double> parse_number_list(const std::string& text);

/// Entry point shared by the executable and the tests.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace optswitch
