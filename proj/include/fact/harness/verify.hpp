#pragma once

#include <string>
#include <vector>

#include "fact/harness/config.hpp"

namespace fact::harness {

struct Check {
  std::string name;
  std::string detail;
  double tolerance = 0.0;
  double residual = 0.0;  // passes when residual <= tolerance
  bool passed = false;
};

struct VerifyOptions {
  // Multiplies every penalty scalar the checks compute. Anything other than 1
  // is a deliberate fault injection and must make the IR-gap checks fail.
  double lambda_scale = 1.0;
};

struct VerifyReport {
  std::string scenario_hash;
  std::vector<Check> checks;

  bool passed() const;
  std::string to_json() const;
};

VerifyReport run_verify(const ScenarioConfig& cfg, const VerifyOptions& options = {});

}  // namespace fact::harness
