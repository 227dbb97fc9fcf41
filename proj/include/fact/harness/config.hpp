#pragma once

// Scenario files: flat `key = value` text, one setting per line, `#` starts a
// comment. Every recognised key is listed in configs/README.md.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fact/model.hpp"

namespace fact::harness {

enum class BeliefKind { kGaussian, kUniform, kEmpirical };

// Each agent's belief about the other agents' costs, expressed relative to the
// agent's own true cost so that the true cost is the belief's median.
struct BeliefSpec {
  BeliefKind kind = BeliefKind::kGaussian;
  double relative_stddev = 0.1;
  double lower = 0.5;  // uniform: multipliers of the true cost
  double upper = 1.5;
  std::vector<double> multipliers;  // empirical
  std::string file;                 // empirical, as written in the config

  CostDistribution for_cost(double true_cost) const;
};

struct FedsimSpec {
  std::size_t rounds = 100;
  std::size_t local_steps = 6;
  std::size_t epochs = 600;
  double step_size = 0.05;
  std::size_t dimension = 10;
  double noise_variance = 4.0;
  double lipschitz = 10.0;
  double mu = 1.0;
};

struct ScenarioConfig {
  std::string source;

  double k = 0.0;
  double alpha = 0.0;
  std::vector<double> true_costs;

  double misreport_max_pct = 50.0;
  double misreport_step_pct = 5.0;
  std::size_t focus_agent = 0;

  BeliefSpec belief;
  bool fixed_pool = false;
  std::size_t pool_size = 2000;
  std::size_t trials = 20000;
  std::uint64_t seed = 1;
  std::size_t penalty_grid_points = 101;

  std::optional<std::size_t> free_rider_agent;
  std::optional<FedsimSpec> fedsim;

  std::string out_dir = "out";
  unsigned workers = 1;

  std::size_t n() const noexcept { return true_costs.size(); }
  MechanismConstants constants() const;
  // Misreport percentages, symmetric around an exact 0.
  std::vector<double> misreport_grid() const;

  // Every field in a fixed order with round-trip number formatting.
  std::string canonical() const;
  // 16 hex digits of FNV-1a over canonical().
  std::string hash() const;
};

inline constexpr std::size_t kFullScaleTrials = 100000;

ScenarioConfig parse_config(std::string_view text, const std::string& source,
                            const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

// Shortest representation that parses back to the identical double.
std::string format_double(double x);

}  // namespace fact::harness
