#include "fact/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fact/error.hpp"

namespace fact::harness {

namespace {

struct Entry {
  std::string value;
  int line;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string where(const std::string& source, int line) {
  return source + ":" + std::to_string(line);
}

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "k",
      "alpha",
      "agent_costs",
      "agent_cost",
      "n",
      "misreport_max_pct",
      "misreport_step_pct",
      "focus_agent",
      "cost_distribution",
      "cost_distribution.relative_stddev",
      "cost_distribution.lower",
      "cost_distribution.upper",
      "cost_distribution.multipliers",
      "cost_distribution.file",
      "fixed_pool",
      "pool_size",
      "trials",
      "seed",
      "penalty_grid_points",
      "free_rider_agent",
      "fedsim.rounds",
      "fedsim.local_steps",
      "fedsim.epochs",
      "fedsim.step_size",
      "fedsim.dimension",
      "fedsim.noise_variance",
      "fedsim.lipschitz",
      "fedsim.mu",
      "out",
      "workers",
  };
  return keys;
}

class Reader {
 public:
  Reader(std::map<std::string, Entry, std::less<>> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  bool has(std::string_view key) const { return entries_.contains(key); }

  [[noreturn]] void fail(std::string_view key, const std::string& why) const {
    const auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    const std::string loc = line > 0 ? where(source_, line) : source_;
    throw ConfigError(loc + ": key '" + std::string(key) + "': " + why,
                      std::string(key), line);
  }

  const std::string& raw(std::string_view key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) fail(key, "required key is missing");
    return it->second.value;
  }

  double number(std::string_view key) const { return parse_number(key, raw(key)); }
  double number(std::string_view key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t integer(std::string_view key) const {
    const std::string& v = raw(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      fail(key, "expected a nonnegative integer, got '" + v + "'");
    }
    return out;
  }
  std::uint64_t integer(std::string_view key, std::uint64_t fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = raw(key);
    if (v == "true") return true;
    if (v == "false") return false;
    fail(key, "expected true or false, got '" + v + "'");
  }

  std::vector<double> list(std::string_view key) const {
    std::vector<double> out;
    std::string_view rest = raw(key);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      out.push_back(parse_number(key, item));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

 private:
  double parse_number(std::string_view key, std::string_view v) const {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
      fail(key, "expected a number, got '" + std::string(v) + "'");
    }
    return out;
  }

  std::map<std::string, Entry, std::less<>> entries_;
  std::string source_;
};

std::vector<double> read_multiplier_file(const Reader& r,
                                         const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) r.fail("cost_distribution.file", "cannot open '" + path.string() + "'");
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      r.fail("cost_distribution.file",
             "bad number '" + std::string(t) + "' in '" + path.string() + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

CostDistribution BeliefSpec::for_cost(double true_cost) const {
  switch (kind) {
    case BeliefKind::kGaussian:
      return CostDistribution::gaussian(true_cost, relative_stddev * true_cost);
    case BeliefKind::kUniform:
      return CostDistribution::uniform(lower * true_cost, upper * true_cost);
    case BeliefKind::kEmpirical: {
      std::vector<double> costs;
      costs.reserve(multipliers.size());
      for (double m : multipliers) costs.push_back(m * true_cost);
      return CostDistribution::empirical(std::move(costs));
    }
  }
  throw ValidationError("unknown belief kind");
}

MechanismConstants ScenarioConfig::constants() const {
  return {k, alpha, true_costs.size()};
}

std::vector<double> ScenarioConfig::misreport_grid() const {
  const auto steps = static_cast<long>(std::llround(misreport_max_pct / misreport_step_pct));
  std::vector<double> grid;
  for (long j = -steps; j <= steps; ++j) {
    grid.push_back(static_cast<double>(j) * misreport_step_pct);
  }
  return grid;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw ValidationError("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::string ScenarioConfig::canonical() const {
  std::ostringstream os;
  auto kv = [&](const char* key, const std::string& v) { os << key << '=' << v << '\n'; };
  auto list = [](const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ',';
      s += format_double(xs[i]);
    }
    return s;
  };
  kv("k", format_double(k));
  kv("alpha", format_double(alpha));
  kv("agent_costs", list(true_costs));
  kv("misreport_max_pct", format_double(misreport_max_pct));
  kv("misreport_step_pct", format_double(misreport_step_pct));
  kv("focus_agent", std::to_string(focus_agent));
  const char* kinds[] = {"gaussian-around-true-cost", "uniform", "empirical-list"};
  kv("cost_distribution", kinds[static_cast<int>(belief.kind)]);
  kv("cost_distribution.relative_stddev", format_double(belief.relative_stddev));
  kv("cost_distribution.lower", format_double(belief.lower));
  kv("cost_distribution.upper", format_double(belief.upper));
  kv("cost_distribution.multipliers", list(belief.multipliers));
  kv("fixed_pool", fixed_pool ? "true" : "false");
  kv("pool_size", std::to_string(pool_size));
  kv("trials", std::to_string(trials));
  kv("seed", std::to_string(seed));
  kv("penalty_grid_points", std::to_string(penalty_grid_points));
  kv("free_rider_agent", free_rider_agent ? std::to_string(*free_rider_agent) : "none");
  if (fedsim) {
    kv("fedsim.rounds", std::to_string(fedsim->rounds));
    kv("fedsim.local_steps", std::to_string(fedsim->local_steps));
    kv("fedsim.epochs", std::to_string(fedsim->epochs));
    kv("fedsim.step_size", format_double(fedsim->step_size));
    kv("fedsim.dimension", std::to_string(fedsim->dimension));
    kv("fedsim.noise_variance", format_double(fedsim->noise_variance));
    kv("fedsim.lipschitz", format_double(fedsim->lipschitz));
    kv("fedsim.mu", format_double(fedsim->mu));
  } else {
    kv("fedsim", "none");
  }
  kv("out", out_dir);
  // workers is deliberately absent: results do not depend on it.
  return os.str();
}

std::string ScenarioConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ScenarioConfig parse_config(std::string_view text, const std::string& source,
                            const std::filesystem::path& base_dir) {
  std::map<std::string, Entry, std::less<>> entries;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where(source, line_no) + ": expected 'key = value'", {},
                        line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!known_keys().contains(key)) {
      throw ConfigError(where(source, line_no) + ": unknown key '" + key + "'", key,
                        line_no);
    }
    if (value.empty()) {
      throw ConfigError(where(source, line_no) + ": key '" + key + "' has no value",
                        key, line_no);
    }
    if (!entries.emplace(key, Entry{value, line_no}).second) {
      throw ConfigError(where(source, line_no) + ": duplicate key '" + key + "'", key,
                        line_no);
    }
  }

  const Reader r(std::move(entries), source);
  ScenarioConfig cfg;
  cfg.source = source;
  cfg.k = r.number("k");
  cfg.alpha = r.number("alpha");

  if (r.has("agent_costs")) {
    if (r.has("agent_cost")) r.fail("agent_cost", "give either agent_costs or agent_cost, not both");
    cfg.true_costs = r.list("agent_costs");
    if (r.has("n") && r.integer("n") != cfg.true_costs.size()) {
      r.fail("n", "does not match the length of agent_costs");
    }
  } else if (r.has("agent_cost")) {
    const double c = r.number("agent_cost");
    cfg.true_costs.assign(r.integer("n"), c);
  } else {
    r.fail("agent_costs", "required key is missing (or give agent_cost and n)");
  }
  for (double c : cfg.true_costs) {
    if (!(c > 0.0)) r.fail(r.has("agent_costs") ? "agent_costs" : "agent_cost", "costs must be positive");
  }
  try {
    (void)cfg.constants();
  } catch (const ValidationError& e) {
    const char* key = cfg.true_costs.size() < 2 ? (r.has("n") ? "n" : "agent_costs")
                      : !(cfg.alpha >= 0.0 && cfg.alpha < 2.0) ? "alpha"
                                                               : "k";
    r.fail(key, e.what());
  }

  cfg.misreport_max_pct = r.number("misreport_max_pct", cfg.misreport_max_pct);
  cfg.misreport_step_pct = r.number("misreport_step_pct", cfg.misreport_step_pct);
  if (!(cfg.misreport_step_pct > 0.0)) r.fail("misreport_step_pct", "must be positive");
  if (!(cfg.misreport_max_pct >= 0.0 && cfg.misreport_max_pct < 100.0)) {
    r.fail("misreport_max_pct", "must lie in [0, 100)");
  }
  const double ratio = cfg.misreport_max_pct / cfg.misreport_step_pct;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    r.fail("misreport_step_pct", "the sweep range must be a whole number of steps so that it is symmetric and contains 0");
  }
  cfg.focus_agent = r.integer("focus_agent", 0);
  if (cfg.focus_agent >= cfg.n()) r.fail("focus_agent", "agent index out of range");

  if (r.has("cost_distribution")) {
    const std::string& kind = r.raw("cost_distribution");
    if (kind == "gaussian-around-true-cost") {
      cfg.belief.kind = BeliefKind::kGaussian;
    } else if (kind == "uniform") {
      cfg.belief.kind = BeliefKind::kUniform;
    } else if (kind == "empirical-list") {
      cfg.belief.kind = BeliefKind::kEmpirical;
    } else {
      r.fail("cost_distribution",
             "expected gaussian-around-true-cost, uniform or empirical-list");
    }
  }
  cfg.belief.relative_stddev =
      r.number("cost_distribution.relative_stddev", cfg.belief.relative_stddev);
  cfg.belief.lower = r.number("cost_distribution.lower", cfg.belief.lower);
  cfg.belief.upper = r.number("cost_distribution.upper", cfg.belief.upper);
  if (r.has("cost_distribution.multipliers")) {
    cfg.belief.multipliers = r.list("cost_distribution.multipliers");
  }
  if (r.has("cost_distribution.file")) {
    cfg.belief.file = r.raw("cost_distribution.file");
    std::filesystem::path p(cfg.belief.file);
    if (p.is_relative()) p = base_dir / p;
    auto more = read_multiplier_file(r, p);
    cfg.belief.multipliers.insert(cfg.belief.multipliers.end(), more.begin(), more.end());
  }
  if (cfg.belief.kind == BeliefKind::kEmpirical && cfg.belief.multipliers.empty()) {
    r.fail("cost_distribution",
           "empirical-list needs cost_distribution.multipliers or cost_distribution.file");
  }
  try {
    (void)cfg.belief.for_cost(cfg.true_costs.front());
  } catch (const ValidationError& e) {
    r.fail("cost_distribution", e.what());
  }

  cfg.fixed_pool = r.boolean("fixed_pool", cfg.fixed_pool);
  cfg.pool_size = r.integer("pool_size", cfg.pool_size);
  if (cfg.pool_size < 1) r.fail("pool_size", "must be at least 1");
  cfg.trials = r.integer("trials", cfg.trials);
  if (cfg.trials < 2) r.fail("trials", "must be at least 2");
  cfg.seed = r.integer("seed", cfg.seed);
  cfg.penalty_grid_points = r.integer("penalty_grid_points", cfg.penalty_grid_points);
  if (cfg.penalty_grid_points < 3) r.fail("penalty_grid_points", "must be at least 3");
  if (r.has("free_rider_agent")) {
    cfg.free_rider_agent = r.integer("free_rider_agent");
    if (*cfg.free_rider_agent >= cfg.n()) r.fail("free_rider_agent", "agent index out of range");
  }

  const bool any_fedsim = r.has("fedsim.rounds") || r.has("fedsim.local_steps") ||
                          r.has("fedsim.epochs") || r.has("fedsim.step_size") ||
                          r.has("fedsim.dimension") || r.has("fedsim.noise_variance") ||
                          r.has("fedsim.lipschitz") || r.has("fedsim.mu");
  if (any_fedsim) {
    FedsimSpec f;
    f.rounds = r.integer("fedsim.rounds", f.rounds);
    f.local_steps = r.integer("fedsim.local_steps", f.local_steps);
    f.epochs = r.integer("fedsim.epochs", f.epochs);
    f.step_size = r.number("fedsim.step_size", f.step_size);
    f.dimension = r.integer("fedsim.dimension", f.dimension);
    f.noise_variance = r.number("fedsim.noise_variance", f.noise_variance);
    f.lipschitz = r.number("fedsim.lipschitz", f.lipschitz);
    f.mu = r.number("fedsim.mu", f.mu);
    if (f.rounds < 1) r.fail("fedsim.rounds", "must be at least 1");
    if (f.local_steps < 1) r.fail("fedsim.local_steps", "must be at least 1");
    if (f.epochs < 1) r.fail("fedsim.epochs", "must be at least 1");
    if (f.dimension < 1) r.fail("fedsim.dimension", "must be at least 1");
    if (!(f.step_size > 0.0)) r.fail("fedsim.step_size", "must be positive");
    if (!(f.lipschitz > 0.0)) r.fail("fedsim.lipschitz", "must be positive");
    if (!(f.mu > 0.0 && f.mu <= f.lipschitz)) r.fail("fedsim.mu", "need 0 < mu <= lipschitz");
    if (!(f.noise_variance > 0.0)) r.fail("fedsim.noise_variance", "must be positive");
    if (!(f.step_size * f.lipschitz < 2.0)) {
      r.fail("fedsim.step_size", "step_size x lipschitz must be below 2");
    }
    const double product = f.step_size * f.noise_variance * f.lipschitz;
    if (std::abs(product - cfg.k) > 1e-9 * cfg.k) {
      r.fail("fedsim.noise_variance",
             "step_size x noise_variance x lipschitz = " + format_double(product) +
                 " does not match k = " + format_double(cfg.k));
    }
    cfg.fedsim = f;
  }

  if (r.has("out")) cfg.out_dir = r.raw("out");
  cfg.workers = static_cast<unsigned>(r.integer("workers", 1));
  if (cfg.workers < 1) r.fail("workers", "must be at least 1");
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), path.parent_path());
}

}  // namespace fact::harness
