#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "uavaoi/problem.hpp"

namespace uavaoi {

enum class OracleTarget { obj1_min, obj2_max };

/// Tiny instance: U <= 2, at most 9 cells, K <= 5, I <= 3, pure line of sight.
struct OracleInstance {
  EnvConfig cfg;
  std::uint64_t node_budget = 100'000'000;

  explicit OracleInstance(EnvConfig c, std::uint64_t budget = 100'000'000);
};

struct OracleSolution {
  OracleTarget target = OracleTarget::obj2_max;
  TrajectoryRecord trajectory;
  std::vector<std::vector<Move>> moves;  // [t][u]
  double objective1 = 0.0;
  double objective2 = 0.0;
  std::uint64_t nodes_explored = 0;

  double optimum() const { return target == OracleTarget::obj1_min ? objective1 : objective2; }
};

class OracleBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OracleInstanceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Depth-first search over every feasible joint (move, association) sequence
/// with a transposition table; root branches are searched in parallel.
OracleSolution solve_exact(const OracleInstance& instance, OracleTarget target);

/// Plain serial depth-first enumeration without memoization. Exponential;
/// kept as the reference that solve_exact is checked against.
OracleSolution solve_exact_reference(const OracleInstance& instance, OracleTarget target);

/// Each UAV heads for the device with the largest current weighted AoI
/// (ties to the lowest id, skipping targets taken by lower-id UAVs) and
/// claims every device that has data pending; arbitration gates the claims.
TrajectoryRecord greedy_baseline(const EnvConfig& cfg, std::uint64_t seed);

const char* to_string(OracleTarget target);

void to_json(nlohmann::json& j, const OracleSolution& s);

}  // namespace uavaoi
