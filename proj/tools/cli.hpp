#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "miwols/dataset.hpp"
#include "miwols/estimators.hpp"

namespace miwols::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFit = 3;

/// Effective settings of one invocation after merging the config file and flags.
struct RunConfig {
  std::string command;
  std::optional<std::string> input;
  ColumnRoles roles;
  ModelSpec model;
  double fill = 0.0;
  std::vector<std::string> estimators{"MIWOLS"};
  std::vector<std::string> schemes{"UNW", "ABS", "IPW", "SIPW"};
  std::string out_dir = "out";
  std::uint64_t seed = 20240611;
  unsigned workers = 0;  // 0: MIWOLS_WORKERS or hardware concurrency
  std::optional<long long> reps;
  std::optional<long long> n;
};

/// Methods selected by `estimators` x `schemes`.
std::vector<Method> selected_methods(const RunConfig& cfg);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace miwols::cli
