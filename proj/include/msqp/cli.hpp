#pragma once

#include "msqp/models.hpp"
#include "msqp/rod.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace msqp {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything one benchmark invocation needs: rod data, solver mode and
/// retraction choices, solver parameters and output paths.
struct RunSpec {
  enum class Mode { Composite, Local };

  int nodes = 240;
  double sigma = 1.0;
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  double radius = 0.6;
  double pitch_a = 0.5;
  RetractionKind model_retraction = RetractionKind::Exponential;
  RetractionKind update_retraction = RetractionKind::Exponential;
  Mode mode = Mode::Composite;
  SolverConfig solver;
  std::string history_path = "history.csv";
  std::string solution_path = "solution.csv";
};

/// Parse command-line arguments (without the program name). When --config
/// names a JSON file its values are applied first and flags override them.
/// Throws UsageError on unknown flags, malformed values, or an unreadable
/// config file.
RunSpec parse_run_spec(const std::vector<std::string>& args);

/// Run the benchmark described by the spec, write the iteration-history and
/// solution CSV files, print the one-line summary. Returns the process exit
/// status: 0 on convergence, 2 when the solver stops on MaxIterExceeded or
/// StallDetected.
int run_and_emit(const RunSpec& spec);

}  // namespace msqp
