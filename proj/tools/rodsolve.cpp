#include "msqp/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  // Keep BLAS single-threaded so repeated runs are bit-identical.
  setenv("OPENBLAS_NUM_THREADS", "1", 0);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const msqp::RunSpec spec = msqp::parse_run_spec(args);
    return msqp::run_and_emit(spec);
  } catch (const msqp::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
