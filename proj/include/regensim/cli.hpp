#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "regensim/config.hpp"

namespace regensim::cli {

struct RunOptions {
  std::string out_dir = "out";
  std::string format = "csv";  // table format: csv | json
  unsigned threads = 1;
  bool assert_mode = false;
  std::optional<std::uint64_t> seed_override;      // flag beats env beats config
  std::optional<std::uint64_t> seed_env;
  std::optional<std::size_t> replicas_override;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitAssertFailed = 4;

// Executes one subcommand; writes <out>/<subcommand>.(csv|json) and
// <out>/<subcommand>_summary.json (validated against the embedded schema).
// Returns kExitOk or kExitAssertFailed; throws on validation/numerical errors.
int run(const std::string& subcommand, RunConfig cfg, const RunOptions& opt);

// Exception-mapping wrapper used by the binary: returns an exit status.
int run_main(int argc, char** argv);

}  // namespace regensim::cli
