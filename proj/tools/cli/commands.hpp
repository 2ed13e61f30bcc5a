#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "config.hpp"

namespace mateoptix::cli {

struct RunOptions {
  std::filesystem::path out_dir = ".";
  int threads = 1;
  std::uint64_t seed = 1;
  std::string input;  // overrides [fit] input
};

// Each returns the process exit code; failures throw.
int cmd_spectrum(const Config& config, const RunOptions& run);
int cmd_couplings(const Config& config, const RunOptions& run);
int cmd_resonances(const Config& config, const RunOptions& run);
int cmd_tilt(const Config& config, const RunOptions& run);
int cmd_fit(const std::string& kind, const Config& config, const RunOptions& run);
int cmd_synth(const std::string& kind, const Config& config, const RunOptions& run);

}  // namespace mateoptix::cli
