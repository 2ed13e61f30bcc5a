#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "cli_error.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "mateoptix/error.hpp"

namespace {

using mateoptix::cli::CliError;

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("mate-optix");
  logger->set_pattern("%l: %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("MATE_OPTIX_LOG");
  const std::string level = env ? env : "warn";
  const auto parsed = spdlog::level::from_str(level);
  // from_str maps unknown names to off; only accept it when asked for.
  if (parsed == spdlog::level::off && level != "off") {
    spdlog::set_level(spdlog::level::warn);
    spdlog::warn("MATE_OPTIX_LOG: unknown level '{}', using warn", level);
    return;
  }
  spdlog::set_level(parsed);
}

int fail_line(const std::string& reason, std::string message, int code) {
  std::replace(message.begin(), message.end(), '\n', ' ');
  std::fprintf(stderr, "error[%s]: %s\n", reason.c_str(), message.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Membrane-in-cavity optics: spectra, couplings, resonances, tilt and fits"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  mateoptix::cli::RunOptions run;
  app.add_option("--config", config_path, "Key/value run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", run.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", run.threads, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--seed", run.seed, "Seed for synthetic data");
  app.add_option("--set", overrides, "Override a config entry: section.key=value");

  auto* spectrum = app.add_subcommand("spectrum", "Reflection map and position sweep");
  auto* couplings = app.add_subcommand("couplings", "Coupling table and extrema");
  auto* resonances = app.add_subcommand("resonances", "Resonance branch versus position");
  auto* tilt = app.add_subcommand("tilt", "Tilted-membrane transmission spectrum");
  std::string fit_kind;
  auto* fit = app.add_subcommand("fit", "Fit measurement data");
  fit->add_option("kind", fit_kind, "map | loss | transmission")
      ->required()
      ->check(CLI::IsMember({"map", "loss", "transmission"}));
  fit->add_option("--input", run.input, "Input CSV, overrides fit.input");
  std::string synth_kind;
  auto* synth = app.add_subcommand("synth", "Write synthetic data for a fit");
  synth->add_option("kind", synth_kind, "map | loss | transmission")
      ->required()
      ->check(CLI::IsMember({"map", "loss", "transmission"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail_line("usage", e.what(), mateoptix::cli::kExitInput);
  }

  try {
    mateoptix::cli::Config config;
    if (!config_path.empty()) config = mateoptix::cli::Config::load(config_path);
    for (const auto& o : overrides) config.set_override(o);

    namespace cmd = mateoptix::cli;
    if (*spectrum) return cmd::cmd_spectrum(config, run);
    if (*couplings) return cmd::cmd_couplings(config, run);
    if (*resonances) return cmd::cmd_resonances(config, run);
    if (*tilt) return cmd::cmd_tilt(config, run);
    if (*fit) return cmd::cmd_fit(fit_kind, config, run);
    if (*synth) return cmd::cmd_synth(synth_kind, config, run);
    return fail_line("usage", "no command given", mateoptix::cli::kExitInput);
  } catch (const CliError& e) {
    return fail_line(e.reason(), e.what(), e.code());
  } catch (const mateoptix::Error& e) {
    const int code = e.kind() == mateoptix::ErrorKind::kFitFailed
                         ? mateoptix::cli::kExitNoConvergence
                         : mateoptix::cli::kExitInput;
    return fail_line(std::string(mateoptix::to_string(e.kind())), e.what(), code);
  } catch (const std::exception& e) {
    return fail_line("internal", e.what(), mateoptix::cli::kExitInput);
  }
}
