#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hardness/cli.hpp"

namespace {

constexpr const char* kFooter =
    "Every command reads a JSON config (unknown keys are rejected) and is deterministic given the\n"
    "config and seed; output embeds both. HARDNESS_WORKERS sets the worker count and never\n"
    "changes results.\n"
    "Exit codes: 0 ok, 1 internal failure, 2 config/parameter error, 3 infeasible scale or\n"
    "domain too large, 4 a checked bound was violated.";

} // namespace

int main(int argc, char** argv) {
  using namespace hardness;
  CLI::App app{"Variance-based hardness toolkit: exact variance of distribution families, the\n"
               "bounds it drives, and simulators for linear training, correlation queries and\n"
               "approximate gradient descent."};
  app.footer(kFooter);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string format = "json";
  app.add_option("--config", config_path, "Path to the JSON config")->required();
  app.add_option("--seed", seed, "Seed (overrides the config's seed; default 0)");
  app.add_option("--out", out_dir, "Write results into this directory instead of stdout");
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"json", "csv", "text"}));

  const std::pair<const char*, const char*> commands[] = {
      {"variance", "Exact Var(A) with the member lower and spectral upper bounds"},
      {"bounds", "Evaluate the closed-form bounds for given parameters"},
      {"train-linear", "Projected subgradient training of a linear class on every member"},
      {"csq", "Run a scripted learner against the adversarial correlation-query oracle"},
      {"gd", "Approximate or noisy gradient descent on every member"},
      {"pattern", "Build a pattern-matrix family, check its identities, export a manifest"},
      {"report", "Recheck claims from result files: bound, empirical value, satisfied"},
  };
  for (const auto& [name, help] : commands)
    app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  try {
    cli::Context ctx;
    ctx.config = read_json_file(config_path);
    ctx.base_dir = std::filesystem::path(config_path).parent_path();
    if (ctx.base_dir.empty())
      ctx.base_dir = ".";
    if (seed)
      ctx.seed = *seed;
    else if (ctx.config.is_object() && ctx.config.contains("seed"))
      ctx.seed = get_as<std::uint64_t>(ctx.config, "seed", "config");
    const cli::Format fmt = cli::format_by_name(format);
    const cli::Result result = cli::run_command(app.get_subcommands().front()->get_name(), ctx);
    cli::emit(result, fmt, out_dir, std::cout);
    return result.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
}
