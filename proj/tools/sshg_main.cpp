#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sshg/errors.hpp"
#include "sshg/parallel.hpp"
#include "sshg/runner.hpp"

namespace {

int solve(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> threads,
          std::optional<std::string> out_dir) {
  auto config = sshg::load_run_config(config_path);
  if (seed) config.seed = *seed;
  if (out_dir) config.output_dir = *out_dir;

  int n = 0;
  if (threads) {
    n = *threads;
  } else if (const char* env = std::getenv("SSHG_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      sshg::fail(sshg::ErrorKind::config, std::string("SSHG_THREADS is not an integer: ") + env);
    }
  }
  if (n < 0) sshg::fail(sshg::ErrorKind::config, "thread count must be non-negative");
  if (n > 0) sshg::set_thread_count(n);

  auto output = sshg::run(config);
  sshg::write_outputs(output, config.output_dir);

  std::cout << "mode " << sshg::to_string(config.mode) << ", rho " << output.rho << "\n";
  if (output.c1) std::cout << "c1 " << *output.c1 << "\n";
  if (output.c2) std::cout << "c2 " << *output.c2 << "\n";
  if (output.probe_margin) std::cout << "probe margin " << *output.probe_margin << "\n";
  for (const auto& r : output.records)
    std::cout << r.name << ": level " << r.record.level << ", " << sshg::to_string(r.record.classification)
              << (r.converged ? "" : " (not converged)") << "\n";
  std::cout << "outputs in " << config.output_dir << "\n";
  return output.converged ? 0 : sshg::kExitNonConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Super sinh-Gordon variational solver on the flat torus"};
  app.require_subcommand(1);

  auto* cmd = app.add_subcommand("solve", "Run one configured experiment");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  cmd->add_option("--config", config_path, "Flat JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", seed, "Override the config seed");
  cmd->add_option("--threads", threads, "Worker threads (falls back to SSHG_THREADS)");
  cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return solve(config_path, seed, threads, out_dir);
  } catch (const sshg::Error& e) {
    std::cerr << "error (" << sshg::to_string(e.kind()) << "): " << e.what() << "\n";
    return sshg::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
