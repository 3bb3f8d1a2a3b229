#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "verifem/runner.hpp"

namespace {

bool threads_valid() {
  const char* env = std::getenv("VERIFEM_THREADS");
  if (!env) return true;
  const std::string s(env);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) return false;
  return std::stoll(s) >= 1 && std::stoll(s) <= 4096;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verifem: a posteriori error estimation for P1 diffusion problems"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  for (const char* name : {"solve", "estimate", "adapt", "study"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (!threads_valid()) {
    std::cerr << "error: VERIFEM_THREADS must be a positive integer\n";
    return 1;
  }
  const auto command = verifem::command_from(app.get_subcommands().front()->get_name());
  verifem::RunConfig config;
  try {
    config = verifem::parse_config(config_path);
  } catch (const verifem::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return verifem::run(*command, config, out_dir.empty() ? config.output : out_dir, std::cerr);
}
