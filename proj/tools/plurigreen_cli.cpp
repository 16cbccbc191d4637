#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "plurigreen/io/run.hpp"

using namespace plurigreen;

int main(int argc, char** argv)
{
  CLI::App app{"Pluricomplex Green functions, torus problems, geodesic rays and blow-up metrics"};
  std::string command, config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("command", command, "green | torus | ray | blowup | verify")
      ->required()
      ->check(CLI::IsMember({"green", "torus", "ray", "blowup", "verify"}));
  app.add_option("--config", config_path, "configuration file")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized suites (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  RunConfig config;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw Error("cannot read config " + config_path);
    std::ostringstream text;
    text << in.rdbuf();
    config = parse_config(text.str());
    if (to_string(config.command) != command)
      throw ValidationError("command", "config is for '" + to_string(config.command) + "', not '" + command + "'");
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) std::cerr << "invalid: " << v.field << ": " << v.constraint << "\n";
    return exit_config;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  }
  if (*out_opt) config.output = out_dir;
  if (*seed_opt) config.seed = seed;
  return run(config);
}
