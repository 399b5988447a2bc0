#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hamcg/config.hpp"
#include "hamcg/errors.hpp"
#include "hamcg/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Averaging and overdamped limits for Hamiltonian diffusions"};
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "JSON run config")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--threads", threads, "worker threads (overrides HAMCG_THREADS)")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hamcg::exit_config;
  }

  try {
    hamcg::RunConfig cfg = hamcg::load_config(config_path, seed);
    if (threads) {
      hamcg::set_thread_count(*threads);
    } else if (const char* env = std::getenv("HAMCG_THREADS")) {
      try {
        hamcg::set_thread_count(std::stoi(env));
      } catch (const std::exception&) {
        std::cerr << "error: HAMCG_THREADS is not an integer\n";
        return hamcg::exit_config;
      }
    }
    if (threads || std::getenv("HAMCG_THREADS")) cfg.threads = 0;
    const hamcg::RunOutcome res = hamcg::run(cfg, out_dir);
    if (!res.summary.empty()) std::cout << res.summary << "\n";
    for (const auto& a : res.artifacts) std::cout << "wrote " << out_dir << "/" << a << "\n";
    return res.exit_code;
  } catch (const hamcg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == hamcg::ErrorKind::ConfigInvalid ? hamcg::exit_config : hamcg::exit_numeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hamcg::exit_numeric;
  }
}
