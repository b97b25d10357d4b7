// pc: solve k-sat and NK instances with probability-collective solvers.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pc_commands.hpp"

namespace {

// CLI11 only reads config files for the top-level app, so subcommands load theirs after parsing.
void add_config(CLI::App* sub, std::string& path) {
  sub->add_option("--config", path, "flat key=value file mirroring the flag names");
}

// Fills every option the command line left unset; explicit flags keep precedence.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw pc::cli::UsageError("cannot open config " + path);
  for (const auto& item : CLI::ConfigINI().from_config(in)) {
    if (!item.parents.empty()) throw pc::cli::UsageError("config sections are not supported: " + item.fullname());
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (!opt || item.name == "config") throw pc::cli::UsageError("unknown config key: " + item.name);
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("PC_SEED");
  if (!env || !*env) return fallback;
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw pc::cli::UsageError(std::string("PC_SEED is not an unsigned integer: ") + env);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probability-collective solvers for k-sat and NK landscapes"};
  app.require_subcommand(1);

  pc::cli::KsatOptions ksat;
  std::vector<std::uint64_t> planted;
  double ksat_temp = 0.0;
  auto* solve_ksat = app.add_subcommand("solve-ksat", "solve a CNF instance (file or planted)");
  std::string solve_ksat_config;
  add_config(solve_ksat, solve_ksat_config);
  solve_ksat->add_option("instance", ksat.path, "DIMACS CNF file");
  solve_ksat->add_option("--planted", planted, "planted instance: N C k seed")->expected(4);
  solve_ksat->add_option("--mixtures", ksat.mixtures, "mixture components (1 = single product)");
  solve_ksat->add_option("--update", ksat.update, "brouwer | newton | gradient")
      ->check(CLI::IsMember({"brouwer", "newton", "gradient"}));
  auto* ksat_temp_opt = solve_ksat->add_option("--temp", ksat_temp, "starting temperature")->check(CLI::PositiveNumber);
  solve_ksat->add_option("--alpha-lambda", ksat.alpha_lambda, "multiplier step size")->check(CLI::PositiveNumber);
  solve_ksat->add_option("--seed", ksat.seed, "RNG seed (PC_SEED overrides)");
  solve_ksat->add_option("--trace", ksat.trace, "trace output path, - for stdout");
  solve_ksat->add_option("--max-iters", ksat.max_iters, "update step cap")->check(CLI::PositiveNumber);
  solve_ksat->add_option("--threads", ksat.threads, "worker threads")->check(CLI::PositiveNumber);
  solve_ksat->add_flag("--timing", ksat.timing, "record wall-clock ms in the trace");

  pc::cli::NkOptions nk;
  double nk_temp = 0.0;
  auto* solve_nk = app.add_subcommand("solve-nk", "minimize an NK landscape with a mixture of products");
  std::string solve_nk_config;
  add_config(solve_nk, solve_nk_config);
  solve_nk->add_option("--n", nk.sites, "sites");
  solve_nk->add_option("--k", nk.k, "neighbors per site");
  solve_nk->add_option("--instance-seed", nk.instance_seed, "seed of the generated landscape");
  solve_nk->add_option("--instance", nk.path, "NK instance file instead of generating");
  solve_nk->add_option("--mixtures", nk.mixtures, "mixture components");
  auto* nk_temp_opt = solve_nk->add_option("--temp", nk_temp, "starting temperature")->check(CLI::PositiveNumber);
  solve_nk->add_option("--min-temp", nk.min_temperature, "stop once T falls below this")->check(CLI::PositiveNumber);
  solve_nk->add_option("--cooling", nk.cooling, "geometric cooling factor");
  solve_nk->add_option("--seed", nk.seed, "solver RNG seed (PC_SEED overrides)");
  solve_nk->add_option("--trace", nk.trace, "trace output path, - for stdout");
  solve_nk->add_option("--max-iters", nk.max_iters, "update step cap")->check(CLI::PositiveNumber);
  solve_nk->add_option("--threads", nk.threads, "worker threads")->check(CLI::PositiveNumber);
  solve_nk->add_flag("--timing", nk.timing, "record wall-clock ms in the trace");

  pc::cli::GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "write a random instance");
  std::string generate_config;
  add_config(generate, generate_config);
  generate->add_option("kind", gen.kind, "ksat | nk")->required()->check(CLI::IsMember({"ksat", "nk"}));
  generate->add_option("--n", gen.n, "variables / sites");
  generate->add_option("--c", gen.c, "clauses (ksat)");
  generate->add_option("--k", gen.k, "literals per clause (ksat) or neighbors per site (nk)");
  generate->add_option("--seed", gen.seed, "instance seed (PC_SEED overrides)");
  generate->add_option("--out", gen.path, "output path (default stdout)");

  pc::cli::LandscapeOptions land;
  auto* landscape = app.add_subcommand("landscape", "tabulate the Lagrangian of a two-agent demo");
  std::string landscape_config;
  add_config(landscape, landscape_config);
  landscape->add_option("--demo", land.demo, "demo name")->check(CLI::IsMember({"paper2x2"}));
  landscape->add_option("--grid", land.grid, "points per axis");
  landscape->add_option("--out", land.path, "grid output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pc::cli::kExitUsage;
  }

  try {
    for (auto [sub, path] : {std::pair{solve_ksat, &solve_ksat_config}, std::pair{solve_nk, &solve_nk_config},
                             std::pair{generate, &generate_config}, std::pair{landscape, &landscape_config}})
      if (*sub) apply_config(sub, *path);
    if (*solve_ksat) {
      if (!planted.empty()) ksat.planted = pc::cli::PlantedSpec{planted[0], planted[1], planted[2], planted[3]};
      if (*ksat_temp_opt) ksat.temperature = ksat_temp;
      ksat.seed = seed_from_env(ksat.seed);
      return pc::cli::run_solve_ksat(ksat, std::cout, std::cerr);
    }
    if (*solve_nk) {
      if (*nk_temp_opt) nk.temperature = nk_temp;
      nk.seed = seed_from_env(nk.seed);
      return pc::cli::run_solve_nk(nk, std::cout, std::cerr);
    }
    if (*generate) {
      gen.seed = seed_from_env(gen.seed);
      return pc::cli::run_generate(gen, std::cout, std::cerr);
    }
    return pc::cli::run_landscape(land, std::cout, std::cerr);
  } catch (const pc::cli::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pc::cli::kExitUsage;
  } catch (const pc::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return pc::cli::kExitUsage;
  } catch (const pc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pc::cli::kExitUsage;
  }
}
