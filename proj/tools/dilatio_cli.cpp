#include "dilatio/scenario.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dilatio::Error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> ids;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string id = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!id.empty()) ids.push_back(id);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of dilation and entropy inequalities for symmetric convex sets"};
  std::string config_path, out_dir, checks, sweep;
  std::optional<std::uint64_t> seed, samples;
  double budget_scale = 1.0;
  bool dump = false;
  app.add_option("--config", config_path, "Scenario config file")->required();
  app.add_option("--seed", seed, "Global seed (overrides the config budget)");
  app.add_option("--samples", samples, "Monte Carlo sample count (overrides the config budget)");
  app.add_option("--out", out_dir, "Output directory for report.json, report.csv and sweep.csv");
  app.add_option("--checks", checks, "Comma-separated check ids to run");
  app.add_option("--sweep", sweep, "param=a,b,c: rerun one check over a grid and write sweep.csv");
  app.add_option("--budget-scale", budget_scale, "Multiply samples, quadrature nodes and intervals")
      ->check(CLI::PositiveNumber);
  app.add_flag("--dump-config", dump, "Print the normalised config and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), 3);
  }

  try {
    const dilatio::ConfigTree tree = dilatio::read_config_file(config_path);
    if (dump) {
      std::cout << dilatio::serialize_config(tree);
      return 0;
    }
    dilatio::ScenarioConfig sc = dilatio::load_scenario(tree);
    if (budget_scale != 1.0) sc.budget = sc.budget.scaled(budget_scale);
    if (seed) sc.budget.seed = *seed;
    if (samples) sc.budget.samples = *samples;
    const std::filesystem::path dir = std::filesystem::path(out_dir.empty() ? sc.out_dir : out_dir);
    std::filesystem::create_directories(dir);

    if (!sweep.empty()) {
      const dilatio::SweepRequest req = dilatio::parse_sweep(sweep);
      std::optional<std::uint64_t> sweep_samples = samples;
      if (!sweep_samples && budget_scale != 1.0) sweep_samples = sc.budget.samples;
      const std::string csv = dilatio::run_sweep(tree, req, sc.budget.seed, sweep_samples);
      write_file(dir / "sweep.csv", csv);
      std::cout << csv;
      return 0;
    }

    dilatio::RunOptions opts;
    opts.only = split_ids(checks);
    const std::vector<dilatio::CheckResult> results = dilatio::run_checks(sc, opts);
    write_file(dir / "report.json", dilatio::report_json(results, sc.budget));
    write_file(dir / "report.csv", dilatio::report_csv(results));
    std::size_t pass = 0, fail = 0, open = 0;
    for (const auto& r : results) {
      (r.status == dilatio::Status::Pass ? pass : r.status == dilatio::Status::Fail ? fail : open)++;
      if (r.status != dilatio::Status::Pass)
        std::printf("%-13s %s  lhs=%.10g rhs=%.10g %s\n", dilatio::to_string(r.status).c_str(), r.id.c_str(),
                    r.lhs.value, r.rhs.value, r.note.c_str());
    }
    std::printf("%zu checks: %zu pass, %zu fail, %zu inconclusive -> %s\n", results.size(), pass, fail, open,
                (dir / "report.csv").string().c_str());
    return dilatio::exit_code(results);
  } catch (const dilatio::ConfigError& e) {
    std::fprintf(stderr, "%s:%s\n", config_path.c_str(), e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
