#include "bergman/error.hpp"
#include "bergman/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Orthogonal polynomials and the Bergman shift on polynomial lemniscates"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  int depth = 0;
  int degree = 0;
  auto* run = app.add_subcommand("run", "run a scenario and write report.json, sequences/ and plotdata/");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory")->capture_default_str();
  auto* depth_opt = run->add_option("--depth", depth, "override quadrature.cell_depth");
  auto* degree_opt = run->add_option("--degree", degree, "override the degree budget N");

  auto* list = app.add_subcommand("list", "list shipped scenarios and diagnostics");

  std::string op;
  auto* desc = app.add_subcommand("describe", "document a diagnostic");
  desc->add_option("op", op, "diagnostic name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    bergman::configure_threads_from_env();
    if (*run) {
      bergman::RunOptions opts;
      if (*depth_opt) opts.depth = depth;
      if (*degree_opt) opts.degree = degree;
      const auto report = bergman::run_scenario(scenario_path, out_dir, opts);
      for (const auto& e : report.errors) std::cerr << "error: " << e << "\n";
      for (const auto& e : report.expectations)
        std::cout << (e.passed ? "PASS " : "FAIL ") << e.expectation.quantity << ": " << e.message << "\n";
      std::cout << (report.passed() ? "passed" : "failed") << " (" << out_dir << "/report.json)\n";
      return report.passed() ? 0 : 1;
    }
    if (*list) {
      std::cout << "scenarios (" << bergman::scenario_directory().string() << "):\n";
      for (const auto& s : bergman::list_scenarios())
        std::cout << "  " << s.name << "  " << s.path.filename().string() << "  " << s.description << "\n";
      std::cout << "diagnostics:\n";
      for (const auto& d : bergman::diagnostic_names()) std::cout << "  " << d << "\n";
      return 0;
    }
    if (*desc) {
      std::cout << bergman::describe(op);
      return 0;
    }
  } catch (const bergman::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
