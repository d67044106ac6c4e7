#include "bergman/error.hpp"
#include "bergman/scenario.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bergman;
namespace fs = std::filesystem;

namespace {

// Small disk run used by the end-to-end cases.
const char* small_scenario = R"({
  "name": "small_disk",
  "description": "disk at low degree",
  "polynomial": [0, 1],
  "level": 1.0,
  "parts": [{"kind": "area"}],
  "degree": 24,
  "seed": 3,
  "diagnostics": [
    {"op": "orthonormality_residual"},
    {"op": "shift_residual"},
    {"op": "kappa_ratio"},
    {"op": "monic_minimality"}
  ],
  "expectations": [
    {"quantity": "orthonormality_residual.residual", "max": 1e-9},
    {"quantity": "shift_residual.max_identity_gap", "max": 1e-8}
  ]
})";

nlohmann::json small_json() { return nlohmann::json::parse(small_scenario); }

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

std::string mutated_error(const std::function<void(nlohmann::json&)>& f) {
  auto j = small_json();
  f(j);
  return error_of(j.dump());
}

fs::path temp_dir(const std::string& tag) {
  const auto d = fs::temp_directory_path() / ("bergman_test_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + BERGMAN_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("scenario parsing accepts the small scenario") {
  const auto s = parse_scenario(small_scenario);
  CHECK(s.name == "small_disk");
  CHECK(s.degree == 24);
  CHECK(s.quadrature.target_degree == 52);
  CHECK(s.diagnostics.size() == 4);
  CHECK(s.diagnostics[2].id == "kappa_ratio");
  CHECK(s.expectations[0].max == 1e-9);
}

TEST_CASE("scenario parsing errors name their context") {
  const auto syntax = error_of("{\n  \"name\": \"x\",\n  \"degree\": ,\n}");
  CHECK(syntax.find("line 3") != std::string::npos);

  CHECK(mutated_error([](auto& j) { j["polynomial"] = {2, 1}; }).find("'polynomial'") == std::string::npos);
  CHECK(mutated_error([](auto& j) { j["polynomial"] = {1, 2}; }).find("'polynomial'") != std::string::npos);
  CHECK(mutated_error([](auto& j) { j["polynomial"] = nlohmann::json::array(); }).find("'polynomial'") !=
        std::string::npos);
  CHECK(mutated_error([](auto& j) { j["level"] = -1.0; }).find("'level'") != std::string::npos);
  CHECK(mutated_error([](auto& j) { j["degree"] = 3; }).find("'degree'") != std::string::npos);
  CHECK(mutated_error([](auto& j) { j["diagnostics"][0]["op"] = "nonsense"; }).find("nonsense") !=
        std::string::npos);
  CHECK(mutated_error([](auto& j) { j["colour"] = "blue"; }).find("colour") != std::string::npos);
  CHECK(mutated_error([](auto& j) { j["diagnostics"][2]["params"] = {{"bogus", 1}}; }).find("bogus") !=
        std::string::npos);
  CHECK(mutated_error([](auto& j) { j["expectations"][0]["quantity"] = "missing.value"; }).find("missing") !=
        std::string::npos);
  CHECK(mutated_error([](auto& j) { j["expectations"][0]["min"] = 0.0; }).find("expectations") !=
        std::string::npos);
  CHECK(mutated_error([](auto& j) { j["diagnostics"][1]["id"] = "kappa_ratio"; }).find("kappa_ratio") !=
        std::string::npos);
  CHECK(mutated_error([](auto& j) { j["parts"][0]["kind"] = "volume"; }).find("'parts") != std::string::npos);
}

TEST_CASE("describe and list") {
  const auto text = describe("kappa_ratio");
  CHECK(text.find("kappa") != std::string::npos);
  for (const auto& op : diagnostic_names()) CHECK_FALSE(describe(op).empty());
  CHECK_THROWS_AS(describe("nonsense"), InputError);

  std::vector<std::string> names;
  for (const auto& s : list_scenarios()) names.push_back(s.name);
  for (const char* n : {"disk", "two_ovals", "islands_q3", "boundary_atoms", "exterior_atoms"})
    CHECK_MESSAGE(std::find(names.begin(), names.end(), n) != names.end(), n);
}

TEST_CASE("run_scenario writes artifacts and is reproducible") {
  const auto a = temp_dir("repro_a");
  const auto b = temp_dir("repro_b");
  const auto s = parse_scenario(small_scenario);
  const auto ra = run_scenario(s, a);
  const auto rb = run_scenario(s, b);
  CHECK(ra.passed());
  CHECK(ra.errors.empty());
  CHECK(ra.quantity("kappa_ratio.extrapolated").has_value());
  CHECK_FALSE(ra.quantity("kappa_ratio.nonexistent").has_value());
  CHECK(fs::exists(a / "exports" / "hessenberg.csv"));
  CHECK(fs::exists(a / "exports" / "hessenberg.json"));
  CHECK(fs::exists(a / "sequences" / "kappa.csv"));
  CHECK_FALSE(fs::is_empty(a / "plotdata"));

  auto ja = nlohmann::json::parse(slurp(a / "report.json"));
  auto jb = nlohmann::json::parse(slurp(b / "report.json"));
  CHECK(ja.contains("timing"));
  ja.erase("timing");
  jb.erase("timing");
  CHECK(ja.dump() == jb.dump());
  CHECK(slurp(a / "exports" / "hessenberg.csv") == slurp(b / "exports" / "hessenberg.csv"));

  // every diagnostic reports exactly once
  CHECK(ja["diagnostics"].size() == 4);
}

TEST_CASE("overrides and failing expectations") {
  auto s = parse_scenario(small_scenario);
  RunOptions o;
  o.write_files = false;
  o.degree = 16;
  const auto r = run_scenario(s, temp_dir("override"), o);
  CHECK(r.json["effective"]["degree"] == 16);
  CHECK(r.passed());

  s.expectations[0].max = 1e-40;
  const auto f = run_scenario(s, temp_dir("failing"), o);
  CHECK_FALSE(f.passed());
  CHECK_FALSE(f.expectations[0].passed);
  CHECK(f.expectations[1].passed);
}

TEST_CASE("CLI exit codes") {
  const auto dir = temp_dir("cli");
  {
    std::ofstream(dir / "ok.json") << small_scenario;
    auto j = small_json();
    j["expectations"][0]["max"] = 1e-40;
    std::ofstream(dir / "fail.json") << j.dump(2);
    std::ofstream(dir / "bad.json") << "{ \"name\": ";
  }
  CHECK(run_cli("run \"" + (dir / "ok.json").string() + "\" --out \"" + (dir / "out_ok").string() + "\"") == 0);
  CHECK(fs::exists(dir / "out_ok" / "report.json"));
  CHECK(run_cli("run \"" + (dir / "fail.json").string() + "\" --out \"" + (dir / "out_fail").string() + "\"") == 1);
  CHECK(run_cli("run \"" + (dir / "bad.json").string() + "\" --out \"" + (dir / "out_bad").string() + "\"") == 2);
  CHECK(run_cli("run \"" + (dir / "missing.json").string() + "\"") == 2);
  CHECK(run_cli("describe kappa_ratio") == 0);
  CHECK(run_cli("describe nonsense") == 2);
  CHECK(run_cli("list") == 0);
  CHECK(run_cli("") != 0);
}
