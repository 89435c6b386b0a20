#include "doctest.h"

#include "dilatio/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace dilatio;
namespace fs = std::filesystem;

namespace {

const std::string kSource = DILATIO_SOURCE_DIR;

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("dilatio-cli-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_text(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DILATIO_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_path(const std::string& name) { return kSource + "/configs/" + name; }

int error_line(const std::string& text) {
  try {
    load_scenario(parse_config(text));
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

Value random_value(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 3 : 2);
  switch (pick(rng)) {
    case 0: {
      std::uniform_real_distribution<double> u(-1e3, 1e3);
      const double v = std::uniform_int_distribution<int>(0, 9)(rng) == 0 ? kInf : u(rng) * std::pow(10.0, double(rng() % 20) - 10);
      return Value::of_number(v);
    }
    case 1: {
      static const char* words[] = {"gaussian", "int-half", "a.b+c", "x_1", "cauchy-schwarz"};
      return Value::of_word(words[rng() % 5]);
    }
    case 2: {
      Value v;
      v.type = Value::Type::String;
      static const char* texts[] = {"out/dir", "with \"quotes\"", "back\\slash", "", "sp ace"};
      v.text = texts[rng() % 5];
      return v;
    }
    default: {
      Value v;
      v.type = Value::Type::List;
      const int n = int(rng() % 4);
      for (int i = 0; i < n; ++i) v.items.push_back(random_value(rng, depth - 1));
      return v;
    }
  }
}

}  // namespace

TEST_CASE("config grammar") {
  const ConfigTree t = parse_config(R"(# comment
measure g { kind = gaussian  dim = 2 }   # trailing
check "quoted id" {
  list = [1, -2.5e3, [inf, -inf], word, "s",]
}
)");
  REQUIRE(t.blocks.size() == 2);
  CHECK(t.blocks[0].kind == "measure");
  CHECK(t.blocks[0].id == "g");
  CHECK(t.blocks[0].find("dim")->value.number == 2);
  CHECK(t.blocks[1].id == "quoted id");
  const Value& list = t.blocks[1].find("list")->value;
  REQUIRE(list.items.size() == 5);
  CHECK(list.items[1].number == -2500);
  CHECK(list.items[2].items[1].number == -kInf);
  CHECK(list.items[3].type == Value::Type::Word);
  CHECK(list.items[4].type == Value::Type::String);
  CHECK(t.blocks[1].line == 3);
}

TEST_CASE("syntax errors carry line and column") {
  auto where = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::make_pair(e.line, e.column);
    }
    return std::make_pair(-1, -1);
  };
  CHECK(where("measure g {\n  dim = \n}") == std::make_pair(3, 1));
  CHECK(where("measure g {\n  dim 2\n}") == std::make_pair(2, 7));
  CHECK(where("measure g {\n  a = 1\n  a = 2\n}") == std::make_pair(3, 3));
  CHECK(where("measure g {\n  a = \"open\n}") == std::make_pair(2, 7));
  CHECK(where("measure g {\n  a = 1.2.3\n}") == std::make_pair(2, 7));
  CHECK(where("measure g {\n  a = [1 2]\n}") == std::make_pair(2, 10));
  CHECK(where("measure g {") == std::make_pair(1, 12));
  CHECK(where("a = 1") == std::make_pair(1, 3));
  CHECK(where("x { y = @ }") == std::make_pair(1, 9));
}

TEST_CASE("round trip of parse and serialize") {
  for (const char* name : {"paper-suite.cfg", "kappa5-fails.cfg", "empty.cfg", "sweeps.cfg"}) {
    const ConfigTree t = read_config_file(config_path(name));
    const std::string once = serialize_config(t);
    const ConfigTree again = parse_config(once);
    CHECK(again == t);
    CHECK(serialize_config(again) == once);
  }
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    ConfigTree t;
    const int blocks = int(rng() % 4);
    for (int b = 0; b < blocks; ++b) {
      Block block;
      block.kind = "block";
      block.id = b % 2 ? "id-" + std::to_string(b) : (b == 2 ? "needs quoting" : "");
      const int entries = int(rng() % 5);
      for (int e = 0; e < entries; ++e) block.entries.push_back({"k" + std::to_string(e), random_value(rng, 2)});
      t.blocks.push_back(block);
    }
    const std::string text = serialize_config(t);
    CAPTURE(text);
    CHECK(parse_config(text) == t);
    CHECK(serialize_config(parse_config(text)) == text);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_number(-0.0) == "-0");
  CHECK(parse_config("a { x = " + format_number(1.0 / 3.0) + " }").blocks[0].find("x")->value.number == 1.0 / 3.0);
}

TEST_CASE("references and keys are validated at load time") {
  const std::string base = "measure g1 {\n  kind = gaussian\n  dim = 1\n}\nbody k {\n  kind = interval\n  half_width = 1\n}\n";
  CHECK(error_line(base + "check c {\n  kind = nonsense\n}\n") == 10);
  CHECK(error_line(base + "check c {\n  kind = dilation\n  measure = g1\n  body = nowhere\n}\n") == 12);
  CHECK(error_line(base + "check c {\n  kind = dilation\n  measure = g1\n  body = k\n  colour = 3\n}\n") == 13);
  CHECK(error_line(base + "check c {\n  kind = dilation\n  measure = g1\n  body = k\n  kappa = two\n}\n") == 13);
  CHECK(error_line(base + "mystery x {\n}\n") == 9);
  CHECK(error_line("measure a {\n  kind = product\n  first = b\n  second = b\n}\nmeasure b {\n  kind = product\n  first = a\n  second = a\n}\n") > 0);
  CHECK(error_line("measure w {\n  kind = gaussian\n  dim = 0\n}\n") > 0);
  CHECK(error_line(base + "check c {\n  kind = dilation\n  measure = g1\n  body = k\n}\n") == -1);
  CHECK(std::find(check_kinds().begin(), check_kinds().end(), "reconstruction") != check_kinds().end());
}

TEST_CASE("seeds and reports") {
  CHECK(check_seed("a", 0) != check_seed("b", 0));
  CHECK(check_seed("a", 1) == (check_seed("a", 0) ^ 1));
  const ScenarioConfig sc = load_scenario(read_config_file(config_path("kappa5-fails.cfg")));
  const auto results = run_checks(sc);
  REQUIRE(results.size() == 1);
  CHECK(results[0].status == Status::Fail);
  CHECK(exit_code(results) == 1);
  CHECK(results[0].seed == check_seed("dilation-kappa5", 7));
  const std::string csv = report_csv(results);
  CHECK(csv.rfind("id,lhs,rhs,stderr,status,seed\n", 0) == 0);
  CHECK(csv.find("dilation-kappa5,") != std::string::npos);
  CHECK(report_json(results, sc.budget).find("\"budget\"") != std::string::npos);
  CHECK(exit_code({}) == 0);
  CheckResult open;
  open.status = Status::Inconclusive;
  CHECK(exit_code({open}) == 2);
  CheckResult info = report("x", Estimate::exact(1.0), "info");
  CHECK(exit_code({info}) == 0);
}

TEST_CASE("reports do not depend on the worker count") {
  const ScenarioConfig sc = load_scenario(read_config_file(config_path("paper-suite.cfg")));
  const std::string one = report_csv(run_checks(sc, {{}, 1}));
  const std::string three = report_csv(run_checks(sc, {{}, 3}));
  CHECK(one == three);
}

TEST_CASE("command line exit codes") {
  const fs::path out = scratch();
  CHECK(run_cli("--config " + config_path("empty.cfg") + " --out " + (out / "empty").string()) == 0);
  CHECK(read_text(out / "empty" / "report.csv") == "id,lhs,rhs,stderr,status,seed\n");
  CHECK(run_cli("--config " + config_path("kappa5-fails.cfg") + " --out " + (out / "k5").string()) == 1);
  CHECK(read_text(out / "k5" / "report.csv").find(",fail,") != std::string::npos);

  const fs::path inconclusive = write_text("open.cfg", R"(function sq2 {
  kind = radial
  dim = 2
  p = 2
}
check gauss {
  kind = gaussian-suite
  function = sq2
}
)");
  CHECK(run_cli("--config " + inconclusive.string() + " --out " + (out / "open").string()) == 2);

  const fs::path broken = write_text("broken.cfg", "measure g {\n  kind = gaussian\n  dim = \n}\n");
  CHECK(run_cli("--config " + broken.string() + " --out " + (out / "broken").string()) == 3);
  const std::string cmd = std::string(DILATIO_CLI) + " --config " + broken.string() + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  char buf[512] = {};
  const std::size_t got = fread(buf, 1, sizeof buf - 1, pipe);
  pclose(pipe);
  CHECK(std::string(buf, got).find("broken.cfg:4:1:") != std::string::npos);

  CHECK(run_cli("--config " + (out / "missing.cfg").string()) == 3);
  CHECK(run_cli("--config " + config_path("kappa5-fails.cfg") + " --checks nope --out " + (out / "k5").string()) == 3);
  CHECK(run_cli("--config " + config_path("paper-suite.cfg") + " --checks dilation-g1-int1,entropy-g1-constant --out " +
                (out / "subset").string()) == 0);
  const std::string subset = read_text(out / "subset" / "report.csv");
  CHECK(std::count(subset.begin(), subset.end(), '\n') == 3);
  CHECK(subset.find("entropy-g1-constant,") != std::string::npos);
  CHECK(run_cli("--config " + config_path("empty.cfg") + " --budget-scale -1") == 3);
}

TEST_CASE("same seed gives byte-identical reports") {
  const fs::path out = scratch();
  const std::string base = "--config " + config_path("paper-suite.cfg") + " --seed 5 --out ";
  REQUIRE(run_cli(base + (out / "a").string()) == 0);
  REQUIRE(run_cli(base + (out / "b").string()) == 0);
  CHECK(read_text(out / "a" / "report.csv") == read_text(out / "b" / "report.csv"));
  CHECK(read_text(out / "a" / "report.json") == read_text(out / "b" / "report.json"));
  CHECK(read_text(out / "a" / "report.csv").find(",5\n") == std::string::npos);
}

TEST_CASE("sweeps") {
  const ConfigTree tree = read_config_file(config_path("sweeps.cfg"));
  const SweepRequest req = parse_sweep("dilation.kappa=0.5,1,1.5,2");
  CHECK(req.grid.size() == 4);
  std::istringstream csv(run_sweep(tree, req, 1, std::nullopt));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "value,lhs,rhs,margin,stderr,id");
  std::vector<double> margins;
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 6);
    margins.push_back(std::stod(cells[3]));
  }
  REQUIRE(margins.size() == 4);
  for (std::size_t i = 1; i + 1 < margins.size(); ++i)
    CHECK(margins[i + 1] - margins[i] == doctest::Approx(margins[i] - margins[i - 1]).epsilon(1e-9));
  CHECK(margins.back() < margins.front());

  std::istringstream ratio(run_sweep(tree, parse_sweep("ratio.t=0.3,0.1,0.03,0.01"), 1, std::nullopt));
  std::getline(ratio, line);
  double prev = kInf;
  int rows = 0;
  while (std::getline(ratio, line)) {
    const double lhs = std::stod(line.substr(line.find(',') + 1));
    CHECK(lhs < prev);
    CHECK(lhs > 1.0);
    prev = lhs;
    ++rows;
  }
  CHECK(rows == 4);

  std::istringstream mom(run_sweep(tree, parse_sweep("moment.q=1,2,4,8"), 1, std::nullopt));
  std::getline(mom, line);
  int bounded = 0;
  while (std::getline(mom, line)) {
    if (line.find("moment/moment-") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
    CHECK(std::stod(cells[1]) <= std::stod(cells[2]) * (1 + 1e-12));
    CHECK(std::stod(cells[2]) == doctest::Approx(std::stod(cells[0])).epsilon(1e-9));
    ++bounded;
  }
  CHECK(bounded == 4);

  CHECK_THROWS_AS(run_sweep(tree, parse_sweep("dilation.measure=1"), 1, std::nullopt), ConfigError);
  CHECK_THROWS_AS(run_sweep(tree, parse_sweep("nothing=1"), 1, std::nullopt), ConfigError);
  CHECK_THROWS_AS(parse_sweep("kappa"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("kappa=1,x"), ConfigError);
  CHECK(run_cli("--config " + config_path("sweeps.cfg") + " --sweep dilation.measure=1 --out " +
                (scratch() / "sw").string()) == 3);
  CHECK(run_cli("--config " + config_path("sweeps.cfg") + " --sweep ratio.t=0.1,0.01 --out " +
                (scratch() / "sw").string()) == 0);
  CHECK(fs::exists(scratch() / "sw" / "sweep.csv"));
}
