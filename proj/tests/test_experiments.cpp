#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sdelaw/experiments.hpp"

using namespace sdelaw;
using nlohmann::json;

TEST_CASE("config parsing: defaults, overrides, and field-referenced errors") {
  const ExperimentConfig base = parse_config(json{{"experiment", "constants"}});
  CHECK(base.experiment == "constants");
  CHECK(base.M == 2000);
  CHECK(base.seed == 1);
  CHECK(base.model.alpha == 1.0);

  const ExperimentConfig c = parse_config(json{{"experiment", "clt"},
                                               {"model", {{"alpha", 2.0}, {"T", 10.0}}},
                                               {"scheme", {{"family", "beta"}, {"param", 0.25}, {"N", 32}}},
                                               {"M", 500},
                                               {"seed", 9}});
  CHECK(c.model.alpha == 2.0);
  CHECK(c.model.T == 10.0);
  CHECK(c.scheme.family == SchemeFamily::beta);
  CHECK(c.scheme.N == 32);
  CHECK(c.M == 500);

  const auto expect_mention = [](const json& doc, const std::string& field) {
    try {
      parse_config(doc);
      FAIL_CHECK("expected a parse error mentioning ", field);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  expect_mention(json{{"experiment", "frobnicate"}}, "experiment");
  expect_mention(json{{"experiment", "clt"}, {"scheme", {{"family", "nope"}}}}, "family");
  expect_mention(json{{"experiment", "clt"}, {"model", {{"T", -1.0}}}}, "T");
  expect_mention(json{{"experiment", "clt"}, {"M", 0}}, "M");
}

TEST_CASE("effective config and hash are stable and seed-sensitive") {
  const ExperimentConfig a = parse_config(json{{"experiment", "constants"}});
  const ExperimentConfig b = parse_config(json{{"experiment", "constants"}});
  CHECK(config_hash(a) == config_hash(b));

  ExperimentConfig c = a;
  c.seed = 1234;
  CHECK(config_hash(c) != config_hash(a));

  const json eff = a.effective();
  CHECK(eff.contains("experiment"));
  CHECK(eff.contains("seed"));
  CHECK(eff.contains("model"));
}

TEST_CASE("identical configs produce byte-identical tables") {
  ExperimentConfig cfg = parse_config(json{{"experiment", "constants"},
                                           {"model", {{"T", 5.0}}},
                                           {"N_list", {512, 1024}}});
  const ResultTable t1 = run_experiment(cfg);
  const ResultTable t2 = run_experiment(cfg);
  CHECK(t1.to_csv() == t2.to_csv());
  CHECK_FALSE(t1.rows.empty());
  CHECK(t1.metadata.contains("config_hash"));
  CHECK(t1.metadata.contains("effective_config"));
}

TEST_CASE("csv serialization: header, quoting, decimal points") {
  ResultTable t;
  t.columns = {"name", "value"};
  t.add_row({R"(needs,"quotes")", format_double(0.5)});
  const std::string csv = t.to_csv();
  CHECK(csv.find("name,value\n") == 0);
  CHECK(csv.find("\"needs,\"\"quotes\"\"\"") != std::string::npos);
  CHECK(csv.find("0.5") != std::string::npos);
  // Round-trippable float rendering.
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
}

TEST_CASE("catalog listing is stable and complete") {
  const ResultTable cat = list_catalog();
  REQUIRE_FALSE(cat.rows.empty());
  CHECK(cat.columns[0] == "family");
  CHECK(cat.rows.front()[0] == "beta");
  bool found_optimal = false;
  for (const auto& row : cat.rows) found_optimal |= row[0] == "optimal";
  CHECK(found_optimal);
  CHECK(list_catalog().to_csv() == cat.to_csv());
}

TEST_CASE("write_result emits the table and a metadata sidecar") {
  ExperimentConfig cfg = parse_config(json{{"experiment", "constants"},
                                           {"model", {{"T", 2.0}}},
                                           {"N_list", {256, 512}}});
  const ResultTable t = run_experiment(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "sdelaw_test_out";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  const auto csv_path = write_result(t, cfg, dir, "csv");
  CHECK(std::filesystem::exists(csv_path));
  CHECK(csv_path.extension() == ".csv");
  auto meta_path = csv_path;
  meta_path.replace_extension(".meta.json");
  REQUIRE(std::filesystem::exists(meta_path));
  std::ifstream meta_in(meta_path);
  json meta = json::parse(meta_in);
  CHECK(meta["experiment"] == "constants");

  const auto json_path = write_result(t, cfg, dir, "json");
  CHECK(json_path.extension() == ".json");
  std::ifstream in(json_path);
  const json doc = json::parse(in);
  CHECK(doc.contains("columns"));
  CHECK(doc.contains("rows"));
  std::filesystem::remove_all(dir);
}
