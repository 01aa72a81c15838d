#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "samdh/error.hpp"
#include "samdh/scenario.hpp"

using namespace samdh;
using nlohmann::json;

namespace {

json small_doc() {
  return json::parse(R"({
    "schema": 1,
    "name": "small",
    "seed": 4,
    "duration_days": 2,
    "links": {"default": {"bandwidth": 50e6, "latency": 0.01}},
    "stations": [
      {"id": "ana", "domain": "fnal", "cache_bytes": 2e9, "groups": {"dzero": 0.5, "dev": 0.5},
       "consumer_slots": 4, "max_concurrent_stages": 2},
      {"id": "mc-site", "domain": "europe", "cache_bytes": 1e9, "groups": {"mc": 1.0}}
    ],
    "mss": [{"id": "enstore", "domain": "fnal", "drives": 2}],
    "routes": [{"station": "mc-site", "destination": "fnal", "next_hop": "ana", "cache_in_transit": true}],
    "files": [{"prefix": "thumb", "count": 20, "size_bytes": 50e6, "tier": "secondary", "archive_to": "enstore"}],
    "datasets": [{"name": "thumbs", "tier": "secondary"}],
    "workloads": [
      {"name": "an", "kind": "analysis", "station": "ana", "group": "dzero", "dataset": "thumbs",
       "reuse_skew": 0.8, "arrival_rate": 6, "consumers": 2, "think_time": 30, "files_per_project": 5},
      {"name": "mc", "kind": "mc_import", "station": "mc-site", "archive": "enstore",
       "arrival_rate": 4, "file_size": 20e6}
    ]
  })");
}

ConfigError config_error(const json& doc) {
  try {
    parse_scenario(doc.dump());
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a config error");
  return ConfigError("", "");
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("parse a complete document") {
    const auto c = parse_scenario(small_doc().dump());
    CHECK(c.name == "small");
    CHECK(c.seed == 4);
    REQUIRE(c.stations.size() == 2);
    CHECK(c.stations[0].cache.quota == 2'000'000'000);
    CHECK(c.stations[0].cache.group_shares.at("dev") == 0.5);
    CHECK(c.stations[1].consumer_slots == 1);
    CHECK(c.routes.at(0).cache_in_transit);
    CHECK(c.mss.at(0).library.drives == 2);
    CHECK(c.mss.at(0).library.mount_latency == 60.0);
    CHECK(c.files.at(0).tier == Tier::secondary);
    CHECK(c.workloads.at(1).kind == WorkloadKind::mc_import);
  }

  TEST_CASE("unknown keys name their path") {
    auto doc = small_doc();
    doc["bogus"] = 1;
    CHECK(config_error(doc).field_path() == "bogus");
    doc = small_doc();
    doc["stations"][1]["cache_size"] = 1;
    CHECK(config_error(doc).field_path() == "stations[1].cache_size");
    doc = small_doc();
    doc["links"]["default"]["bw"] = 1;
    CHECK(config_error(doc).field_path() == "links.default.bw");
  }

  TEST_CASE("cross-reference errors") {
    auto doc = small_doc();
    doc["routes"][0]["next_hop"] = "nowhere";
    const auto e = config_error(doc);
    CHECK(e.field_path() == "routes[0].next_hop");
    CHECK(e.code() == ErrorCode::config_invalid);
    const auto j = json::parse(error_json(e));
    CHECK(j["error"] == "ConfigInvalid");
    CHECK(j["field"] == "routes[0].next_hop");

    doc = small_doc();
    doc["schema"] = 2;
    CHECK(config_error(doc).field_path() == "schema");
    doc = small_doc();
    doc.erase("schema");
    CHECK(config_error(doc).field_path() == "schema");
    doc = small_doc();
    doc["workloads"][0]["dataset"] = "missing";
    CHECK(config_error(doc).field_path() == "workloads[0].dataset");
    doc = small_doc();
    doc["workloads"][0]["group"] = "mc";
    CHECK(config_error(doc).field_path() == "workloads[0].group");
    doc = small_doc();
    doc["stations"][0]["groups"] = {{"dzero", 0.5}, {"dev", 0.4}};
    CHECK(config_error(doc).field_path().rfind("stations[0]", 0) == 0);
    doc = small_doc();
    // An exact-node entry overrides same-domain delivery, closing a loop
    // with mc-site's route toward fnal.
    doc["routes"].push_back({{"station", "ana"}, {"destination", "enstore"}, {"next_hop", "mc-site"}});
    CHECK(config_error(doc).field_path() == "routes[1]");
    doc = small_doc();
    doc["stations"][0]["cache_mode"] = "striped";
    CHECK(config_error(doc).field_path() == "stations[0].cache_mode");
    doc = small_doc();
    doc["files"][0]["cached_at"] = {"ana"};
    doc["files"][0]["count"] = 100;
    CHECK(config_error(doc).field_path() == "files[0].cached_at[0]");
  }

  TEST_CASE("malformed json") {
    try {
      parse_scenario("{ not json");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(e.field_path() == "<document>");
    }
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), Error);
  }

  TEST_CASE("runs are deterministic and audited") {
    const auto c = parse_scenario(small_doc().dump());
    const auto a = run_scenario(c);
    const auto b = run_scenario(c);
    CHECK(a.metrics_csv == b.metrics_csv);
    CHECK(a.transfers_csv == b.transfers_csv);
    CHECK(a.trace_csv == b.trace_csv);
    CHECK(a.mss_csv == b.mss_csv);
    CHECK(a.summary_txt == b.summary_txt);
    CHECK(a.audit.ok);
    CHECK(a.replay.files_delivered > 0);
    CHECK(a.replay.imports_archived > 0);
    const auto other = run_scenario(c, RunOptions{.seed = 5});
    CHECK(other.trace_csv != a.trace_csv);
  }

  TEST_CASE("run length override") {
    const auto c = parse_scenario(small_doc().dump());
    const auto one = run_scenario(c, RunOptions{.until_days = 1});
    CHECK(one.report.last_day <= 1);
    CHECK(one.trace_csv.size() < run_scenario(c).trace_csv.size());
  }

  TEST_CASE("output files") {
    const auto c = parse_scenario(small_doc().dump());
    const auto out = run_scenario(c);
    const auto dir = std::filesystem::temp_directory_path() / "samdh-scenario-test";
    std::filesystem::remove_all(dir);
    write_outputs(out, dir);
    for (const char* name : {"trace.csv", "transfers.csv", "mss.csv", "metrics.csv", "projects.csv", "summary.txt"}) {
      CHECK(std::filesystem::exists(dir / name));
    }
    std::ifstream in(dir / "metrics.csv");
    std::stringstream text;
    text << in.rdbuf();
    CHECK(text.str() == out.metrics_csv);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("bundled scenarios load") {
    const std::filesystem::path dir = SAMDH_SCENARIO_DIR;
    int loaded = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".json") continue;
      INFO(entry.path().string());
      CHECK_NOTHROW(load_scenario(entry.path()));
      ++loaded;
    }
    CHECK(loaded >= 4);
  }
}
