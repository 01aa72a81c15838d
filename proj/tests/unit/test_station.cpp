#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>

#include "fixtures.hpp"
#include "samdh/error.hpp"
#include "samdh/grid.hpp"

using namespace samdh;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

// Grid with a local station, a peer, and a tape library, all linked.
struct StationFixture {
  Grid grid{3};
  StationFixture() {
    grid.fabric().set_default_link({100e6, 0.01});
    grid.add_station(fixture::station("local", "home", 10'000'000, 4, 2));
    grid.add_station(fixture::station("peer", "away", 10'000'000));
    TapeLibraryConfig lib;
    lib.tape_capacity = 100'000'000;
    lib.mount_latency = 1.0;
    grid.add_mss(lib, "tapes");
    grid.routes().add_route("local", "*", "peer");
    grid.routes().add_route("local", "tapes", "enstore");
    grid.routes().add_route("peer", "home", "local");
    grid.routes().add_route("enstore", "*", "local");
  }
  Station& local() { return grid.station("local"); }
  FileId archived(const std::string& name, Bytes size) {
    const auto f = fixture::declare(grid, name, size);
    grid.mss("enstore").library().preload(f);
    return f;
  }
};

}  // namespace

TEST_SUITE("station") {
  TEST_CASE_FIXTURE(StationFixture, "dispatch follows snapshot order across consumers") {
    std::vector<FileId> files;
    for (int i = 0; i < 3; ++i) files.push_back(fixture::cached(grid, "local", "f" + std::to_string(i), 1000));
    const auto p = local().start_project_with_files(files, "g", 2);
    CHECK(local().project_state(p) == ProjectState::running);
    CHECK(local().project_snapshot(p).size() == 3);

    std::vector<std::pair<std::uint32_t, std::optional<FileId>>> log;
    auto record = [&](const Delivery& d) {
      log.emplace_back(d.consumer, d.end_of_stream ? std::nullopt : std::optional<FileId>(d.file));
    };
    local().next_file(p, 0, record);
    local().next_file(p, 1, record);
    grid.kernel().run();
    local().release_file(p, 0, files[0]);
    local().next_file(p, 0, record);
    grid.kernel().run();
    local().release_file(p, 1, files[1]);
    local().next_file(p, 1, record);
    grid.kernel().run();
    REQUIRE(log.size() == 4);
    CHECK(log[0] == std::make_pair(0u, std::optional<FileId>(files[0])));
    CHECK(log[1] == std::make_pair(1u, std::optional<FileId>(files[1])));
    CHECK(log[2] == std::make_pair(0u, std::optional<FileId>(files[2])));
    CHECK(log[3] == std::make_pair(1u, std::optional<FileId>()));
    CHECK(local().project_state(p) == ProjectState::draining);
    local().release_file(p, 0, files[2]);
    CHECK(local().project_state(p) == ProjectState::done);
  }

  TEST_CASE_FIXTURE(StationFixture, "project start rules") {
    const auto empty = grid.catalog().define_dataset("empty", DatasetPredicate{.tier = Tier::montecarlo});
    CHECK(local().project_state(local().start_project(empty, "g", 1)) == ProjectState::done);
    CHECK(code_of([&] { local().start_project(empty, "g", 0); }) == ErrorCode::too_many_consumers);
    CHECK(code_of([&] { local().start_project(empty, "g", 5); }) == ErrorCode::too_many_consumers);
    CHECK(code_of([&] { local().start_project(DatasetId{77}, "g", 1); }) == ErrorCode::unknown_dataset);
    CHECK(code_of([&] { local().start_project(empty, "nobody", 1); }) == ErrorCode::unknown_group);
    CHECK(code_of([&] { local().next_file("local/p9999", 0, {}); }) == ErrorCode::unknown_project);
    const auto p = local().start_project(empty, "g", 1);
    CHECK(p == "local/p0002");
    CHECK(code_of([&] { local().next_file(p, 1, {}); }) == ErrorCode::unknown_consumer);
  }

  TEST_CASE_FIXTURE(StationFixture, "snapshot is taken at start") {
    fixture::cached(grid, "local", "raw-a", 10);
    const auto ds = grid.catalog().define_dataset("raw", DatasetPredicate{.tier = Tier::raw});
    const auto p = local().start_project(ds, "g", 1);
    fixture::cached(grid, "local", "raw-b", 10);
    CHECK(local().project_snapshot(p).size() == 1);
  }

  TEST_CASE_FIXTURE(StationFixture, "cache hit counts consumption only") {
    const auto f = fixture::cached(grid, "local", "hit", 5000);
    const auto p = local().start_project_with_files({f}, "g", 1);
    Delivery got;
    local().next_file(p, 0, [&](const Delivery& d) { got = d; });
    grid.kernel().run();
    CHECK(got.file == f);
    CHECK(got.handle == HandleKind::local);
    CHECK(grid.metrics().total("local", Metric::consumed_bytes) == 5000);
    CHECK(grid.metrics().total("local", Metric::delivered_in_bytes) == 0);
    CHECK(local().cache().lookup(f)->pin_count == 1);
    CHECK(local().hit_bytes() == 5000);
  }

  TEST_CASE_FIXTURE(StationFixture, "miss stages from tape and pins until release") {
    const auto f = archived("tape-file", 2'000'000);
    const auto p = local().start_project_with_files({f}, "g", 1);
    Delivery got;
    local().next_file(p, 0, [&](const Delivery& d) { got = d; });
    grid.kernel().run();
    CHECK(got.file == f);
    CHECK_FALSE(got.failed);
    CHECK(got.at > 1.0);
    CHECK(grid.metrics().total("local", Metric::delivered_in_bytes) == 2'000'000);
    CHECK(grid.metrics().total("local", Metric::consumed_bytes) == 2'000'000);
    CHECK(grid.metrics().total("enstore", Metric::mss_read_bytes) == 2'000'000);
    CHECK(grid.catalog().replica_at(f, Location::station("local")));
    CHECK(local().cache().lookup(f)->pin_count == 1);
    local().release_file(p, 0, f);
    CHECK(local().cache().lookup(f)->pin_count == 0);
    CHECK(code_of([&] { local().release_file(p, 0, f); }) == ErrorCode::not_held);
    CHECK(local().project_state(p) == ProjectState::done);
    // Evictable again.
    const auto big = fixture::declare(grid, "big", 10'000'000);
    CHECK(local().cache().admit(big, 10'000'000, "g", grid.kernel().now()).admitted);
    CHECK(grid.audit().ok);
  }

  TEST_CASE_FIXTURE(StationFixture, "miss pulls from a peer along the route") {
    const auto f = fixture::cached(grid, "peer", "remote", 1'000'000);
    const auto p = local().start_project_with_files({f}, "g", 1);
    local().next_file(p, 0, {});
    grid.kernel().run();
    REQUIRE(grid.fabric().log().size() == 1);
    CHECK(grid.fabric().log()[0].src == "peer");
    CHECK(grid.metrics().total("peer", Metric::sent_out_bytes) == 1'000'000);
    CHECK(grid.metrics().total("local", Metric::delivered_in_bytes) == 1'000'000);
    CHECK(local().project_reports().at(0).bytes_delivered == 1'000'000);
  }

  TEST_CASE_FIXTURE(StationFixture, "network-attached delivery never enters the local cache") {
    auto cfg = fixture::station("reader", "home", 1'000'000);
    cfg.delivery_mode = DeliveryMode::network_attached;
    grid.add_station(cfg);
    const auto f = fixture::cached(grid, "peer", "streamed", 4'000'000);
    auto& reader = grid.station("reader");
    const auto p = reader.start_project_with_files({f}, "g", 1, 10.0);
    Delivery got, consumed;
    reader.next_file(p, 0, [&](const Delivery& d) { got = d; }, [&](const Delivery& d) { consumed = d; });
    grid.kernel().run_until(5.0);
    CHECK(got.handle == HandleKind::remote_stream);
    CHECK(grid.station("peer").cache().lookup(f)->pin_count == 1);
    grid.kernel().run();
    CHECK(consumed.file == f);
    CHECK(consumed.at == doctest::Approx(10.0));
    CHECK_FALSE(reader.cache().contains(f));
    CHECK(grid.metrics().total("reader", Metric::consumed_bytes) == 4'000'000);
    CHECK(grid.metrics().total("reader", Metric::delivered_in_bytes) == 0);
    CHECK(grid.metrics().total("reader", Metric::remote_stream_bytes) == 4'000'000);
    CHECK(grid.station("peer").cache().lookup(f)->pin_count == 0);
    reader.release_file(p, 0, f);
    CHECK(reader.project_state(p) == ProjectState::done);
  }

  TEST_CASE_FIXTURE(StationFixture, "consumer must release before asking again") {
    const auto a = fixture::cached(grid, "local", "a", 10);
    const auto b = fixture::cached(grid, "local", "b", 10);
    const auto p = local().start_project_with_files({a, b}, "g", 1);
    local().next_file(p, 0, {});
    CHECK(code_of([&] { local().next_file(p, 0, {}); }) == ErrorCode::consumer_busy);
    CHECK(code_of([&] { local().release_file(p, 0, b); }) == ErrorCode::not_held);
  }

  TEST_CASE_FIXTURE(StationFixture, "exhausted retries fail the delivery") {
    const auto f = fixture::cached(grid, "peer", "flaky", 1000);
    grid.set_fault_profile(FaultProfile::uniform(1.0));
    const auto p = local().start_project_with_files({f}, "g", 1);
    Delivery got;
    local().next_file(p, 0, [&](const Delivery& d) { got = d; });
    grid.kernel().run();
    CHECK(got.failed);
    CHECK(local().failed_deliveries() == 1);
    CHECK_FALSE(local().cache().contains(f));
    CHECK(grid.metrics().total("local", Metric::consumed_bytes) == 0);
    CHECK(local().project_state(p) == ProjectState::done);
    CHECK(grid.audit().ok);
  }

  TEST_CASE_FIXTURE(StationFixture, "concurrent requests for one file share a stage") {
    const auto f = archived("shared", 1'000'000);
    const auto p1 = local().start_project_with_files({f}, "g", 1);
    const auto p2 = local().start_project_with_files({f}, "g", 1);
    int delivered = 0;
    local().next_file(p1, 0, [&](const Delivery&) { ++delivered; });
    local().next_file(p2, 0, [&](const Delivery&) { ++delivered; });
    grid.kernel().run();
    CHECK(delivered == 2);
    CHECK(grid.metrics().total("local", Metric::delivered_in_bytes) == 1'000'000);
    CHECK(grid.metrics().total("local", Metric::consumed_bytes) == 2'000'000);
    CHECK(local().cache().lookup(f)->pin_count == 2);
  }

  TEST_CASE_FIXTURE(StationFixture, "random interleavings deliver every file exactly once") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Grid g(seed);
      g.fabric().set_default_link({50e6, 0.01});
      g.add_station(fixture::station("s", "home", 6'000'000, 5, 2));
      g.add_station(fixture::station("peer", "away", 100'000'000));
      TapeLibraryConfig lib;
      lib.mount_latency = 2.0;
      g.add_mss(lib, "tapes");
      g.routes().add_route("s", "*", "peer");
      g.routes().add_route("s", "tapes", "enstore");
      g.routes().add_route("enstore", "*", "s");
      g.routes().add_route("peer", "home", "s");
      SplitMix64 rng(seed);
      std::vector<FileId> files;
      for (int i = 0; i < 30; ++i) {
        const std::string name = "f" + std::to_string(i);
        const Bytes size = 100'000 + rng.below(900'000);
        switch (rng.below(3)) {
          case 0: {
            // Also on tape: the cached copy may be evicted before use.
            files.push_back(fixture::cached(g, "s", name, size));
            g.mss("enstore").library().preload(files.back());
            break;
          }
          case 1: files.push_back(fixture::cached(g, "peer", name, size)); break;
          default: {
            files.push_back(fixture::declare(g, name, size));
            g.mss("enstore").library().preload(files.back());
          }
        }
      }
      auto& s = g.station("s");
      const std::uint32_t consumers = 1 + static_cast<std::uint32_t>(rng.below(5));
      const auto p = s.start_project_with_files(files, "g", consumers, 1.0);
      std::vector<FileId> delivered;
      std::size_t max_inflight = 0;
      g.kernel().set_observer([&] { max_inflight = std::max(max_inflight, s.inflight_stages()); });
      std::function<void(std::uint32_t)> ask = [&](std::uint32_t c) {
        s.next_file(p, c, [&, c](const Delivery& d) {
          if (d.end_of_stream) return;
          REQUIRE_FALSE(d.failed);
          delivered.push_back(d.file);
          g.kernel().schedule(static_cast<double>(rng.below(20)), [&, c, f = d.file] {
            s.release_file(p, c, f);
            ask(c);
          });
        });
      };
      for (std::uint32_t c = 0; c < consumers; ++c) g.kernel().schedule(static_cast<double>(rng.below(5)), [&, c] { ask(c); });
      g.kernel().run();
      INFO("seed " << seed);
      CHECK(s.project_state(p) == ProjectState::done);
      auto sorted_delivered = delivered;
      auto sorted_files = files;
      std::sort(sorted_delivered.begin(), sorted_delivered.end());
      std::sort(sorted_files.begin(), sorted_files.end());
      CHECK(sorted_delivered == sorted_files);
      CHECK(max_inflight <= 2);
      CHECK(s.peak_inflight_stages() <= 2);
      // Every consumed byte was resident or staged.
      CHECK(g.metrics().total("s", Metric::consumed_bytes) == s.hit_bytes() + s.staged_bytes());
      CHECK(g.audit().ok);
    }
  }

  TEST_CASE_FIXTURE(StationFixture, "nfs-shared reads cross the shared server link") {
    auto cfg = fixture::station("nfs", "home", 10'000'000);
    cfg.cache.mode = CacheMode::nfs_shared;
    cfg.nfs_server_bandwidth = 1e6;
    grid.add_station(cfg);
    std::vector<FileId> files;
    for (int i = 0; i < 4; ++i) files.push_back(fixture::cached(grid, "nfs", "n" + std::to_string(i), 1'000'000));
    auto& s = grid.station("nfs");
    const auto p = s.start_project_with_files(files, "g", 4);
    std::vector<double> consumed_at;
    for (std::uint32_t c = 0; c < 4; ++c) {
      s.next_file(p, c, {}, [&](const Delivery& d) { consumed_at.push_back(d.at); });
    }
    grid.kernel().run();
    REQUIRE(consumed_at.size() == 4);
    // Four readers share 1 MB/s: each 1 MB read takes 4 s.
    for (double t : consumed_at) CHECK(t == doctest::Approx(4.0));
  }

  TEST_CASE("config validation and names") {
    auto cfg = fixture::station("s", "d", 100);
    CHECK_NOTHROW(cfg.validate());
    cfg.consumer_slots = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = fixture::station("s", "d", 100);
    cfg.max_concurrent_stages = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK(parse_delivery_mode("network_attached") == DeliveryMode::network_attached);
    CHECK(to_string(ProjectState::draining) == "draining");
  }
}
