#include <doctest.h>

#include <string>
#include <vector>

#include "samdh/error.hpp"
#include "samdh/rng.hpp"
#include "samdh/simkernel.hpp"

using samdh::Kernel;

TEST_SUITE("simkernel") {
  TEST_CASE("zero delay from inside an event fires after it at the same time") {
    Kernel k;
    std::vector<std::string> order;
    k.schedule(5.0, [&] {
      order.push_back("outer");
      k.schedule(0.0, [&] {
        order.push_back("inner@" + std::to_string(static_cast<int>(k.now())));
      });
      order.push_back("outer-end");
    });
    k.run();
    CHECK(order == std::vector<std::string>{"outer", "outer-end", "inner@5"});
  }

  TEST_CASE("equal times fire in schedule order") {
    Kernel k;
    std::vector<int> order;
    for (int i = 0; i < 10; ++i) k.schedule_at(3.0, [&order, i] { order.push_back(i); });
    k.run();
    CHECK(order == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  }

  TEST_CASE("negative delay is rejected") {
    Kernel k;
    CHECK_THROWS_AS(k.schedule(-1.0, [] {}), samdh::Error);
    try {
      k.schedule(-1.0, [] {});
    } catch (const samdh::Error& e) {
      CHECK(e.code() == samdh::ErrorCode::negative_delay);
    }
    k.run_until(10.0);
    CHECK_THROWS_AS(k.schedule_at(9.0, [] {}), samdh::Error);
  }

  TEST_CASE("empty run parks the clock at the horizon") {
    Kernel k;
    const auto stats = k.run_until(42.0);
    CHECK(stats.events_fired == 0);
    CHECK(stats.final_time == 42.0);
    CHECK(k.now() == 42.0);
  }

  TEST_CASE("events scheduled inside the window fire in the same run") {
    Kernel k;
    int fired = 0;
    k.schedule(1.0, [&] {
      ++fired;
      k.schedule(2.0, [&] { ++fired; });
      k.schedule(20.0, [&] { ++fired; });
    });
    const auto stats = k.run_until(10.0);
    CHECK(fired == 2);
    CHECK(stats.events_fired == 2);
    CHECK(k.pending() == 1);
  }

  TEST_CASE("cancelled events never fire") {
    Kernel k;
    bool fired = false;
    const auto h = k.schedule(1.0, [&] { fired = true; });
    CHECK(k.cancel(h));
    CHECK_FALSE(k.cancel(h));
    k.run();
    CHECK_FALSE(fired);
  }

  TEST_CASE("identical setups produce identical statistics") {
    auto run = [] {
      Kernel k;
      samdh::SplitMix64 rng(99);
      std::vector<double> trace;
      std::function<void()> spawn = [&] {
        trace.push_back(k.now());
        if (trace.size() < 500) k.schedule(rng.exponential(2.0), spawn);
      };
      k.schedule(0.0, spawn);
      const auto stats = k.run_until(1e9);
      return std::make_pair(stats, trace);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }

  TEST_CASE("run_until never moves the clock backwards") {
    Kernel k;
    k.run_until(5.0);
    CHECK_THROWS_AS(k.run_until(4.0), samdh::Error);
  }
}
