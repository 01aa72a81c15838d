#include <doctest.h>

#include <cmath>
#include <sstream>

#include "samdh/error.hpp"
#include "samdh/metrics.hpp"

using namespace samdh;

TEST_SUITE("metrics") {
  TEST_CASE("records land in the floor(t / 86400) bucket") {
    MetricsLedger m;
    m.record(LedgerEvent::consume, "central", 1'000'000'000, 1, 90000.0);
    CHECK(m.get(1, "central", Metric::consumed_bytes) == 1'000'000'000);
    CHECK(m.get(1, "central", Metric::consumed_files) == 1);
    CHECK(m.get(0, "central", Metric::consumed_bytes) == 0);
    m.record(LedgerEvent::consume, "central", 1, 0, 86399.999);
    CHECK(m.get(0, "central", Metric::consumed_bytes) == 1);
    CHECK(m.last_day() == 1);
  }

  TEST_CASE("same bucket sums") {
    MetricsLedger m;
    m.record(LedgerEvent::deliver_in, "s", 10, 1, 5.0);
    m.record(LedgerEvent::deliver_in, "s", 32, 1, 6.0);
    CHECK(m.get(0, "s", Metric::delivered_in_bytes) == 42);
    CHECK(m.total("s", Metric::delivered_in_bytes) == 42);
  }

  TEST_CASE("negative amounts are rejected") {
    MetricsLedger m;
    CHECK_THROWS_AS(m.record(LedgerEvent::consume, "s", -1, 0, 0.0), Error);
    try {
      m.record(LedgerEvent::consume, "s", 0, -1, 0.0);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::negative_amount);
    }
    CHECK(m.empty());
  }

  TEST_CASE("each event feeds its counter") {
    MetricsLedger m;
    m.record(LedgerEvent::send_out, "s", 1, 1, 0);
    m.record(LedgerEvent::mss_write, "s", 2, 1, 0);
    m.record(LedgerEvent::mss_read, "s", 3, 1, 0);
    m.record(LedgerEvent::remote_stream, "s", 4, 1, 0);
    CHECK(m.get(0, "s", Metric::sent_out_bytes) == 1);
    CHECK(m.get(0, "s", Metric::mss_written_bytes) == 2);
    CHECK(m.get(0, "s", Metric::mss_read_bytes) == 3);
    CHECK(m.get(0, "s", Metric::remote_stream_bytes) == 4);
    CHECK(m.get(0, "s", Metric::consumed_files) == 0);
  }

  TEST_CASE("multiplication factors") {
    CHECK(format_factor(2'500'000'000'000, 1'000'000'000'000) == "2.5000");
    CHECK(format_factor(1'100'000'000'000, 1'200'000'000'000) == "0.9167");
    CHECK(factor_value(11, 12) == doctest::Approx(0.92).epsilon(0.005));
    CHECK(format_factor(0, 0) == "n/a");
    CHECK(format_factor(5, 0) == "∞");
    CHECK(std::isinf(factor_value(5, 0)));
    CHECK(std::isnan(factor_value(0, 0)));
  }

  TEST_CASE("report rows, peak day and remote streams") {
    MetricsLedger m;
    m.record(LedgerEvent::consume, "ca", 2'500, 3, 0.5 * kSecondsPerDay);
    m.record(LedgerEvent::deliver_in, "ca", 1'000, 1, 0.5 * kSecondsPerDay);
    m.record(LedgerEvent::consume, "ca", 1'100, 1, 1.5 * kSecondsPerDay);
    m.record(LedgerEvent::deliver_in, "ca", 1'200, 1, 1.5 * kSecondsPerDay);
    m.record(LedgerEvent::remote_stream, "ca", 9'999, 1, 1.5 * kSecondsPerDay);
    const auto r = m.report({"ca", "idle"}, 0, 2);
    CHECK(r.rows.size() == 6);
    CHECK(r.rows[0].day == 0);
    CHECK(r.rows[0].station == "ca");
    CHECK(r.rows[0].mult_factor == "2.5000");
    CHECK(r.rows[2].mult_factor == "0.9167");
    CHECK(r.rows[1].mult_factor == "n/a");
    REQUIRE(r.summaries.size() == 2);
    CHECK(r.summaries[0].station == "ca");
    CHECK(r.summaries[0].peak_day == 0);
    CHECK(r.summaries[0].peak_mult_factor == "2.5000");
    CHECK(r.summaries[0].mult_factor == "1.6364");
    CHECK(r.summaries[0].remote_stream_bytes == 9'999);
    CHECK(r.summaries[1].mult_factor == "n/a");
    CHECK_FALSE(r.summaries[1].peak_day);
  }

  TEST_CASE("csv round trip") {
    MetricsLedger m;
    m.record(LedgerEvent::consume, "a", 300, 2, 10);
    m.record(LedgerEvent::deliver_in, "a", 100, 1, 10);
    m.record(LedgerEvent::mss_read, "tape", 100, 1, 90000);
    const auto r = m.report(m.stations(), 0, *m.last_day());
    std::ostringstream out;
    write_report_csv(r, out);
    const std::string text = out.str();
    CHECK(text.rfind("day,station,consumed_bytes,consumed_files,delivered_in,sent_out,mss_written,mss_read,mult_factor\n"
                     "0,a,300,2,100,0,0,0,3.0000\n",
                     0) == 0);
    std::istringstream in(text);
    const auto back = read_report_csv(in);
    REQUIRE(back.rows.size() == r.rows.size());
    std::ostringstream again;
    write_report_csv(back, again);
    CHECK(again.str() == text);
    CHECK(back.summaries[0].mult_factor == "3.0000");
  }

  TEST_CASE("gnuplot series") {
    MetricsLedger m;
    m.record(LedgerEvent::consume, "a", 300, 2, 10);
    m.record(LedgerEvent::consume, "a", 50, 1, 2 * kSecondsPerDay);
    const auto r = m.report({"a"}, 0, 2);
    std::ostringstream out;
    write_gnuplot_series(r, "a", Metric::consumed_bytes, out);
    CHECK(out.str() == "# day consumed_bytes station=a\n0 300\n1 0\n2 50\n");
  }

  TEST_CASE("metric names") {
    for (std::size_t i = 0; i < kMetricCount; ++i) {
      const auto m = static_cast<Metric>(i);
      CHECK(parse_metric(to_string(m)) == m);
    }
    CHECK_FALSE(parse_metric("bogus"));
  }
}
