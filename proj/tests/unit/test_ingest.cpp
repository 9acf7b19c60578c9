// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "bgp_ingest.hpp"
#include "error.hpp"
#include "oracles.hpp"

using namespace bgpad;
using namespace bgpad::ingest;

TEST_SUITE("ingest") {

TEST_CASE("empty MRT stream") {
  const auto r = parse_mrt_stream({}, {});
  CHECK(r.records.empty());
  CHECK(r.counters == IngestCounters{});
}

TEST_CASE("hand-assembled announcement decodes to its construction values") {
  const auto bytes = oracle::mrt::announce_10_8();
  const auto r = parse_mrt_stream(bytes, {});
  REQUIRE(r.records.size() == 1);
  const auto& rec = r.records[0];
  CHECK(rec.timestamp == 1043280000);
  CHECK(rec.peer_as == 64500);
  CHECK(rec.peer_ip == "10.0.0.1");
  REQUIRE(rec.announced.size() == 1);
  CHECK(rec.announced[0].to_string() == "10.0.0.0/8");
  CHECK(rec.withdrawn.empty());
  CHECK(rec.as_path == std::vector<std::uint32_t>{64500, 64501});
  CHECK_FALSE(rec.as_set);
  CHECK(rec.origin == Origin::igp);
  CHECK(r.counters.total == 1);
  CHECK(r.counters.emitted == 1);
}

TEST_CASE("keepalive is skipped, withdrawal decoded") {
  const auto r = parse_mrt_stream(oracle::mrt::keepalive_then_withdraw(), {});
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].announced.empty());
  REQUIRE(r.records[0].withdrawn.size() == 1);
  CHECK(r.records[0].withdrawn[0].to_string() == "192.0.2.0/24");
  CHECK(r.records[0].as_path.empty());
  CHECK(r.counters.total == 2);
  CHECK(r.counters.skipped_non_update == 1);
  CHECK(r.counters.emitted == 1);
}

TEST_CASE("truncated header is a hard error with the byte offset") {
  auto bytes = oracle::mrt::announce_10_8();
  const auto first = bytes.size();
  bytes.insert(bytes.end(), {0, 0, 0, 1, 0, 16});
  try {
    parse_mrt_stream(bytes, {});
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == first);
    CHECK(std::string(e.what()).find("truncated MRT header") != std::string::npos);
  }
}

TEST_CASE("truncated body is a hard error") {
  auto bytes = oracle::mrt::announce_10_8();
  bytes.pop_back();
  CHECK_THROWS_AS(parse_mrt_stream(bytes, {}), ParseError);
}

TEST_CASE("malformed attribute drops only that record") {
  auto bytes = oracle::mrt::bad_origin();
  const auto good = oracle::mrt::announce_10_8();
  bytes.insert(bytes.end(), good.begin(), good.end());
  const auto r = parse_mrt_stream(bytes, {});
  CHECK(r.records.size() == 1);
  CHECK(r.counters.dropped_malformed == 1);
  CHECK(r.counters.emitted == 1);
}

TEST_CASE("unknown MRT type is skipped and counted") {
  const auto r = parse_mrt_stream(oracle::mrt::unknown_type(), {});
  CHECK(r.records.empty());
  CHECK(r.counters.skipped_unknown_type == 1);
}

TEST_CASE("encoder round trip and 2-byte AS encoding") {
  UpdateRecord rec;
  rec.timestamp = 1000;
  rec.peer_as = 64999;
  rec.peer_ip = "10.0.0.1";
  // MP_REACH prefixes come back ahead of the trailing IPv4 NLRI.
  rec.announced = {Prefix::parse("2001:db8::/32"), Prefix::parse("198.51.100.0/24")};
  rec.as_path = {64999, 23456, 3};
  rec.origin = Origin::incomplete;
  for (bool as4 : {true, false}) {
    encode::Bgp4mpHeader h;
    h.timestamp = 1000;
    h.peer_as = 64999;
    h.as4 = as4;
    const auto bytes = encode::mrt_record(h, encode::update_message(rec, as4));
    const auto r = parse_mrt_stream(bytes, {});
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0] == rec);
  }
}

TEST_CASE("peer, time and family filters") {
  UpdateRecord rec;
  rec.peer_ip = "10.0.0.1";
  rec.announced = {Prefix::parse("10.0.0.0/8"), Prefix::parse("2001:db8::/32")};
  rec.as_path = {1};
  rec.origin = Origin::igp;
  std::vector<std::uint8_t> bytes;
  for (std::uint32_t t : {100u, 200u, 300u}) {
    encode::Bgp4mpHeader h;
    h.timestamp = t;
    h.peer_as = t == 200 ? 7 : 64500;
    rec.peer_as = h.peer_as;
    const auto b = encode::mrt_record(h, encode::update_message(rec, true));
    bytes.insert(bytes.end(), b.begin(), b.end());
  }
  IngestConfig cfg;
  cfg.peer_as = {64500};
  cfg.start = 100;
  cfg.end = 300;
  cfg.family = AddressFamily::ipv6;
  const auto r = parse_mrt_stream(bytes, cfg);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].announced.size() == 1);
  CHECK(r.records[0].announced[0].v6);
  CHECK(r.counters.skipped_filtered == 2);
  cfg.end = 100;
  CHECK_THROWS_AS(parse_mrt_stream(bytes, cfg), InvalidArgument);
}

TEST_CASE("counter conservation on fuzzed concatenations") {
  std::mt19937_64 rng(42);
  const std::vector<std::vector<std::uint8_t>> parts = {oracle::mrt::announce_10_8(), oracle::mrt::keepalive_then_withdraw(),
                                                        oracle::mrt::bad_origin(), oracle::mrt::unknown_type()};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> bytes;
    const int k = static_cast<int>(rng() % 12);
    for (int i = 0; i < k; ++i) {
      const auto& p = parts[rng() % parts.size()];
      bytes.insert(bytes.end(), p.begin(), p.end());
    }
    const auto a = parse_mrt_stream(bytes, {});
    const auto& c = a.counters;
    CHECK(c.emitted + c.skipped() + c.dropped_malformed == c.total);
    CHECK(parse_mrt_stream(bytes, {}).records == a.records);
  }
}

TEST_CASE("text log format") {
  CHECK(parse_text_log("").empty());
  const auto a = parse_text_log("100|64500|A|10.0.0.0/8|64500 64501|IGP");
  REQUIRE(a.size() == 1);
  CHECK(a[0].announced.size() == 1);
  CHECK(a[0].as_path == std::vector<std::uint32_t>{64500, 64501});
  CHECK(a[0].origin == Origin::igp);
  const auto w = parse_text_log("# comment\n100|64500|W|10.0.0.0/8||\n");
  REQUIRE(w.size() == 1);
  CHECK(w[0].withdrawn.size() == 1);
  CHECK(w[0].announced.empty());

  const auto set = parse_text_log("5|1|A|10.0.0.0/8,11.0.0.0/8|1 {2 3}|EGP|192.0.2.9");
  REQUIRE(set.size() == 1);
  CHECK(set[0].as_set);
  CHECK(set[0].as_path == std::vector<std::uint32_t>{1, 2, 3});
  CHECK(parse_text_log(format_text_log(set)) == set);

  try {
    parse_text_log("100|64500|A|10.0.0.0/8|1|IGP\n100|x|A|10.0.0.0/8|1|IGP");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
  }
}

TEST_CASE("text and MRT agree on every field") {
  const auto mrt = parse_mrt_stream(oracle::mrt::announce_10_8(), {}).records;
  CHECK(parse_text_log(format_text_log(mrt)) == mrt);
}

TEST_CASE("merge orders by timestamp then peer") {
  auto rec = [](std::int64_t ts, std::uint32_t peer) {
    UpdateRecord r;
    r.timestamp = ts;
    r.peer_as = peer;
    r.withdrawn = {Prefix::parse("10.0.0.0/8")};
    return r;
  };
  std::vector<std::vector<UpdateRecord>> one = {{rec(1, 1), rec(2, 1)}};
  CHECK(merge_streams(one) == one[0]);
  std::vector<std::vector<UpdateRecord>> two = {{rec(1, 1), rec(3, 1)}, {rec(2, 1)}};
  const auto m = merge_streams(two);
  CHECK(m[0].timestamp == 1);
  CHECK(m[1].timestamp == 2);
  CHECK(m[2].timestamp == 3);
  std::vector<std::vector<UpdateRecord>> tie = {{rec(5, 64500)}, {rec(5, 64499)}};
  CHECK(merge_streams(tie)[0].peer_as == 64499);
  std::vector<std::vector<UpdateRecord>> bad = {{rec(3, 1), rec(2, 1)}};
  CHECK_THROWS_AS(merge_streams(bad), InvalidArgument);
}

TEST_CASE("prefix parsing") {
  CHECK(Prefix::parse("10.1.2.3/8").to_string() == "10.0.0.0/8");
  CHECK_THROWS_AS(Prefix::parse("10.0.0.0/33"), InvalidArgument);
  CHECK_THROWS_AS(Prefix::parse("2001:db8::/129"), InvalidArgument);
  CHECK_THROWS_AS(Prefix::parse("10.0.0.0"), InvalidArgument);
}

}
