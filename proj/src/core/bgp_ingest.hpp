// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bgpad::ingest {

/// An IPv4 or IPv6 prefix. Host bits beyond `length` are zero.
struct Prefix {
  std::array<std::uint8_t, 16> address{};
  std::uint8_t length = 0;
  bool v6 = false;

  static Prefix parse(std::string_view text);  // throws InvalidArgument
  std::string to_string() const;

  auto operator<=>(const Prefix&) const = default;
};

struct PrefixHash {
  std::size_t operator()(const Prefix& p) const noexcept;
};

enum class Origin : std::uint8_t { igp = 0, egp = 1, incomplete = 2, absent = 3 };

std::string_view to_string(Origin o);
std::optional<Origin> parse_origin(std::string_view s);

/// One BGP UPDATE worth of reachability changes from a single peer.
///
/// An UPDATE that carries both withdrawals and announcements is emitted as two
/// records, withdrawals first, so every record is either an announcement or a
/// withdrawal. `as_path` keeps AS_SET members flattened in wire order;
/// `as_set` records that flattening happened.
struct UpdateRecord {
  std::int64_t timestamp = 0;
  std::uint32_t peer_as = 0;
  std::string peer_ip;
  std::vector<Prefix> announced;
  std::vector<Prefix> withdrawn;
  std::vector<std::uint32_t> as_path;
  bool as_set = false;
  Origin origin = Origin::absent;

  bool operator==(const UpdateRecord&) const = default;
};

enum class AddressFamily { any, ipv4, ipv6 };

struct IngestConfig {
  std::vector<std::uint32_t> peer_as;  // empty: accept every peer
  std::int64_t start = 0;
  std::int64_t end = INT64_MAX;
  AddressFamily family = AddressFamily::any;

  void validate() const;
};

/// Conservation: emitted + skipped() + dropped == total.
struct IngestCounters {
  std::uint64_t total = 0;
  std::uint64_t emitted = 0;
  std::uint64_t skipped_non_update = 0;
  std::uint64_t skipped_unknown_type = 0;
  std::uint64_t skipped_filtered = 0;
  std::uint64_t dropped_malformed = 0;

  std::uint64_t skipped() const { return skipped_non_update + skipped_unknown_type + skipped_filtered; }
  bool operator==(const IngestCounters&) const = default;
};

struct IngestResult {
  std::vector<UpdateRecord> records;
  IngestCounters counters;
};

/// Decodes a concatenation of MRT records (BGP4MP / BGP4MP_ET, MESSAGE and
/// MESSAGE_AS4 subtypes). A truncated MRT header or body is a hard
/// ParseError carrying the byte offset of the offending record; anything
/// wrong inside one record only drops that record.
IngestResult parse_mrt_stream(std::span<const std::uint8_t> bytes, const IngestConfig& cfg);

/// Parses the `ts|peer_as|A/W|prefixes|as_path|origin[|peer_ip]` fixture
/// format. `#` starts a comment line. Prefix lists are comma separated and
/// AS_SET members are written in braces, e.g. `64500 {64501 64502}`.
std::vector<UpdateRecord> parse_text_log(std::string_view text);

std::string format_text_record(const UpdateRecord& rec);
std::string format_text_log(std::span<const UpdateRecord> records);

/// k-way merge by (timestamp, peer_as, input index). Throws InvalidArgument
/// naming the first out-of-order position of any input.
std::vector<UpdateRecord> merge_streams(std::span<const std::vector<UpdateRecord>> streams);

/// Reads a file that is either MRT (optionally gzip wrapped) or the text
/// fixture format. Text input is detected by a printable first byte.
IngestResult load_file(const std::string& path, const IngestConfig& cfg);

/// Hand-rolled MRT/BGP encoder used by the tests and the fixture tooling.
namespace encode {

struct Bgp4mpHeader {
  std::uint32_t timestamp = 0;
  std::uint32_t peer_as = 0;
  std::uint32_t local_as = 0;
  std::array<std::uint8_t, 4> peer_ip{10, 0, 0, 1};
  std::array<std::uint8_t, 4> local_ip{10, 0, 0, 2};
  bool as4 = true;
  bool extended_timestamp = false;
};

std::vector<std::uint8_t> update_message(const UpdateRecord& rec, bool as4);
std::vector<std::uint8_t> keepalive_message();
std::vector<std::uint8_t> mrt_record(const Bgp4mpHeader& hdr, std::span<const std::uint8_t> bgp_message);

}  // namespace encode

}  // namespace bgpad::ingest
