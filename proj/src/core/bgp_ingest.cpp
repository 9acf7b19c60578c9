// SPDX-License-Identifier: Apache-2.0
#include "bgp_ingest.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cstring>
#include <queue>
#include <sstream>

#include "error.hpp"
#include "io.hpp"

namespace bgpad::ingest {

// ---------------------------------------------------------------------------
// Prefix / Origin

namespace {

void mask_host_bits(Prefix& p) {
  const std::size_t total = p.v6 ? 16 : 4;
  for (std::size_t i = 0; i < total; ++i) {
    const int bits_here = std::clamp(static_cast<int>(p.length) - static_cast<int>(i * 8), 0, 8);
    const auto mask = static_cast<std::uint8_t>(bits_here == 0 ? 0 : (0xff << (8 - bits_here)) & 0xff);
    p.address[i] &= mask;
  }
}

}  // namespace

Prefix Prefix::parse(std::string_view text) {
  text = io::trim(text);
  auto slash = text.find('/');
  if (slash == std::string_view::npos) throw InvalidArgument("prefix without mask: " + std::string(text));
  std::string addr(text.substr(0, slash));
  auto len = io::parse_int(text.substr(slash + 1));
  Prefix p;
  p.v6 = addr.find(':') != std::string::npos;
  if (!len || *len < 0 || *len > (p.v6 ? 128 : 32))
    throw InvalidArgument("bad prefix length: " + std::string(text));
  p.length = static_cast<std::uint8_t>(*len);
  if (inet_pton(p.v6 ? AF_INET6 : AF_INET, addr.c_str(), p.address.data()) != 1)
    throw InvalidArgument("bad prefix address: " + std::string(text));
  mask_host_bits(p);
  return p;
}

std::string Prefix::to_string() const {
  char buf[INET6_ADDRSTRLEN];
  inet_ntop(v6 ? AF_INET6 : AF_INET, address.data(), buf, sizeof(buf));
  return std::string(buf) + "/" + std::to_string(length);
}

std::size_t PrefixHash::operator()(const Prefix& p) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : p.address) h = (h ^ b) * 0x100000001b3ULL;
  h = (h ^ p.length) * 0x100000001b3ULL;
  return static_cast<std::size_t>(h ^ (p.v6 ? 0x9e37 : 0));
}

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::igp: return "IGP";
    case Origin::egp: return "EGP";
    case Origin::incomplete: return "INCOMPLETE";
    case Origin::absent: return "";
  }
  return "";
}

std::optional<Origin> parse_origin(std::string_view s) {
  s = io::trim(s);
  if (s == "IGP") return Origin::igp;
  if (s == "EGP") return Origin::egp;
  if (s == "INCOMPLETE") return Origin::incomplete;
  if (s.empty()) return Origin::absent;
  return std::nullopt;
}

void IngestConfig::validate() const {
  if (!(start < end)) throw InvalidArgument("ingest time range requires start < end");
}

// ---------------------------------------------------------------------------
// MRT / BGP decoding

namespace {

constexpr std::uint16_t kMrtBgp4mp = 16;
constexpr std::uint16_t kMrtBgp4mpEt = 17;
constexpr std::uint16_t kSubtypeMessage = 1;
constexpr std::uint16_t kSubtypeMessageAs4 = 4;
constexpr std::uint8_t kBgpUpdate = 2;

constexpr std::uint8_t kAttrOrigin = 1;
constexpr std::uint8_t kAttrAsPath = 2;
constexpr std::uint8_t kAttrMpReach = 14;
constexpr std::uint8_t kAttrMpUnreach = 15;

struct Malformed {
  const char* what;
};

/// Bounds-checked big-endian cursor. Over-reads throw Malformed, which the
/// record loop turns into drop-and-count.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::size_t remaining() const { return b_.size() - pos_; }
  bool done() const { return pos_ == b_.size(); }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(b_[pos_] << 8 | b_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(b_[pos_]) << 24 | static_cast<std::uint32_t>(b_[pos_ + 1]) << 16 |
                      static_cast<std::uint32_t>(b_[pos_ + 2]) << 8 | b_[pos_ + 3];
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Malformed{"field overruns enclosing length"};
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void read_prefixes(Reader r, bool v6, std::vector<Prefix>& out) {
  const unsigned max_len = v6 ? 128 : 32;
  while (!r.done()) {
    Prefix p;
    p.v6 = v6;
    p.length = r.u8();
    if (p.length > max_len) throw Malformed{"prefix length exceeds address size"};
    auto bytes = r.take((p.length + 7u) / 8u);
    std::copy(bytes.begin(), bytes.end(), p.address.begin());
    mask_host_bits(p);
    out.push_back(p);
  }
}

bool afi_is_v6(std::uint16_t afi) {
  if (afi == 1) return false;
  if (afi == 2) return true;
  throw Malformed{"unsupported AFI"};
}

struct DecodedUpdate {
  std::vector<Prefix> announced;
  std::vector<Prefix> withdrawn;
  std::vector<std::uint32_t> as_path;
  bool as_set = false;
  bool has_as_path = false;
  Origin origin = Origin::absent;
};

DecodedUpdate decode_update(Reader r, bool as4) {
  DecodedUpdate u;
  const auto wlen = r.u16();
  read_prefixes(Reader(r.take(wlen)), false, u.withdrawn);
  const auto alen = r.u16();
  Reader attrs(r.take(alen));
  while (!attrs.done()) {
    const auto flags = attrs.u8();
    const auto type = attrs.u8();
    const std::size_t len = (flags & 0x10) ? attrs.u16() : attrs.u8();
    Reader val(attrs.take(len));
    switch (type) {
      case kAttrOrigin: {
        if (len != 1) throw Malformed{"ORIGIN length"};
        const auto o = val.u8();
        if (o > 2) throw Malformed{"ORIGIN value"};
        u.origin = static_cast<Origin>(o);
        break;
      }
      case kAttrAsPath: {
        u.has_as_path = true;
        while (!val.done()) {
          const auto seg_type = val.u8();
          const auto count = val.u8();
          if (seg_type < 1 || seg_type > 4) throw Malformed{"AS_PATH segment type"};
          if (seg_type == 1 || seg_type == 4) u.as_set = true;
          for (unsigned i = 0; i < count; ++i) u.as_path.push_back(as4 ? val.u32() : val.u16());
        }
        break;
      }
      case kAttrMpReach: {
        const bool v6 = afi_is_v6(val.u16());
        val.u8();  // SAFI
        val.take(val.u8());  // next hop
        val.u8();  // reserved
        read_prefixes(Reader(val.take(val.remaining())), v6, u.announced);
        break;
      }
      case kAttrMpUnreach: {
        const bool v6 = afi_is_v6(val.u16());
        val.u8();
        read_prefixes(Reader(val.take(val.remaining())), v6, u.withdrawn);
        break;
      }
      default:
        break;
    }
  }
  read_prefixes(Reader(r.take(r.remaining())), false, u.announced);
  if (!u.announced.empty() && (!u.has_as_path || u.as_path.empty()))
    throw Malformed{"announcement without AS_PATH"};
  return u;
}

std::string ip_to_string(std::span<const std::uint8_t> ip) {
  char buf[INET6_ADDRSTRLEN];
  inet_ntop(ip.size() == 16 ? AF_INET6 : AF_INET, ip.data(), buf, sizeof(buf));
  return buf;
}

bool family_ok(const Prefix& p, AddressFamily f) {
  return f == AddressFamily::any || (f == AddressFamily::ipv6) == p.v6;
}

}  // namespace

IngestResult parse_mrt_stream(std::span<const std::uint8_t> bytes, const IngestConfig& cfg) {
  cfg.validate();
  IngestResult out;
  auto& c = out.counters;
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    if (bytes.size() - offset < 12) throw ParseError("truncated MRT header at byte offset " + std::to_string(offset), offset);
    Reader hdr(bytes.subspan(offset, 12));
    const std::int64_t ts = hdr.u32();
    const auto type = hdr.u16();
    const auto subtype = hdr.u16();
    const std::uint32_t length = hdr.u32();
    if (bytes.size() - offset - 12 < length)
      throw ParseError("truncated MRT record body at byte offset " + std::to_string(offset), offset);
    const auto body = bytes.subspan(offset + 12, length);
    offset += 12 + std::size_t{length};
    ++c.total;

    if (type != kMrtBgp4mp && type != kMrtBgp4mpEt) {
      ++c.skipped_unknown_type;
      continue;
    }
    if (subtype != kSubtypeMessage && subtype != kSubtypeMessageAs4) {
      ++c.skipped_non_update;
      continue;
    }
    try {
      Reader r(body);
      if (type == kMrtBgp4mpEt) r.u32();  // microseconds
      const bool as4 = subtype == kSubtypeMessageAs4;
      const std::uint32_t peer_as = as4 ? r.u32() : r.u16();
      if (as4) r.u32(); else r.u16();  // local AS
      r.u16();  // interface index
      const auto afi = r.u16();
      const std::size_t ip_len = afi_is_v6(afi) ? 16 : 4;
      const auto peer_ip = r.take(ip_len);
      r.take(ip_len);  // local IP
      auto marker = r.take(16);
      if (std::any_of(marker.begin(), marker.end(), [](auto b) { return b != 0xff; })) throw Malformed{"BGP marker"};
      const auto msg_len = r.u16();
      if (msg_len < 19 || msg_len - 18u > r.remaining()) throw Malformed{"BGP message length"};
      const auto msg_type = r.u8();
      Reader msg(r.take(msg_len - 19u));
      if (msg_type != kBgpUpdate) {
        ++c.skipped_non_update;
        continue;
      }
      const bool peer_ok = cfg.peer_as.empty() ||
                           std::find(cfg.peer_as.begin(), cfg.peer_as.end(), peer_as) != cfg.peer_as.end();
      if (!peer_ok || ts < cfg.start || ts >= cfg.end) {
        ++c.skipped_filtered;
        continue;
      }
      auto u = decode_update(msg, as4);
      std::erase_if(u.announced, [&](const Prefix& p) { return !family_ok(p, cfg.family); });
      std::erase_if(u.withdrawn, [&](const Prefix& p) { return !family_ok(p, cfg.family); });
      if (u.announced.empty() && u.withdrawn.empty()) {
        ++c.skipped_filtered;
        continue;
      }
      UpdateRecord base;
      base.timestamp = ts;
      base.peer_as = peer_as;
      base.peer_ip = ip_to_string(peer_ip);
      if (!u.withdrawn.empty()) {
        UpdateRecord w = base;
        w.withdrawn = std::move(u.withdrawn);
        out.records.push_back(std::move(w));
      }
      if (!u.announced.empty()) {
        UpdateRecord a = std::move(base);
        a.announced = std::move(u.announced);
        a.as_path = std::move(u.as_path);
        a.as_set = u.as_set;
        a.origin = u.origin;
        out.records.push_back(std::move(a));
      }
      ++c.emitted;
    } catch (const Malformed&) {
      ++c.dropped_malformed;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text fixture format

namespace {

std::vector<std::uint32_t> parse_path(std::string_view s, bool& as_set, std::size_t line) {
  std::vector<std::uint32_t> path;
  std::string tok;
  bool in_set = false;
  auto flush = [&] {
    if (tok.empty()) return;
    auto v = io::parse_int(tok);
    if (!v || *v < 0 || *v > 0xffffffffLL) throw ParseError("line " + std::to_string(line) + ": bad AS number '" + tok + "'", line);
    path.push_back(static_cast<std::uint32_t>(*v));
    tok.clear();
  };
  for (char ch : s) {
    if (ch == '{') {
      flush();
      if (in_set) throw ParseError("line " + std::to_string(line) + ": nested AS_SET", line);
      in_set = as_set = true;
    } else if (ch == '}') {
      flush();
      if (!in_set) throw ParseError("line " + std::to_string(line) + ": unbalanced AS_SET", line);
      in_set = false;
    } else if (ch == ' ' || ch == '\t' || ch == ',') {
      flush();
    } else {
      tok.push_back(ch);
    }
  }
  flush();
  if (in_set) throw ParseError("line " + std::to_string(line) + ": unterminated AS_SET", line);
  return path;
}

}  // namespace

std::vector<UpdateRecord> parse_text_log(std::string_view text) {
  std::vector<UpdateRecord> out;
  std::size_t line_no = 0;
  for (auto raw : io::split(text, '\n')) {
    ++line_no;
    auto line = io::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto err = [&](const std::string& why) {
      return ParseError("line " + std::to_string(line_no) + ": " + why, line_no);
    };
    auto f = io::split(line, '|');
    if (f.size() != 6 && f.size() != 7) throw err("expected 6 or 7 '|' separated fields");
    UpdateRecord r;
    auto ts = io::parse_int(f[0]);
    if (!ts) throw err("bad timestamp");
    r.timestamp = *ts;
    auto peer = io::parse_int(f[1]);
    if (!peer || *peer < 0 || *peer > 0xffffffffLL) throw err("bad peer AS");
    r.peer_as = static_cast<std::uint32_t>(*peer);
    const auto action = io::trim(f[2]);
    if (action != "A" && action != "W") throw err("action must be A or W");
    std::vector<Prefix> prefixes;
    for (auto p : io::split(f[3], ',')) {
      try {
        prefixes.push_back(Prefix::parse(p));
      } catch (const InvalidArgument& e) {
        throw err(e.what());
      }
    }
    r.as_path = parse_path(f[4], r.as_set, line_no);
    auto origin = parse_origin(f[5]);
    if (!origin) throw err("bad origin");
    r.origin = *origin;
    if (f.size() == 7) r.peer_ip = std::string(io::trim(f[6]));
    if (action == "A") {
      if (r.as_path.empty()) throw err("announcement without AS path");
      r.announced = std::move(prefixes);
    } else {
      if (!r.as_path.empty() || r.origin != Origin::absent) throw err("withdrawal must not carry path attributes");
      r.withdrawn = std::move(prefixes);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_text_record(const UpdateRecord& rec) {
  if (!rec.announced.empty() && !rec.withdrawn.empty())
    throw InvalidArgument("text format holds one action per line");
  std::ostringstream os;
  const bool announce = !rec.announced.empty();
  os << rec.timestamp << '|' << rec.peer_as << '|' << (announce ? 'A' : 'W') << '|';
  const auto& pfx = announce ? rec.announced : rec.withdrawn;
  for (std::size_t i = 0; i < pfx.size(); ++i) os << (i ? "," : "") << pfx[i].to_string();
  os << '|';
  // The flattened path no longer knows segment boundaries; a flagged path is
  // rendered as one trailing set holding everything after the first AS.
  for (std::size_t i = 0; i < rec.as_path.size(); ++i) {
    if (i) os << ' ';
    if (rec.as_set && i == std::min<std::size_t>(1, rec.as_path.size() - 1)) os << '{';
    os << rec.as_path[i];
  }
  if (rec.as_set && !rec.as_path.empty()) os << '}';
  os << '|' << to_string(rec.origin);
  if (!rec.peer_ip.empty()) os << '|' << rec.peer_ip;
  return os.str();
}

std::string format_text_log(std::span<const UpdateRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += format_text_record(r);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<UpdateRecord> merge_streams(std::span<const std::vector<UpdateRecord>> streams) {
  for (std::size_t s = 0; s < streams.size(); ++s) {
    for (std::size_t i = 1; i < streams[s].size(); ++i) {
      if (streams[s][i].timestamp < streams[s][i - 1].timestamp)
        throw InvalidArgument("stream " + std::to_string(s) + " is not timestamp-sorted at position " + std::to_string(i));
    }
  }
  using Key = std::tuple<std::int64_t, std::uint32_t, std::size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> heads;
  std::vector<std::size_t> cursor(streams.size(), 0);
  std::size_t total = 0;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    total += streams[s].size();
    if (!streams[s].empty()) heads.emplace(streams[s][0].timestamp, streams[s][0].peer_as, s);
  }
  std::vector<UpdateRecord> out;
  out.reserve(total);
  while (!heads.empty()) {
    const auto s = std::get<2>(heads.top());
    heads.pop();
    out.push_back(streams[s][cursor[s]++]);
    if (cursor[s] < streams[s].size()) heads.emplace(streams[s][cursor[s]].timestamp, streams[s][cursor[s]].peer_as, s);
  }
  return out;
}

IngestResult load_file(const std::string& path, const IngestConfig& cfg) {
  auto bytes = io::read_bytes(path);
  if (io::is_gzip(bytes)) bytes = io::gunzip(bytes);
  const std::size_t probe = std::min<std::size_t>(bytes.size(), 64);
  const bool text = std::all_of(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(probe),
                                [](std::uint8_t b) { return b == '\n' || b == '\r' || b == '\t' || (b >= 0x20 && b < 0x7f); });
  if (!text || bytes.empty()) return parse_mrt_stream(bytes, cfg);

  cfg.validate();
  IngestResult out;
  auto all = parse_text_log(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  for (auto& r : all) {
    ++out.counters.total;
    const bool peer_ok =
        cfg.peer_as.empty() || std::find(cfg.peer_as.begin(), cfg.peer_as.end(), r.peer_as) != cfg.peer_as.end();
    std::erase_if(r.announced, [&](const Prefix& p) { return !family_ok(p, cfg.family); });
    std::erase_if(r.withdrawn, [&](const Prefix& p) { return !family_ok(p, cfg.family); });
    if (!peer_ok || r.timestamp < cfg.start || r.timestamp >= cfg.end || (r.announced.empty() && r.withdrawn.empty())) {
      ++out.counters.skipped_filtered;
      continue;
    }
    ++out.counters.emitted;
    out.records.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace encode {

namespace {
void put16(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}
void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  put16(b, v >> 16);
  put16(b, v & 0xffff);
}
void put_prefix(std::vector<std::uint8_t>& b, const Prefix& p) {
  b.push_back(p.length);
  b.insert(b.end(), p.address.begin(), p.address.begin() + (p.length + 7) / 8);
}
void put_attr(std::vector<std::uint8_t>& b, std::uint8_t flags, std::uint8_t type, const std::vector<std::uint8_t>& v) {
  const bool ext = v.size() > 255;
  b.push_back(static_cast<std::uint8_t>(flags | (ext ? 0x10 : 0)));
  b.push_back(type);
  if (ext) put16(b, static_cast<std::uint32_t>(v.size()));
  else b.push_back(static_cast<std::uint8_t>(v.size()));
  b.insert(b.end(), v.begin(), v.end());
}
std::vector<std::uint8_t> bgp_frame(std::uint8_t type, const std::vector<std::uint8_t>& body) {
  std::vector<std::uint8_t> m(16, 0xff);
  put16(m, static_cast<std::uint32_t>(19 + body.size()));
  m.push_back(type);
  m.insert(m.end(), body.begin(), body.end());
  return m;
}
}  // namespace

std::vector<std::uint8_t> update_message(const UpdateRecord& rec, bool as4) {
  std::vector<std::uint8_t> withdrawn, attrs, nlri, mp_reach, mp_unreach;
  for (const auto& p : rec.withdrawn) put_prefix(p.v6 ? mp_unreach : withdrawn, p);
  for (const auto& p : rec.announced) put_prefix(p.v6 ? mp_reach : nlri, p);
  if (!rec.announced.empty()) {
    if (rec.origin != Origin::absent) put_attr(attrs, 0x40, kAttrOrigin, {static_cast<std::uint8_t>(rec.origin)});
    std::vector<std::uint8_t> path;
    // One AS_SEQUENCE holding the first AS, then (if flagged) an AS_SET with
    // the remainder; mirrors format_text_record.
    auto segment = [&](std::uint8_t seg, std::size_t from, std::size_t to) {
      for (std::size_t start = from; start < to; start += 255) {
        const std::size_t end = std::min(to, start + 255);
        path.push_back(seg);
        path.push_back(static_cast<std::uint8_t>(end - start));
        for (std::size_t i = start; i < end; ++i) as4 ? put32(path, rec.as_path[i]) : put16(path, rec.as_path[i]);
      }
    };
    if (rec.as_set && rec.as_path.size() > 1) {
      segment(2, 0, 1);
      segment(1, 1, rec.as_path.size());
    } else {
      segment(rec.as_set ? 1 : 2, 0, rec.as_path.size());
    }
    put_attr(attrs, 0x40, kAttrAsPath, path);
    if (!mp_reach.empty()) {
      std::vector<std::uint8_t> v;
      put16(v, 2);
      v.push_back(1);
      v.push_back(16);
      v.insert(v.end(), 16, 0);
      v.push_back(0);
      v.insert(v.end(), mp_reach.begin(), mp_reach.end());
      put_attr(attrs, 0x80, kAttrMpReach, v);
    }
  }
  if (!mp_unreach.empty()) {
    std::vector<std::uint8_t> v;
    put16(v, 2);
    v.push_back(1);
    v.insert(v.end(), mp_unreach.begin(), mp_unreach.end());
    put_attr(attrs, 0x80, kAttrMpUnreach, v);
  }
  std::vector<std::uint8_t> body;
  put16(body, static_cast<std::uint32_t>(withdrawn.size()));
  body.insert(body.end(), withdrawn.begin(), withdrawn.end());
  put16(body, static_cast<std::uint32_t>(attrs.size()));
  body.insert(body.end(), attrs.begin(), attrs.end());
  body.insert(body.end(), nlri.begin(), nlri.end());
  return bgp_frame(kBgpUpdate, body);
}

std::vector<std::uint8_t> keepalive_message() { return bgp_frame(4, {}); }

std::vector<std::uint8_t> mrt_record(const Bgp4mpHeader& hdr, std::span<const std::uint8_t> bgp_message) {
  std::vector<std::uint8_t> body;
  if (hdr.extended_timestamp) put32(body, 0);
  if (hdr.as4) {
    put32(body, hdr.peer_as);
    put32(body, hdr.local_as);
  } else {
    put16(body, hdr.peer_as);
    put16(body, hdr.local_as);
  }
  put16(body, 0);
  put16(body, 1);
  body.insert(body.end(), hdr.peer_ip.begin(), hdr.peer_ip.end());
  body.insert(body.end(), hdr.local_ip.begin(), hdr.local_ip.end());
  body.insert(body.end(), bgp_message.begin(), bgp_message.end());
  std::vector<std::uint8_t> rec;
  put32(rec, hdr.timestamp);
  put16(rec, hdr.extended_timestamp ? kMrtBgp4mpEt : kMrtBgp4mp);
  put16(rec, hdr.as4 ? kSubtypeMessageAs4 : kSubtypeMessage);
  put32(rec, static_cast<std::uint32_t>(body.size()));
  rec.insert(rec.end(), body.begin(), body.end());
  return rec;
}

}  // namespace encode

}  // namespace bgpad::ingest
