// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "tensor.hpp"

namespace oracle {

using bgpad::ingest::Origin;
using bgpad::ingest::Prefix;
using bgpad::ingest::UpdateRecord;

GatResult gat_scalar(const Grid& nodes, const Grid& W, const std::vector<double>& a, double slope,
                     bgpad::model::Activation act) {
  const std::size_t n = nodes.size(), f = W.size();
  Grid wh(n, std::vector<double>(f, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < f; ++r)
      for (std::size_t c = 0; c < nodes[i].size(); ++c) wh[i][r] += W[r][c] * nodes[i][c];

  GatResult res;
  res.alpha.assign(n, std::vector<double>(n, 0.0));
  res.out.assign(n, std::vector<double>(f, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n);
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < f; ++k) s += a[k] * wh[i][k] + a[f + k] * wh[j][k];
      e[j] = s >= 0.0 ? s : slope * s;
    }
    const double top = *std::max_element(e.begin(), e.end());
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(e[j] - top);
    for (std::size_t j = 0; j < n; ++j) res.alpha[i][j] = std::exp(e[j] - top) / z;
    for (std::size_t k = 0; k < f; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += res.alpha[i][j] * wh[j][k];
      switch (act) {
        case bgpad::model::Activation::tanh: s = std::tanh(s); break;
        case bgpad::model::Activation::relu: s = s > 0.0 ? s : 0.0; break;
        case bgpad::model::Activation::elu: s = s > 0.0 ? s : std::expm1(s); break;
      }
      res.out[i][k] = s;
    }
  }
  return res;
}

bgpad::metrics::Scores brute_force_scores(const std::vector<int>& truth, const std::vector<int>& pred,
                                          std::size_t classes) {
  const auto one_vs_rest = [&](int c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == c && pred[i] == c) ++tp;
      if (truth[i] != c && pred[i] == c) ++fp;
      if (truth[i] == c && pred[i] != c) ++fn;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    return std::array<double, 3>{p, r, f1};
  };
  double correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  bgpad::metrics::Scores s;
  s.accuracy = truth.empty() ? 0.0 : correct / static_cast<double>(truth.size());
  if (classes == 2) {
    const auto m = one_vs_rest(1);
    s.precision = m[0];
    s.recall = m[1];
    s.f1 = m[2];
  } else {
    for (std::size_t c = 0; c < classes; ++c) {
      const auto m = one_vs_rest(static_cast<int>(c));
      s.precision += m[0] / static_cast<double>(classes);
      s.recall += m[1] / static_cast<double>(classes);
      s.f1 += m[2] / static_cast<double>(classes);
    }
  }
  return s;
}

std::size_t levenshtein(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

std::vector<UpdateRecord> random_updates(std::mt19937_64& rng, std::size_t count) {
  std::uniform_int_distribution<int> pfx(0, 7), len(1, 5), as(1, 6), step(0, 40), pct(0, 99), org(0, 3);
  std::vector<UpdateRecord> out;
  std::int64_t ts = 1000000 + std::uniform_int_distribution<int>(0, 59)(rng);
  for (std::size_t i = 0; i < count; ++i) {
    ts += step(rng);
    UpdateRecord r;
    r.timestamp = ts;
    r.peer_as = 64500;
    r.peer_ip = "10.0.0.1";
    std::set<int> chosen;
    const int nprefix = 1 + pct(rng) % 3;
    for (int k = 0; k < nprefix; ++k) chosen.insert(pfx(rng));
    std::vector<Prefix> prefixes;
    for (int p : chosen) prefixes.push_back(Prefix::parse("10." + std::to_string(p) + ".0.0/16"));
    if (pct(rng) < 25) {
      r.withdrawn = prefixes;
    } else {
      r.announced = prefixes;
      // Mostly short paths over six ASes; occasionally a long one so edit
      // distances above 10 occur.
      const int l = pct(rng) < 5 ? 12 + len(rng) : len(rng);
      for (int k = 0; k < l; ++k) r.as_path.push_back(static_cast<std::uint32_t>(pct(rng) < 5 ? 100 + k : as(rng)));
      r.origin = static_cast<Origin>(org(rng));
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct Replay {
  double f[47] = {};  // 1-based
  std::vector<std::size_t> distances;
  std::set<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>> pairs;
  std::size_t records_with_origin = 0;
  std::size_t distinct_paths = 0;
};

}  // namespace

std::optional<std::string> check_feature_ledger(const std::vector<UpdateRecord>& records,
                                                const bgpad::features::FeatureSeries& series) {
  namespace F = bgpad::features;
  if (records.empty()) return "no records";
  const std::int64_t first = records.front().timestamp / 60 * 60;
  const std::size_t bins = static_cast<std::size_t>((records.back().timestamp / 60 * 60 - first) / 60) + 1;
  if (series.size() != bins) return "row count " + std::to_string(series.size()) + " != " + std::to_string(bins);
  if (series.start != first) return "series start mismatch";

  struct State {
    int action = 0;  // 0 none, 1 announced, 2 withdrawn
    std::vector<std::uint32_t> path;
    Origin origin = Origin::absent;
  };
  std::map<std::string, State> state;
  std::vector<Replay> rows(bins);
  std::vector<std::set<std::vector<std::uint32_t>>> paths(bins);
  for (const auto& r : records) {
    auto& row = rows[static_cast<std::size_t>((r.timestamp - first) / 60)];
    for (const auto& p : r.withdrawn) {
      row.f[2] += 1;
      state[p.to_string()] = State{2, {}, Origin::absent};
    }
    if (r.announced.empty()) continue;
    row.f[4] += 1;
    if (r.origin != Origin::absent) ++row.records_with_origin;
    paths[static_cast<std::size_t>((r.timestamp - first) / 60)].insert(r.as_path);
    for (const auto& p : r.announced) {
      row.f[1] += 1;
      auto& s = state[p.to_string()];
      if (s.action == 0) row.f[8] += 1;
      if (s.action == 2) row.f[7] += 1;
      if (s.action == 1) {
        const bool same_path = s.path == r.as_path, same_origin = s.origin == r.origin;
        if (same_path && same_origin) row.f[3] += 1;
        else if (same_path) row.f[9] += 1;
        else row.f[10] += 1;
        if (!same_origin) row.f[14] += 1;
        if (r.as_path.size() > s.path.size()) row.f[15] += 1;
        if (r.as_path.size() < s.path.size()) row.f[16] += 1;
        const auto d = levenshtein(s.path, r.as_path);
        row.distances.push_back(d);
        row.pairs.insert({s.path, r.as_path});
      }
      s = State{1, r.as_path, r.origin};
    }
  }

  for (std::size_t b = 0; b < bins; ++b) {
    const auto v = [&](std::size_t n) { return series.values(b, F::col(n)); };
    const auto fail = [&](const std::string& what) {
      return std::optional<std::string>("bin " + std::to_string(b) + ": " + what);
    };
    const auto& row = rows[b];
    for (std::size_t n : {1, 2, 3, 4, 7, 8, 9, 10, 14, 15, 16})
      if (v(n) != row.f[n]) return fail("field " + std::to_string(n) + " = " + std::to_string(v(n)) + ", replay " + std::to_string(row.f[n]));
    if (v(5) + v(3) != v(1)) return fail("field5 + field3 != field1");
    if (v(6) != v(3)) return fail("duplicate flaps differ from duplicates");
    if (v(9) + v(10) > v(1)) return fail("implicit withdrawals exceed announcements");
    if (v(11) + v(12) + v(13) != static_cast<double>(row.records_with_origin)) return fail("origin counts");
    if (v(17) > v(18) || v(19) > v(20)) return fail("average path length above maximum");
    if (v(20) != v(18)) return fail("unique and plain maximum path length differ");

    double max_d = 0, hist = 0, over = 0;
    std::array<double, 11> buckets{};
    for (auto d : row.distances) {
      max_d = std::max(max_d, static_cast<double>(d));
      if (d <= 10) buckets[d] += 1;
      else over += 1;
    }
    for (std::size_t d = 0; d <= 10; ++d) {
      if (v(23 + d) != buckets[d]) return fail("edit histogram bucket " + std::to_string(d));
      hist += v(23 + d);
    }
    if (v(22) != max_d) return fail("max edit distance");
    if (hist + over != v(3) + v(9) + v(10)) return fail("edit histogram does not cover every re-announcement");
    if (v(23) != v(3) + v(9)) return fail("distance-0 bucket != same-path re-announcements");

    std::array<double, 11> ubuckets{};
    for (const auto& [a, c] : row.pairs) {
      const auto d = levenshtein(a, c);
      if (d <= 10) ubuckets[d] += 1;
    }
    double uhist = 0;
    for (std::size_t d = 0; d <= 10; ++d) {
      if (v(34 + d) != ubuckets[d]) return fail("unique edit histogram bucket " + std::to_string(d));
      if (v(34 + d) > v(23 + d)) return fail("unique bucket above plain bucket");
      uhist += v(34 + d);
    }
    if (uhist > hist) return fail("unique histogram above plain histogram");
    if (v(46) > v(45)) return fail("rare maximum above rare total");
    if (!paths[b].empty()) {
      double usum = 0;
      for (const auto& p : paths[b]) usum += static_cast<double>(p.size());
      if (std::abs(v(19) - usum / static_cast<double>(paths[b].size())) > 1e-12) return fail("unique average path length");
    }
    for (std::size_t n = 1; n <= F::kFeatureCount; ++n)
      if (!(v(n) >= 0.0)) return fail("negative field " + std::to_string(n));
  }
  return std::nullopt;
}

namespace mrt {

namespace {

using Bytes = std::vector<std::uint8_t>;

void u16(Bytes& b, unsigned v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}
void u32(Bytes& b, std::uint32_t v) {
  u16(b, v >> 16);
  u16(b, v & 0xffff);
}
void append(Bytes& b, std::initializer_list<int> v) {
  for (int x : v) b.push_back(static_cast<std::uint8_t>(x));
}

/// MRT header + BGP4MP MESSAGE(_AS4) peer block + BGP header around `bgp_tail`
/// (everything after the BGP type byte).
Bytes record(std::uint32_t ts, bool as4, unsigned bgp_type, const Bytes& bgp_tail) {
  Bytes peer;
  if (as4) {
    u32(peer, 64500);  // peer AS
    u32(peer, 65000);  // local AS
  } else {
    u16(peer, 64500);
    u16(peer, 65000);
  }
  u16(peer, 0);                   // interface index
  u16(peer, 1);                   // AFI IPv4
  append(peer, {10, 0, 0, 1});    // peer IP
  append(peer, {10, 0, 0, 2});    // local IP
  for (int i = 0; i < 16; ++i) peer.push_back(0xff);  // marker
  u16(peer, static_cast<unsigned>(19 + bgp_tail.size()));
  peer.push_back(static_cast<std::uint8_t>(bgp_type));
  peer.insert(peer.end(), bgp_tail.begin(), bgp_tail.end());

  Bytes out;
  u32(out, ts);
  u16(out, 16);           // BGP4MP
  u16(out, as4 ? 4 : 1);  // MESSAGE_AS4 / MESSAGE
  u32(out, static_cast<std::uint32_t>(peer.size()));
  out.insert(out.end(), peer.begin(), peer.end());
  return out;
}

Bytes announce_with_origin(int origin) {
  Bytes tail;
  u16(tail, 0);   // withdrawn routes length
  u16(tail, 24);  // path attribute length
  append(tail, {0x40, 1, 1, origin});                                    // ORIGIN
  append(tail, {0x40, 2, 10, 2, 2, 0, 0, 0xfb, 0xf4, 0, 0, 0xfb, 0xf5});  // AS_PATH: SEQUENCE 64500 64501
  append(tail, {0x40, 3, 4, 10, 0, 0, 1});                               // NEXT_HOP
  append(tail, {8, 10});                                                 // NLRI 10.0.0.0/8
  return record(1043280000, true, 2, tail);
}

}  // namespace

std::vector<std::uint8_t> announce_10_8() { return announce_with_origin(0); }

std::vector<std::uint8_t> keepalive_then_withdraw() {
  auto out = record(1043280001, false, 4, {});
  Bytes tail;
  u16(tail, 4);
  append(tail, {24, 192, 0, 2});  // 192.0.2.0/24
  u16(tail, 0);
  const auto w = record(1043280002, false, 2, tail);
  out.insert(out.end(), w.begin(), w.end());
  return out;
}

std::vector<std::uint8_t> bad_origin() { return announce_with_origin(7); }

std::vector<std::uint8_t> unknown_type() {
  Bytes out;
  u32(out, 1043280003);
  u16(out, 12);  // TABLE_DUMP
  u16(out, 1);
  u32(out, 4);
  append(out, {0, 0, 0, 0});
  return out;
}

}  // namespace mrt

GradCheck model_gradient_check(const bgpad::model::ModelConfig& cfg, std::uint64_t seed, double h) {
  using namespace bgpad;
  auto params = model::MGatParams::init(cfg, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Matrix window(cfg.window, cfg.channels);
  for (auto& v : window.data()) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const std::size_t y = 1 % cfg.classes;
  std::vector<double> weights(cfg.classes, 1.0);
  weights[y] = 2.0;

  // The dropout mask is redrawn from the same seed on every evaluation.
  const auto loss = [&](model::Gradients* grads) {
    tensor::Tape tape;
    auto bp = model::bind(tape, params, grads);
    std::mt19937_64 drop(seed + 1);
    auto out = model::model_forward(tape, bp, cfg, window, model::Mode::train, &drop);
    auto l = model::weighted_ce_loss(out.logits, y, weights);
    const double v = l.value()[0];
    if (grads) tape.backward(l);
    return v;
  };

  auto grads = model::Gradients::like(params);
  loss(&grads);
  GradCheck res;
  auto named = params.named();
  for (std::size_t p = 0; p < named.size(); ++p) {
    auto& t = *named[p].second;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t[i];
      t[i] = orig + h;
      const double up = loss(nullptr);
      t[i] = orig - h;
      const double down = loss(nullptr);
      t[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads.buffers[p][i];
      // Relative to the gradient scale, with a floor for entries that are
      // zero up to finite-difference noise.
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / denom;
      ++res.parameters;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst = named[p].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace oracle
