#include "coopstream/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace coopstream {

namespace {

template <typename V>
void validate_user_pieces(UserId n, const std::vector<TracePiece<V>>& p, double horizon) {
  const std::string who = "trace user " + std::to_string(n) + ": ";
  if (p.empty()) throw ModelError(who + "no intervals");
  if (std::abs(p.front().t_from) > kTimeEps) throw ModelError(who + "does not start at 0");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i].t_to > p[i].t_from)) throw ModelError(who + "empty or reversed interval");
    if (i > 0) {
      const double gap = p[i].t_from - p[i - 1].t_to;
      if (gap > kTimeEps) throw ModelError(who + "gap before t=" + format_double(p[i].t_from));
      if (gap < -kTimeEps) throw ModelError(who + "overlap at t=" + format_double(p[i].t_from));
    }
  }
  if (std::abs(p.back().t_to - horizon) > kTimeEps) {
    throw ModelError(who + "does not cover the horizon " + format_double(horizon));
  }
}

template <typename V>
void validate_value(UserId n, const V& v) {
  if constexpr (std::is_same_v<V, double>) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ModelError("trace user " + std::to_string(n) + ": capacity must be >= 0");
    }
  } else {
    if (v < 0) throw ModelError("trace user " + std::to_string(n) + ": hotspot id must be >= 0");
  }
}

template <typename V>
std::vector<TracePiece<V>> merge_equal(std::vector<TracePiece<V>> p) {
  std::vector<TracePiece<V>> out;
  for (auto& piece : p) {
    if (!out.empty() && out.back().value == piece.value) {
      out.back().t_to = piece.t_to;
    } else {
      out.push_back(piece);
    }
  }
  return out;
}

}  // namespace

template <typename V>
PiecewiseTrace<V> PiecewiseTrace<V>::from_pieces(std::vector<std::vector<TracePiece<V>>> pieces) {
  PiecewiseTrace t;
  if (pieces.empty()) throw ModelError("trace has no users");
  double horizon = 0.0;
  for (auto& user : pieces) {
    if (!user.empty()) horizon = std::max(horizon, user.back().t_to);
  }
  for (std::size_t n = 0; n < pieces.size(); ++n) {
    validate_user_pieces(static_cast<UserId>(n), pieces[n], horizon);
    for (const auto& piece : pieces[n]) validate_value(static_cast<UserId>(n), piece.value);
    // Snap shared endpoints so lookups never fall in a float gap.
    pieces[n].front().t_from = 0.0;
    for (std::size_t i = 1; i < pieces[n].size(); ++i) pieces[n][i].t_from = pieces[n][i - 1].t_to;
    pieces[n].back().t_to = horizon;
  }
  t.pieces_ = std::move(pieces);
  t.horizon_ = horizon;
  return t;
}

template <typename V>
PiecewiseTrace<V> PiecewiseTrace<V>::from_rows(std::vector<TraceRow<V>> rows) {
  std::map<UserId, std::vector<TracePiece<V>>> by_user;
  for (const auto& r : rows) {
    if (r.user < 0) throw ModelError("trace user id must be >= 0");
    by_user[r.user].push_back({r.t_from, r.t_to, r.value});
  }
  if (by_user.empty()) throw ModelError("trace has no rows");
  const UserId max_user = by_user.rbegin()->first;
  std::vector<std::vector<TracePiece<V>>> pieces(static_cast<std::size_t>(max_user) + 1);
  for (auto& [u, p] : by_user) {
    std::sort(p.begin(), p.end(),
              [](const TracePiece<V>& a, const TracePiece<V>& b) { return a.t_from < b.t_from; });
    pieces[static_cast<std::size_t>(u)] = std::move(p);
  }
  for (std::size_t n = 0; n < pieces.size(); ++n) {
    if (pieces[n].empty()) throw ModelError("trace user " + std::to_string(n) + ": no intervals");
  }
  return from_pieces(std::move(pieces));
}

template <typename V>
void PiecewiseTrace<V>::check_user(UserId n) const {
  if (n < 0 || n >= users()) throw ModelError("unknown user id " + std::to_string(n));
}

template <typename V>
const std::vector<TracePiece<V>>& PiecewiseTrace<V>::pieces(UserId n) const {
  check_user(n);
  return pieces_[static_cast<std::size_t>(n)];
}

template <typename V>
std::size_t PiecewiseTrace<V>::piece_index(UserId n, double t) const {
  const auto& p = pieces(n);
  if (t < -kTimeEps || t > horizon_ + kTimeEps) {
    throw ModelError("time " + format_double(t) + " outside [0, " + format_double(horizon_) + "]");
  }
  auto it = std::upper_bound(p.begin(), p.end(), t,
                             [](double x, const TracePiece<V>& piece) { return x < piece.t_from; });
  std::size_t idx = it == p.begin() ? 0 : static_cast<std::size_t>(it - p.begin()) - 1;
  return std::min(idx, p.size() - 1);
}

template <typename V>
std::optional<double> PiecewiseTrace<V>::next_breakpoint(UserId n, double t) const {
  const auto& p = pieces(n);
  for (const auto& piece : p) {
    if (piece.t_to > t + kTimeEps && piece.t_to < horizon_ - kTimeEps) return piece.t_to;
  }
  return std::nullopt;
}

template <typename V>
std::vector<TraceRow<V>> PiecewiseTrace<V>::rows() const {
  std::vector<TraceRow<V>> out;
  for (int n = 0; n < users(); ++n) {
    for (const auto& piece : pieces_[static_cast<std::size_t>(n)]) {
      out.push_back({n, piece.t_from, piece.t_to, piece.value});
    }
  }
  return out;
}

template <typename V>
PiecewiseTrace<V> PiecewiseTrace<V>::prefix(int users, double horizon) const {
  if (users < 1 || users > this->users()) throw ModelError("prefix user count out of range");
  if (!(horizon > 0.0) || horizon > horizon_ + kTimeEps) {
    throw ModelError("prefix horizon out of range");
  }
  std::vector<std::vector<TracePiece<V>>> out(static_cast<std::size_t>(users));
  for (int n = 0; n < users; ++n) {
    for (const auto& piece : pieces_[static_cast<std::size_t>(n)]) {
      if (piece.t_from >= horizon - kTimeEps) break;
      out[static_cast<std::size_t>(n)].push_back(
          {piece.t_from, std::min(piece.t_to, horizon), piece.value});
    }
  }
  return from_pieces(std::move(out));
}

template class PiecewiseTrace<double>;
template class PiecewiseTrace<int>;

bool encountered(const MobilityTrace& m, UserId n, UserId u, double t) {
  const int a = m.value_at(n, t);
  const int b = m.value_at(u, t);
  if (n == u) return true;
  return a == b && a != 0;
}

std::optional<double> separation_time(const MobilityTrace& m, UserId n, UserId u,
                                      double t_from, double t_to) {
  if (t_from > t_to + kTimeEps) throw ModelError("interval start after end");
  if (t_from < -kTimeEps || t_to > m.horizon() + kTimeEps) {
    throw ModelError("interval outside [0, T]");
  }
  m.pieces(n);
  m.pieces(u);
  if (n == u) return std::nullopt;
  if (!encountered(m, n, u, t_from)) return t_from;
  // Walk the union of both users' breakpoints inside (t_from, t_to).
  double t = t_from;
  while (true) {
    auto bn = m.next_breakpoint(n, t);
    auto bu = m.next_breakpoint(u, t);
    double next = t_to;
    if (bn) next = std::min(next, *bn);
    if (bu) next = std::min(next, *bu);
    if (next >= t_to - kTimeEps) return std::nullopt;
    if (!encountered(m, n, u, next)) return next;
    t = next;
  }
}

bool encountered_throughout(const MobilityTrace& m, UserId n, UserId u, double t_from,
                            double t_to) {
  return !separation_time(m, n, u, t_from, t_to).has_value();
}

double integrate_capacity(const CapacityTrace& c, UserId n, double t_from, double t_to) {
  if (t_from > t_to + kTimeEps) throw ModelError("interval start after end");
  if (t_from < -kTimeEps || t_to > c.horizon() + kTimeEps) {
    throw ModelError("interval outside [0, T]");
  }
  const auto& p = c.pieces(n);
  double total = 0.0;
  for (std::size_t i = c.piece_index(n, t_from); i < p.size(); ++i) {
    const double a = std::max(p[i].t_from, t_from);
    const double b = std::min(p[i].t_to, t_to);
    if (b <= a) {
      if (p[i].t_from >= t_to) break;
      continue;
    }
    total += p[i].value * (b - a);
  }
  return total;
}

std::optional<double> download_end_time(const CapacityTrace& c, UserId n, double t_start,
                                        double volume) {
  if (volume < 0.0) throw ModelError("negative volume");
  if (t_start < -kTimeEps || t_start > c.horizon() + kTimeEps) {
    throw ModelError("start time outside [0, T]");
  }
  if (volume <= 0.0) return t_start;
  const auto& p = c.pieces(n);
  double remaining = volume;
  double t = t_start;
  for (std::size_t i = c.piece_index(n, t_start); i < p.size(); ++i) {
    const double span = p[i].t_to - t;
    if (span <= 0.0) continue;
    const double rate = p[i].value;
    if (rate > 0.0) {
      const double avail = rate * span;
      if (avail >= remaining) return t + remaining / rate;
      remaining -= avail;
    }
    t = p[i].t_to;
  }
  if (remaining <= 1e-12) return c.horizon();
  return std::nullopt;
}

void SynthConfig::validate() const {
  if (users < 1) throw ModelError("synth: users must be >= 1");
  if (!(horizon > 0.0)) throw ModelError("synth: horizon must be > 0");
  if (hotspots < 1) throw ModelError("synth: hotspots must be >= 1");
  if (!(dwell_mean > 0.0)) throw ModelError("synth: dwell_mean must be > 0");
  if (!(transition_mean >= 0.0)) throw ModelError("synth: transition_mean must be >= 0");
  if (cap_lo < 0.0 || cap_lo > cap_hi) throw ModelError("synth: need 0 <= cap_lo <= cap_hi");
  if (!(cap_period > 0.0)) throw ModelError("synth: cap_period must be > 0");
  if (!(cap_jitter >= 0.0 && cap_jitter <= 1.0)) {
    throw ModelError("synth: cap_jitter must be in [0, 1]");
  }
}

SynthConfig apply_mobility_preset(SynthConfig cfg, const std::string& name) {
  if (name == "dense-short") {
    cfg.hotspots = 2;
    cfg.dwell_mean = 20.0;
    cfg.transition_mean = 10.0;
  } else if (name == "sparse-long") {
    cfg.hotspots = 8;
    cfg.dwell_mean = 150.0;
    cfg.transition_mean = 60.0;
  } else {
    throw ModelError("unknown mobility preset '" + name + "'");
  }
  return cfg;
}

NetworkTraces synth_traces(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_hotspot(1, cfg.hotspots);
  std::exponential_distribution<double> dwell(1.0 / cfg.dwell_mean);
  std::exponential_distribution<double> transit(cfg.transition_mean > 0.0 ? 1.0 / cfg.transition_mean
                                                                          : 1.0);

  std::vector<std::vector<TracePiece<int>>> mob(static_cast<std::size_t>(cfg.users));
  for (int n = 0; n < cfg.users; ++n) {
    std::vector<TracePiece<int>> p;
    double t = 0.0;
    bool at_hotspot = true;
    while (t < cfg.horizon) {
      double dur = 0.0;
      int loc = 0;
      if (at_hotspot) {
        loc = pick_hotspot(rng);
        dur = dwell(rng);
      } else if (cfg.transition_mean > 0.0) {
        dur = transit(rng);
      }
      at_hotspot = !at_hotspot;
      if (dur <= 0.0) continue;
      const double end = std::min(cfg.horizon, t + dur);
      p.push_back({t, end, loc});
      t = end;
    }
    mob[static_cast<std::size_t>(n)] = merge_equal(std::move(p));
  }

  std::vector<std::vector<TracePiece<double>>> cap(static_cast<std::size_t>(cfg.users));
  std::uniform_real_distribution<double> draw_mean(cfg.cap_lo, cfg.cap_hi);
  std::uniform_real_distribution<double> draw_jitter(-cfg.cap_jitter, cfg.cap_jitter);
  for (int n = 0; n < cfg.users; ++n) {
    const double mean = cfg.cap_lo == cfg.cap_hi ? cfg.cap_lo : draw_mean(rng);
    std::vector<TracePiece<double>> p;
    for (double t = 0.0; t < cfg.horizon;) {
      const double end = std::min(cfg.horizon, t + cfg.cap_period);
      const double v = cfg.cap_jitter > 0.0 ? mean * (1.0 + draw_jitter(rng)) : mean;
      p.push_back({t, end, v});
      t = end;
    }
    cap[static_cast<std::size_t>(n)] = merge_equal(std::move(p));
  }
  return {CapacityTrace::from_pieces(std::move(cap)), MobilityTrace::from_pieces(std::move(mob))};
}

MobilityTrace colocated_mobility(int users, double horizon) {
  std::vector<std::vector<TracePiece<int>>> p(static_cast<std::size_t>(users),
                                              std::vector<TracePiece<int>>{{0.0, horizon, 1}});
  return MobilityTrace::from_pieces(std::move(p));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

double parse_number(const std::string& s, int line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ModelError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& s, int line) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ModelError("line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return v;
}

template <typename V>
PiecewiseTrace<V> read_trace_csv(std::istream& in, const std::string& header) {
  std::string line;
  int lineno = 0;
  bool have_header = false;
  std::vector<TraceRow<V>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
      line = line.substr(3);  // UTF-8 BOM
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!have_header) {
      if (t != header) throw ModelError("expected header '" + header + "'");
      have_header = true;
      continue;
    }
    const auto cells = split_csv(t);
    if (cells.size() != 4) {
      throw ModelError("line " + std::to_string(lineno) + ": expected 4 fields");
    }
    TraceRow<V> r;
    r.user = parse_int(cells[0], lineno);
    r.t_from = parse_number(cells[1], lineno);
    r.t_to = parse_number(cells[2], lineno);
    if constexpr (std::is_same_v<V, double>) {
      r.value = parse_number(cells[3], lineno);
    } else {
      r.value = parse_int(cells[3], lineno);
    }
    rows.push_back(r);
  }
  if (!have_header) throw ModelError("empty trace file");
  return PiecewiseTrace<V>::from_rows(std::move(rows));
}

template <typename V>
void write_trace_csv(std::ostream& out, const PiecewiseTrace<V>& tr, const std::string& header) {
  out << header << '\n';
  for (const auto& r : tr.rows()) {
    out << r.user << ',' << format_double(r.t_from) << ',' << format_double(r.t_to) << ',';
    if constexpr (std::is_same_v<V, double>) {
      out << format_double(r.value);
    } else {
      out << r.value;
    }
    out << '\n';
  }
}

constexpr const char* kCapacityHeader = "user_id,t_from,t_to,capacity_mbps";
constexpr const char* kMobilityHeader = "user_id,t_from,t_to,hotspot_id";

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ModelError("cannot open " + path);
  return f;
}

}  // namespace

CapacityTrace read_capacity_csv(std::istream& in) {
  return read_trace_csv<double>(in, kCapacityHeader);
}

MobilityTrace read_mobility_csv(std::istream& in) {
  return read_trace_csv<int>(in, kMobilityHeader);
}

CapacityTrace read_capacity_csv_file(const std::string& path) {
  auto f = open_or_throw(path);
  return read_capacity_csv(f);
}

MobilityTrace read_mobility_csv_file(const std::string& path) {
  auto f = open_or_throw(path);
  return read_mobility_csv(f);
}

void write_capacity_csv(std::ostream& out, const CapacityTrace& c) {
  write_trace_csv(out, c, kCapacityHeader);
}

void write_mobility_csv(std::ostream& out, const MobilityTrace& m) {
  write_trace_csv(out, m, kMobilityHeader);
}

}  // namespace coopstream
