#pragma once

// Per-user piecewise-constant network traces: cellular capacity h_n(t) in
// Mbps and hotspot location a_n(t) (0 = outside every hotspot). Encounters
// are derived from co-location.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coopstream/model.hpp"

namespace coopstream {

template <typename V>
struct TracePiece {
  double t_from = 0.0;
  double t_to = 0.0;
  V value{};
};

template <typename V>
struct TraceRow {
  UserId user = 0;
  double t_from = 0.0;
  double t_to = 0.0;
  V value{};
};

// Immutable piecewise-constant trace covering [0, horizon] for every user.
// Pieces are half-open [t_from, t_to); the last piece also owns the horizon.
template <typename V>
class PiecewiseTrace {
 public:
  PiecewiseTrace() = default;

  // Groups rows by user, sorts them and validates full coverage of
  // [0, horizon] with no gaps or overlaps. Users must be 0..N-1 without holes.
  static PiecewiseTrace from_rows(std::vector<TraceRow<V>> rows);
  static PiecewiseTrace from_pieces(std::vector<std::vector<TracePiece<V>>> pieces);

  int users() const { return static_cast<int>(pieces_.size()); }
  double horizon() const { return horizon_; }
  const std::vector<TracePiece<V>>& pieces(UserId n) const;

  // Index of the piece containing t (right-continuous).
  std::size_t piece_index(UserId n, double t) const;
  V value_at(UserId n, double t) const { return pieces(n)[piece_index(n, t)].value; }

  // Smallest piece boundary strictly after t, or nullopt at the horizon.
  std::optional<double> next_breakpoint(UserId n, double t) const;

  std::vector<TraceRow<V>> rows() const;

  // Restriction to users [0, users) over [0, horizon].
  PiecewiseTrace prefix(int users, double horizon) const;

 private:
  void check_user(UserId n) const;

  std::vector<std::vector<TracePiece<V>>> pieces_;
  double horizon_ = 0.0;
};

using CapacityTrace = PiecewiseTrace<double>;
using MobilityTrace = PiecewiseTrace<int>;

// True iff n and u share a hotspot at t; a user always encounters itself.
bool encountered(const MobilityTrace& m, UserId n, UserId u, double t);

// True iff the pair is encountered for every t in [t_from, t_to]. Checked on
// the piece structure: pieces meeting the interval only at an endpoint do not
// count, so the test is on the interval's interior plus t_from.
bool encountered_throughout(const MobilityTrace& m, UserId n, UserId u,
                            double t_from, double t_to);

// First time in [t_from, t_to] at which the pair stops being encountered.
std::optional<double> separation_time(const MobilityTrace& m, UserId n, UserId u,
                                      double t_from, double t_to);

// Exact integral of h_n over [t_from, t_to] in Mbit.
double integrate_capacity(const CapacityTrace& c, UserId n, double t_from, double t_to);

// Smallest t_end with integrate_capacity(n, t_start, t_end) == volume, or
// nullopt if the trace ends first.
std::optional<double> download_end_time(const CapacityTrace& c, UserId n, double t_start,
                                        double volume);

struct SynthConfig {
  int users = 2;
  double horizon = 600.0;
  int hotspots = 2;
  double dwell_mean = 20.0;
  double transition_mean = 10.0;
  double cap_lo = 0.0;
  double cap_hi = 5.0;
  double cap_period = 10.0;
  double cap_jitter = 0.5;

  void validate() const;
};

// Named mobility presets: "dense-short" (frequent short encounters) and
// "sparse-long" (rarer, longer encounters). Only mobility fields change.
SynthConfig apply_mobility_preset(SynthConfig cfg, const std::string& name);

struct NetworkTraces {
  CapacityTrace capacity;
  MobilityTrace mobility;
};

// Deterministic for a fixed (cfg, seed). Dwell and transition durations are
// exponential with the configured means. Each user gets a mean capacity
// drawn uniformly in [cap_lo, cap_hi]; every cap_period seconds the capacity
// is redrawn uniformly within mean * (1 +- cap_jitter).
NetworkTraces synth_traces(const SynthConfig& cfg, std::uint64_t seed);

// Every user parked at hotspot 1 for the whole horizon.
MobilityTrace colocated_mobility(int users, double horizon);

// CSV headers: `user_id,t_from,t_to,capacity_mbps` and
// `user_id,t_from,t_to,hotspot_id`.
CapacityTrace read_capacity_csv(std::istream& in);
MobilityTrace read_mobility_csv(std::istream& in);
CapacityTrace read_capacity_csv_file(const std::string& path);
MobilityTrace read_mobility_csv_file(const std::string& path);
void write_capacity_csv(std::ostream& out, const CapacityTrace& c);
void write_mobility_csv(std::ostream& out, const MobilityTrace& m);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace coopstream
