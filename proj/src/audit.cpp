#include <cmath>
#include <sstream>

#include "coopstream/sim.hpp"

namespace coopstream {

namespace {

constexpr double kTol = 1e-9;

std::string where(const DownloadRecord& r) {
  std::ostringstream os;
  os << "record (downloader " << r.downloader << ", owner " << r.owner << ", seq "
     << r.owner_seq_no << ", [" << r.t_start << ", " << r.t_end << "])";
  return os.str();
}

}  // namespace

std::vector<std::string> audit_run(const SimResult& r, const NetworkTraces& traces,
                                   std::span<const UserProfile> profiles, bool force_noncoop) {
  std::vector<std::string> bad;
  const int users = static_cast<int>(profiles.size());
  const double horizon = traces.capacity.horizon();
  auto fail = [&](const std::string& s) { bad.push_back(s); };

  for (const auto& seq : r.downloads) {
    const UserId n = seq.downloader;
    double moved = 0.0;
    for (std::size_t k = 0; k < seq.records.size(); ++k) {
      const auto& rec = seq.records[k];
      if (rec.downloader != n) fail(where(rec) + " filed under downloader " + std::to_string(n));
      if (rec.owner < 0 || rec.owner >= users) {
        fail(where(rec) + ": unknown owner");
        continue;
      }
      const UserProfile& op = profiles[static_cast<std::size_t>(rec.owner)];
      if (!op.ladder.contains_level(rec.level) ||
          std::abs(op.ladder.at(rec.level) - rec.bitrate) > kTol) {
        fail(where(rec) + ": bitrate does not match the owner's ladder");
        continue;
      }
      if (rec.t_start > rec.t_end + kTol) fail(where(rec) + ": starts after it ends");
      if (rec.t_start < -kTol || rec.t_end > horizon + kTol) fail(where(rec) + ": outside [0, T]");
      if (k > 0 && seq.records[k - 1].t_end > rec.t_start + kTol) {
        fail(where(rec) + ": overlaps the previous download (C.1)");
      }
      const double volume = rec.bitrate * op.segment_len;
      const double carried = integrate_capacity(traces.capacity, n, rec.t_start,
                                                std::min(rec.t_end, horizon));
      if (volume > carried + kTol) fail(where(rec) + ": volume exceeds link capacity (C.2)");
      moved += volume;
      const bool together = force_noncoop
                                ? rec.owner == n
                                : encountered_throughout(traces.mobility, n, rec.owner,
                                                         rec.t_start, rec.t_end);
      if (!together) fail(where(rec) + ": users not encountered throughout (C.3)");
    }
    if (moved > integrate_capacity(traces.capacity, n, 0.0, horizon) + kTol) {
      fail("downloader " + std::to_string(n) + ": total volume exceeds integrated capacity");
    }
  }

  std::vector<ReceiveSequence> rx;
  try {
    rx = build_receive_sequences(r.downloads, users);
  } catch (const ModelError& e) {
    fail(std::string("receive sequences: ") + e.what());
    return bad;
  }
  for (int m = 0; m < users; ++m) {
    const auto& seq = rx[static_cast<std::size_t>(m)];
    const UserProfile& p = profiles[static_cast<std::size_t>(m)];
    try {
      validate_receive_sequence(seq);
    } catch (const ModelError& e) {
      fail("owner " + std::to_string(m) + ": " + e.what());
      continue;
    }
    if (static_cast<int>(seq.records.size()) > p.segment_count()) {
      fail("owner " + std::to_string(m) + ": more segments than the video holds");
    }
    for (double q : buffer_trajectory(seq, p)) {
      if (q < -kTol || q > p.buffer_cap + kTol) {
        fail("owner " + std::to_string(m) + ": buffer " + std::to_string(q) +
             " outside [0, Q] (C.4)");
        break;
      }
    }
    double realized = 0.0;
    if (static_cast<std::size_t>(m) < r.rebuffer_logs.size()) {
      for (const auto& s : r.rebuffer_logs[static_cast<std::size_t>(m)]) realized += s.duration;
    }
    double expected = 0.0;
    for (const auto& s : rebuf_loss(seq, p).second) expected += s.duration;
    if (std::abs(realized - expected) > kTol) {
      fail("owner " + std::to_string(m) + ": observed stall " + std::to_string(realized) +
           " s differs from the receive-sequence stall " + std::to_string(expected) + " s");
    }
  }
  return bad;
}

}  // namespace coopstream
