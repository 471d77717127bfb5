#pragma once

// QoE value, quality-degradation and rebuffering losses, cellular and WiFi
// energy, and their composition into per-user and social welfare for the
// segmented operation. Also the per-decision welfare used by the online
// scheduler.

#include <span>
#include <utility>
#include <vector>

#include "coopstream/model.hpp"
#include "coopstream/view.hpp"

namespace coopstream {

struct RebufferEntry {
  int seq_no = 0;          // the receipt that ended the stall
  double duration = 0.0;   // seconds
};
using RebufferLog = std::vector<RebufferEntry>;

// g(r) = ln(1 + theta * r), value per second of playback at bitrate r.
double value_fn(double theta, double bitrate);

double total_value(const ReceiveSequence& seq, const UserProfile& p);
double qdeg_loss(const ReceiveSequence& seq, const UserProfile& p);

// Replays the buffer rule over the receipts. The first receipt fills an
// empty buffer with one segment and is never charged; each later receipt
// adds phi_rebuf * [gap - q_prev]^+. Only nonzero stalls are logged.
std::pair<double, RebufferLog> rebuf_loss(const ReceiveSequence& seq, const UserProfile& p);

// Buffer level right after each receipt.
std::vector<double> buffer_trajectory(const ReceiveSequence& seq, const UserProfile& p);

// `profiles` is indexed by user id and supplies each record owner's
// segment length.
double energy_cell(const DownloadSequence& seq, const UserProfile& p,
                   std::span<const UserProfile> profiles);
double energy_wifi(const DownloadSequence& seq, const UserProfile& p,
                   std::span<const UserProfile> profiles);

WelfareBreakdown user_welfare(const DownloadSequence& dl, const ReceiveSequence& rx,
                              const UserProfile& p, std::span<const UserProfile> profiles);

// Sum of user welfare. Rebuilds receive sequences from the downloads and
// throws ModelError if they are inconsistent.
double social_welfare(const std::vector<DownloadSequence>& downloads,
                      std::span<const UserProfile> profiles);

// Total welfare P(u, z) generated if the decider downloads owner u's next
// segment at level z: receiver utility for the segment, rebuffering risk of
// the other stall-prone users in the view, minus the decider's energy.
double decision_welfare(const SchedulerView& view, UserId owner, int level);

// Estimated download time R_u^z * beta_u / h_n(t).
double estimated_download_time(const SchedulerView& view, const UserProfile& owner, int level);

}  // namespace coopstream
