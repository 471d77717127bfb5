#pragma once

// Shared domain vocabulary for cooperative segmented video streaming:
// users, bitrate ladders, downloaded segments and the per-user download and
// receive sequences derived from them.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace coopstream {

// Absolute tolerance for all time (seconds) and volume (Mbit) comparisons.
inline constexpr double kTimeEps = 1e-9;

using UserId = int;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Available bitrates in Mbps, strictly increasing. Levels are 1-based.
class BitrateLadder {
 public:
  BitrateLadder() = default;
  explicit BitrateLadder(std::vector<double> levels) : levels_(std::move(levels)) {}

  int size() const { return static_cast<int>(levels_.size()); }
  bool empty() const { return levels_.empty(); }
  bool contains_level(int level) const { return level >= 1 && level <= size(); }

  // Bitrate of 1-based level; throws ModelError when out of range.
  double at(int level) const;
  double top() const { return levels_.back(); }
  double bottom() const { return levels_.front(); }

  // 1-based level whose bitrate equals `bitrate` within 1e-9, or 0.
  int level_of(double bitrate) const;

  const std::vector<double>& levels() const { return levels_; }

 private:
  std::vector<double> levels_;
};

struct UserProfile {
  UserId id = 0;
  BitrateLadder ladder;
  double segment_len = 2.0;   // seconds of playback per segment
  double buffer_cap = 40.0;   // seconds
  double theta = 1.0;         // value function scale
  double phi_qdeg = 1.0;      // loss per Mbps of bitrate decrease
  double phi_rebuf = 1.0;     // loss per second of rebuffering
  double c_time = 0.5;        // cellular energy per second downloading
  double c_data = 0.1;        // cellular energy per Mbit
  double w_time = 0.0;        // WiFi energy per second (WiFi time is zero)
  double w_data = 0.05;       // WiFi energy per Mbit forwarded
  double video_len = 0.0;     // seconds; 0 for idle helpers
  bool is_video_user = false;

  // Number of segments in this user's video.
  int segment_count() const;
};

// Throws ModelError describing the first violated invariant.
void validate_profile(const UserProfile& p);

// Mbit carried by one segment of `owner` at `level` (R_u^level * beta_u).
double segment_volume(const UserProfile& owner, int level);

struct DownloadRecord {
  UserId downloader = 0;
  UserId owner = 0;
  int level = 1;
  double bitrate = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  int owner_seq_no = 0;  // 1-based position in the owner's playback order
};

struct DownloadSequence {
  UserId downloader = 0;
  std::vector<DownloadRecord> records;
};

struct ReceiveSequence {
  UserId owner = 0;
  std::vector<DownloadRecord> records;  // sorted by owner_seq_no
};

// Checks download timing (each record ends before the next starts).
void validate_download_sequence(const DownloadSequence& seq);

// Checks contiguous 1.. seq numbers, correct owner and nondecreasing
// receive times.
void validate_receive_sequence(const ReceiveSequence& seq);

// Groups every record by owner and orders it for playback. Throws ModelError
// on a duplicated (owner, seq_no) pair or an owner index outside [0, users).
std::vector<ReceiveSequence> build_receive_sequences(
    const std::vector<DownloadSequence>& downloads, int users);

struct WelfareBreakdown {
  double value = 0.0;
  double loss_qdeg = 0.0;
  double loss_rebuf = 0.0;
  double energy_cell = 0.0;
  double energy_wifi = 0.0;
  double utility = 0.0;
  double cost = 0.0;
  double welfare = 0.0;

  // Fills utility, cost and welfare from the five primary terms.
  void compose();
};

}  // namespace coopstream
