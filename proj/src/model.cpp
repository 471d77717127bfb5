#include "coopstream/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace coopstream {

double BitrateLadder::at(int level) const {
  if (!contains_level(level)) {
    throw ModelError("bitrate level " + std::to_string(level) + " outside 1.." +
                     std::to_string(size()));
  }
  return levels_[static_cast<std::size_t>(level - 1)];
}

int BitrateLadder::level_of(double bitrate) const {
  for (int z = 1; z <= size(); ++z) {
    if (std::abs(levels_[static_cast<std::size_t>(z - 1)] - bitrate) <= 1e-9) return z;
  }
  return 0;
}

int UserProfile::segment_count() const {
  if (!is_video_user || segment_len <= 0.0) return 0;
  return static_cast<int>(std::llround(video_len / segment_len));
}

void validate_profile(const UserProfile& p) {
  const std::string who = "user " + std::to_string(p.id) + ": ";
  if (p.ladder.empty()) throw ModelError(who + "empty ladder");
  const auto& lv = p.ladder.levels();
  for (std::size_t i = 0; i < lv.size(); ++i) {
    if (!(lv[i] > 0.0)) throw ModelError(who + "ladder bitrate must be > 0");
    if (i > 0 && !(lv[i] > lv[i - 1])) {
      throw ModelError(who + "ladder not strictly increasing");
    }
  }
  if (!(p.segment_len > 0.0)) throw ModelError(who + "segment_len must be > 0");
  if (p.buffer_cap < p.segment_len - kTimeEps) {
    throw ModelError(who + "buffer_cap < segment_len");
  }
  const std::pair<const char*, double> coefs[] = {
      {"theta", p.theta},   {"phi_qdeg", p.phi_qdeg}, {"phi_rebuf", p.phi_rebuf},
      {"c_time", p.c_time}, {"c_data", p.c_data},     {"w_time", p.w_time},
      {"w_data", p.w_data}};
  for (const auto& [name, v] : coefs) {
    if (!(v >= 0.0)) throw ModelError(who + name + " must be >= 0");
  }
  if (p.video_len < 0.0) throw ModelError(who + "video_len must be >= 0");
  if (!p.is_video_user && p.video_len != 0.0) {
    throw ModelError(who + "idle helper must have video_len 0");
  }
  const double segs = p.video_len / p.segment_len;
  if (std::abs(segs - std::round(segs)) > 1e-9) {
    throw ModelError(who + "video_len is not a multiple of segment_len");
  }
}

double segment_volume(const UserProfile& owner, int level) {
  return owner.ladder.at(level) * owner.segment_len;
}

void validate_download_sequence(const DownloadSequence& seq) {
  for (std::size_t k = 0; k < seq.records.size(); ++k) {
    const auto& r = seq.records[k];
    if (r.downloader != seq.downloader) {
      throw ModelError("record downloader does not match sequence");
    }
    if (r.t_start > r.t_end + kTimeEps) throw ModelError("record ends before it starts");
    if (k + 1 < seq.records.size() && r.t_end > seq.records[k + 1].t_start + kTimeEps) {
      throw ModelError("download overlap: record " + std::to_string(k + 1) +
                       " ends after record " + std::to_string(k + 2) + " starts");
    }
  }
}

void validate_receive_sequence(const ReceiveSequence& seq) {
  for (std::size_t k = 0; k < seq.records.size(); ++k) {
    const auto& r = seq.records[k];
    if (r.owner != seq.owner) throw ModelError("record owner does not match sequence");
    if (r.owner_seq_no != static_cast<int>(k) + 1) {
      throw ModelError("owner " + std::to_string(seq.owner) +
                       ": seq numbers not contiguous from 1");
    }
    if (k > 0 && seq.records[k - 1].t_end > r.t_end + kTimeEps) {
      throw ModelError("owner " + std::to_string(seq.owner) +
                       ": segments not received sequentially");
    }
  }
}

std::vector<ReceiveSequence> build_receive_sequences(
    const std::vector<DownloadSequence>& downloads, int users) {
  std::vector<ReceiveSequence> out(static_cast<std::size_t>(users));
  for (int m = 0; m < users; ++m) out[static_cast<std::size_t>(m)].owner = m;
  std::set<std::pair<UserId, int>> seen;
  for (const auto& seq : downloads) {
    for (const auto& r : seq.records) {
      if (r.owner < 0 || r.owner >= users) {
        throw ModelError("record owner " + std::to_string(r.owner) + " unknown");
      }
      if (!seen.emplace(r.owner, r.owner_seq_no).second) {
        throw ModelError("duplicate segment: owner " + std::to_string(r.owner) +
                         " seq " + std::to_string(r.owner_seq_no));
      }
      out[static_cast<std::size_t>(r.owner)].records.push_back(r);
    }
  }
  for (auto& rx : out) {
    std::sort(rx.records.begin(), rx.records.end(),
              [](const DownloadRecord& a, const DownloadRecord& b) {
                return a.owner_seq_no < b.owner_seq_no;
              });
  }
  return out;
}

void WelfareBreakdown::compose() {
  utility = value - loss_qdeg - loss_rebuf;
  cost = energy_cell + energy_wifi;
  welfare = utility - cost;
}

}  // namespace coopstream
