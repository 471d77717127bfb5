#pragma once

// What a deciding user can observe at a decision-making time: its own link
// capacity and the state of the users it currently encounters.

#include <optional>
#include <vector>

#include "coopstream/model.hpp"

namespace coopstream {

struct ViewUser {
  UserId id = 0;
  const UserProfile* profile = nullptr;
  double buffer = 0.0;                  // q_m(t), seconds
  std::optional<double> last_bitrate;   // bitrate of the last received segment
  int remaining = 0;                    // segments neither delivered nor in flight
  int in_flight = 0;                    // segments currently being downloaded for m
  bool started = false;                 // playback has begun
  bool all_received = false;            // every segment delivered

  bool is_video_user() const { return profile->is_video_user; }
  // May be chosen as the owner of the next download.
  bool candidate() const { return is_video_user() && remaining > 0; }
  // Participates in the buffer drift: still waiting for content.
  bool active() const { return is_video_user() && !all_received; }
  // Can stall during the next download.
  bool can_rebuffer() const { return is_video_user() && started && !all_received; }
  // Buffer room for one more segment, counting segments already in flight.
  bool has_room() const {
    return buffer + (in_flight + 1) * profile->segment_len <= profile->buffer_cap + kTimeEps;
  }
  // Seconds of playback until has_room() becomes true (0 if it already is).
  double room_deficit() const {
    return buffer + (in_flight + 1) * profile->segment_len - profile->buffer_cap;
  }
};

struct SchedulerView {
  UserId decider = 0;
  double clock = 0.0;
  double capacity = 0.0;                 // h_n(t), Mbps
  std::vector<ViewUser> users;           // ascending id, always contains decider
  std::vector<double> throughput_history;  // realized Mbps of the decider's past downloads

  const ViewUser* find(UserId id) const {
    for (const auto& u : users) {
      if (u.id == id) return &u;
    }
    return nullptr;
  }
  const ViewUser& self() const { return *find(decider); }
};

}  // namespace coopstream
