#include <doctest.h>

#include <random>
#include <sstream>

#include "coopstream/model.hpp"
#include "coopstream/traces.hpp"

using namespace coopstream;

namespace {

UserProfile video_user(UserId id, double len = 10.0) {
  UserProfile p;
  p.id = id;
  p.ladder = BitrateLadder({0.2, 0.4, 0.7, 1.3, 2.3});
  p.is_video_user = true;
  p.video_len = len;
  return p;
}

CapacityTrace cap_rows(std::vector<TraceRow<double>> rows) {
  return CapacityTrace::from_rows(std::move(rows));
}

}  // namespace

TEST_CASE("segment volume is bitrate times segment length") {
  UserProfile p = video_user(0);
  CHECK(segment_volume(p, 5) == doctest::Approx(4.6).epsilon(1e-12));
  CHECK(segment_volume(p, 1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK_THROWS_AS(segment_volume(p, 6), ModelError);
  CHECK_THROWS_AS(segment_volume(p, 0), ModelError);
}

TEST_CASE("ladder lookups") {
  BitrateLadder l({0.2, 0.4, 0.7});
  CHECK(l.level_of(0.4) == 2);
  CHECK(l.level_of(0.5) == 0);
  CHECK(l.top() == 0.7);
  CHECK(l.bottom() == 0.2);
}

TEST_CASE("profile validation rejects broken ladders and coefficients") {
  UserProfile p = video_user(0);
  CHECK_NOTHROW(validate_profile(p));
  p.ladder = BitrateLadder({0.4, 0.2});
  CHECK_THROWS_AS(validate_profile(p), ModelError);
  p = video_user(0);
  p.buffer_cap = 1.0;
  CHECK_THROWS_AS(validate_profile(p), ModelError);
  p = video_user(0);
  p.c_data = -0.1;
  CHECK_THROWS_AS(validate_profile(p), ModelError);
}

TEST_CASE("receive sequences are ordered by sequence number") {
  DownloadSequence a{0, {{0, 1, 1, 0.2, 0.0, 1.0, 2}, {0, 1, 1, 0.2, 1.0, 2.0, 3}}};
  DownloadSequence b{1, {{1, 1, 2, 0.4, 0.0, 0.5, 1}}};
  const auto rx = build_receive_sequences({a, b}, 2);
  REQUIRE(rx[1].records.size() == 3);
  CHECK(rx[1].records[0].owner_seq_no == 1);
  CHECK(rx[1].records[2].owner_seq_no == 3);
  CHECK(rx[0].records.empty());
  CHECK_NOTHROW(validate_receive_sequence(rx[1]));

  DownloadSequence dup{1, {{1, 1, 2, 0.4, 0.0, 0.5, 2}}};
  CHECK_THROWS_AS(build_receive_sequences({a, dup}, 2), ModelError);
}

TEST_CASE("overlapping downloads are rejected") {
  DownloadSequence s{0, {{0, 0, 1, 0.2, 0.0, 2.0, 1}, {0, 0, 1, 0.2, 1.0, 3.0, 2}}};
  CHECK_THROWS_AS(validate_download_sequence(s), ModelError);
}

TEST_CASE("capacity integration") {
  const auto flat = cap_rows({{0, 0.0, 10.0, 3.5}});
  CHECK(integrate_capacity(flat, 0, 0.0, 2.0) == doctest::Approx(7.0).epsilon(1e-12));

  const auto steps = cap_rows({{0, 0.0, 1.0, 2.0}, {0, 1.0, 2.0, 4.0}});
  CHECK(integrate_capacity(steps, 0, 0.5, 1.5) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(integrate_capacity(steps, 0, 1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(integrate_capacity(steps, 0, 1.5, 0.5), ModelError);
  CHECK_THROWS_AS(integrate_capacity(steps, 0, 0.0, 3.0), ModelError);
}

TEST_CASE("integration is additive and inverted by download_end_time") {
  std::mt19937_64 rng(7);
  SynthConfig cfg;
  cfg.users = 3;
  cfg.horizon = 50.0;
  cfg.cap_period = 1.7;
  const auto tr = synth_traces(cfg, 11);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng), c = u(rng);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const int n = i % 3;
    const double ab = integrate_capacity(tr.capacity, n, a, b);
    const double bc = integrate_capacity(tr.capacity, n, b, c);
    CHECK(ab + bc == doctest::Approx(integrate_capacity(tr.capacity, n, a, c)).epsilon(1e-9));

    if (ab > 1e-6) {
      const auto end = download_end_time(tr.capacity, n, a, ab);
      REQUIRE(end.has_value());
      CHECK(integrate_capacity(tr.capacity, n, a, *end) == doctest::Approx(ab).epsilon(1e-9));
      CHECK(*end <= b + 1e-9);
    }
  }
}

TEST_CASE("download_end_time at constant rate and past the trace") {
  const auto flat = cap_rows({{0, 0.0, 10.0, 2.3}});
  CHECK(*download_end_time(flat, 0, 1.0, 4.6) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_FALSE(download_end_time(flat, 0, 9.0, 4.6).has_value());

  const auto outage = cap_rows({{0, 0.0, 2.0, 0.0}, {0, 2.0, 4.0, 1.0}});
  CHECK(*download_end_time(outage, 0, 0.0, 1.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(*download_end_time(outage, 0, 0.0, 0.0) == 0.0);
}

TEST_CASE("encounters follow co-location") {
  std::istringstream in(
      "user_id,t_from,t_to,hotspot_id\n"
      "0,0,10,1\n"
      "1,0,5,1\n"
      "1,5,10,2\n"
      "2,0,10,0\n"
      "3,0,10,0\n");
  const auto m = read_mobility_csv(in);
  CHECK(encountered(m, 0, 1, 4.0));
  CHECK_FALSE(encountered(m, 0, 1, 5.0));
  CHECK(encountered(m, 2, 2, 3.0));
  CHECK_FALSE(encountered(m, 2, 3, 3.0));  // both outside every hotspot
  CHECK(encountered_throughout(m, 0, 1, 0.0, 5.0));
  CHECK_FALSE(encountered_throughout(m, 0, 1, 0.0, 5.5));
  CHECK(*separation_time(m, 0, 1, 1.0, 8.0) == doctest::Approx(5.0));
  CHECK_FALSE(separation_time(m, 0, 1, 1.0, 5.0).has_value());
  CHECK(*separation_time(m, 0, 1, 6.0, 8.0) == doctest::Approx(6.0));
}

TEST_CASE("CSV round trip and rejection of malformed traces") {
  const auto steps = cap_rows({{0, 0.0, 1.0, 2.0}, {0, 1.0, 2.5, 0.1}, {1, 0.0, 2.5, 3.0}});
  std::ostringstream out;
  write_capacity_csv(out, steps);
  std::istringstream in(out.str());
  const auto back = read_capacity_csv(in);
  CHECK(back.users() == 2);
  CHECK(back.horizon() == 2.5);
  CHECK(back.value_at(0, 1.2) == 0.1);

  auto parse = [](const std::string& text) {
    std::istringstream s(text);
    return read_capacity_csv(s);
  };
  CHECK_THROWS_AS(parse("user_id,t_from,t_to,capacity_mbps\n0,0,1,2\n0,1.5,2,2\n"), ModelError);
  CHECK_THROWS_AS(parse("user_id,t_from,t_to,capacity_mbps\n0,0,1,2\n0,0.5,2,2\n"), ModelError);
  CHECK_THROWS_AS(parse("user_id,t_from,t_to,capacity_mbps\n0,0,1,-2\n"), ModelError);
  CHECK_THROWS_AS(parse("user_id,t_from,t_to,capacity_mbps\n0,0,1,x\n"), ModelError);
  CHECK_THROWS_AS(parse("user,a,b,c\n0,0,1,2\n"), ModelError);
  // user 1 missing between 0 and 2
  CHECK_THROWS_AS(parse("user_id,t_from,t_to,capacity_mbps\n0,0,1,2\n2,0,1,2\n"), ModelError);
}

TEST_CASE("synthetic traces are deterministic per seed") {
  SynthConfig cfg;
  cfg.users = 4;
  cfg.horizon = 120.0;
  const auto a = synth_traces(cfg, 42);
  const auto b = synth_traces(cfg, 42);
  const auto c = synth_traces(cfg, 43);
  std::ostringstream sa, sb, sc;
  write_capacity_csv(sa, a.capacity);
  write_mobility_csv(sa, a.mobility);
  write_capacity_csv(sb, b.capacity);
  write_mobility_csv(sb, b.mobility);
  write_capacity_csv(sc, c.capacity);
  write_mobility_csv(sc, c.mobility);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != sc.str());
}

TEST_CASE("synthetic capacity stays within the jitter band of a per-user mean") {
  SynthConfig cfg;
  cfg.users = 6;
  cfg.horizon = 200.0;
  cfg.cap_lo = 1.0;
  cfg.cap_hi = 3.0;
  cfg.cap_jitter = 0.25;
  const auto tr = synth_traces(cfg, 5);
  for (int n = 0; n < cfg.users; ++n) {
    double lo = 1e9, hi = 0.0;
    for (const auto& p : tr.capacity.pieces(n)) {
      lo = std::min(lo, p.value);
      hi = std::max(hi, p.value);
    }
    CHECK(lo >= 0.75 - 1e-12);
    CHECK(hi <= 3.75 + 1e-12);
    CHECK(hi <= lo * (1.25 / 0.75) + 1e-9);
  }
}

TEST_CASE("mobility presets") {
  SynthConfig cfg;
  const auto dense = apply_mobility_preset(cfg, "dense-short");
  const auto sparse = apply_mobility_preset(cfg, "sparse-long");
  CHECK(dense.dwell_mean < sparse.dwell_mean);
  CHECK(dense.hotspots < sparse.hotspots);
  CHECK_THROWS_AS(apply_mobility_preset(cfg, "nowhere"), ModelError);
}

TEST_CASE("prefix keeps the first users and clips the horizon") {
  SynthConfig cfg;
  cfg.users = 4;
  cfg.horizon = 30.0;
  const auto tr = synth_traces(cfg, 3);
  const auto p = tr.capacity.prefix(2, 6.0);
  CHECK(p.users() == 2);
  CHECK(p.horizon() == 6.0);
  CHECK(p.value_at(1, 5.0) == tr.capacity.value_at(1, 5.0));
}
