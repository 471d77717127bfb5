#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "coopstream/harness.hpp"

namespace coopstream {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

struct Field {
  std::string key;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

Field dbl(std::string key, double ScenarioConfig::*m) {
  return {key, [key, m](ScenarioConfig& c, const std::string& v) { c.*m = to_double(key, v); },
          [m](const ScenarioConfig& c) { return format_double(c.*m); }};
}

template <typename I>
Field integer(std::string key, I ScenarioConfig::*m) {
  return {key,
          [key, m](ScenarioConfig& c, const std::string& v) { c.*m = static_cast<I>(to_int(key, v)); },
          [m](const ScenarioConfig& c) { return std::to_string(c.*m); }};
}

Field flag(std::string key, bool ScenarioConfig::*m) {
  return {key, [key, m](ScenarioConfig& c, const std::string& v) { c.*m = to_bool(key, v); },
          [m](const ScenarioConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

Field text(std::string key, std::string ScenarioConfig::*m) {
  return {key, [m](ScenarioConfig& c, const std::string& v) { c.*m = v; },
          [m](const ScenarioConfig& c) { return c.*m; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    using C = ScenarioConfig;
    std::vector<Field> f{
        text("name", &C::name),
        integer("users", &C::users),
        dbl("video_fraction", &C::video_fraction),
        dbl("capacity_lo", &C::capacity_lo),
        dbl("capacity_hi", &C::capacity_hi),
        dbl("capacity_period", &C::capacity_period),
        dbl("capacity_jitter", &C::capacity_jitter),
        text("mobility", &C::mobility),
        integer("hotspots", &C::hotspots),
        dbl("dwell_mean", &C::dwell_mean),
        dbl("transition_mean", &C::transition_mean),
        text("capacity_csv", &C::capacity_csv),
        text("mobility_csv", &C::mobility_csv),
        dbl("horizon", &C::horizon),
        dbl("video_len", &C::video_len),
        dbl("segment_len", &C::segment_len),
        dbl("buffer_cap", &C::buffer_cap),
        {"ladder",
         [](C& c, const std::string& v) {
           c.ladder.clear();
           for (const auto& item : split_list(v)) c.ladder.push_back(to_double("ladder", item));
         },
         [](const C& c) {
           std::vector<std::string> items;
           for (double r : c.ladder) items.push_back(format_double(r));
           return join(items);
         }},
        dbl("theta", &C::theta),
        dbl("phi_qdeg", &C::phi_qdeg),
        dbl("phi_rebuf", &C::phi_rebuf),
        dbl("c_time", &C::c_time),
        dbl("c_data", &C::c_data),
        dbl("w_time", &C::w_time),
        dbl("w_data", &C::w_data),
        {"schedulers", [](C& c, const std::string& v) { c.schedulers = split_list(v); },
         [](const C& c) { return join(c.schedulers); }},
        dbl("lambda", &C::lambda),
        flag("skip_unprofitable", &C::skip_unprofitable),
        dbl("delta_th", &C::delta_th),
        dbl("Delta_th", &C::Delta_th),
        integer("prediction_window", &C::prediction_window),
        flag("baseline_tune", &C::baseline_tune),
        dbl("sleep_window", &C::sleep_window),
        dbl("ready_retry", &C::ready_retry),
        flag("sleep_enabled", &C::sleep_enabled),
        integer("seed", &C::seed),
        integer("repetitions", &C::repetitions),
        flag("write_records", &C::write_records),
        flag("bound", &C::bound),
        integer("refine", &C::refine),
        integer("bound_users", &C::bound_users),
        dbl("bound_horizon", &C::bound_horizon),
        dbl("bound_video_len", &C::bound_video_len),
        dbl("bound_segment_len", &C::bound_segment_len),
        dbl("bound_buffer_cap", &C::bound_buffer_cap),
        integer("bound_max_levels", &C::bound_max_levels),
        integer("bound_node_budget", &C::bound_node_budget),
    };
    return f;
  }();
  return all;
}

std::string canonical_key(std::string key) {
  for (auto& ch : key) {
    if (ch == '-') ch = '_';
  }
  if (key == "λ") return "lambda";
  return key;
}

bool is_multiple(double len, double step) {
  const double k = len / step;
  return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k));
}

}  // namespace

void set_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  const std::string k = canonical_key(trim(key));
  for (const auto& f : fields()) {
    if (f.key == k) {
      f.set(cfg, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

void print_config(std::ostream& out, const ScenarioConfig& cfg) {
  for (const auto& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

void ScenarioConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(users >= 1, "users must be >= 1");
  need(video_fraction >= 0.0 && video_fraction <= 1.0, "video_fraction must be in [0, 1]");
  need(capacity_lo >= 0.0 && capacity_lo <= capacity_hi, "need 0 <= capacity_lo <= capacity_hi");
  need(capacity_period > 0.0, "capacity_period must be > 0");
  need(capacity_jitter >= 0.0 && capacity_jitter <= 1.0, "capacity_jitter must be in [0, 1]");
  const bool csv = mobility == "csv";
  need(csv || mobility == "dense-short" || mobility == "sparse-long" || mobility == "synthetic" ||
           mobility == "full-coop" || mobility == "non-coop",
       "mobility must be dense-short, sparse-long, synthetic, full-coop, non-coop or csv");
  need(!csv || (!capacity_csv.empty() && !mobility_csv.empty()),
       "mobility = csv needs capacity_csv and mobility_csv");
  need(hotspots >= 1, "hotspots must be >= 1");
  need(dwell_mean > 0.0 && transition_mean >= 0.0, "dwell_mean > 0 and transition_mean >= 0");
  need(horizon > 0.0, "horizon must be > 0");
  need(segment_len > 0.0, "segment_len must be > 0");
  need(buffer_cap >= segment_len, "buffer_cap < segment_len");
  need(video_len > 0.0 && is_multiple(video_len, segment_len),
       "video_len must be a positive multiple of segment_len");
  need(!ladder.empty(), "empty ladder");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    need(ladder[i] > 0.0 && (i == 0 || ladder[i] > ladder[i - 1]),
         "ladder must be positive and strictly increasing");
  }
  need(theta >= 0 && phi_qdeg >= 0 && phi_rebuf >= 0 && c_time >= 0 && c_data >= 0 &&
           w_time >= 0 && w_data >= 0,
       "QoE and energy coefficients must be >= 0");
  need(!schedulers.empty(), "no schedulers configured");
  for (const auto& s : schedulers) {
    need(s == "lyapunov" || s == "buffer" || s == "prediction" || s == "greedy-noncoop",
         "unknown scheduler '" + s + "'");
  }
  need(lambda >= 0.0, "lambda must be >= 0");
  need(delta_th >= 0.0 && delta_th <= 1.0, "delta_th must be in [0, 1]");
  need(Delta_th >= 0.0, "Delta_th must be >= 0");
  need(prediction_window >= 1, "prediction_window must be >= 1");
  need(sleep_window > 0.0 && ready_retry > 0.0, "sleep_window and ready_retry must be > 0");
  need(repetitions >= 1, "repetitions must be >= 1");
  need(refine >= 0, "refine must be >= 0");
  need(bound_users >= 1, "bound_users must be >= 1");
  need(bound_horizon >= 1.0 && std::abs(bound_horizon - std::round(bound_horizon)) < 1e-9,
       "bound_horizon must be a whole number of seconds >= 1");
  need(bound_segment_len > 0.0 && bound_buffer_cap >= bound_segment_len,
       "bound_buffer_cap must be >= bound_segment_len > 0");
  need(bound_video_len > 0.0 && is_multiple(bound_video_len, bound_segment_len),
       "bound_video_len must be a positive multiple of bound_segment_len");
  need(bound_max_levels >= 1, "bound_max_levels must be >= 1");
  need(bound_node_budget >= 1, "bound_node_budget must be >= 1");
}

}  // namespace coopstream
