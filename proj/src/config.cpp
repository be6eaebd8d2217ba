#include "emot/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "emot/error.hpp"

namespace emot {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

ConfigValue parse_value(std::string_view raw, std::size_t line) {
  if (raw.empty()) throw ParseError("missing value", line);
  if (raw.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < raw.size() && raw[i] != '"'; ++i) {
      if (raw[i] == '\\' && i + 1 < raw.size()) {
        const char e = raw[++i];
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += raw[i];
      }
    }
    if (i >= raw.size()) throw ParseError("unterminated string", line);
    const auto rest = trim(raw.substr(i + 1));
    if (!rest.empty() && rest.front() != '#') throw ParseError("trailing characters after string", line);
    return out;
  }
  const auto hash = raw.find('#');
  const std::string_view v = trim(raw.substr(0, hash));
  if (v == "true") return true;
  if (v == "false") return false;
  std::int64_t i = 0;
  const char* first = v.data() + (v.size() && v.front() == '+');
  const char* last = v.data() + v.size();
  if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc{} && p == last) return i;
  double d = 0;
  if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc{} && p == last && std::isfinite(d)) return d;
  throw ParseError("cannot parse value '" + std::string(v) + "'", line);
}

}  // namespace

std::optional<std::int64_t> parse_duration_us(std::string_view text) {
  struct Unit {
    std::string_view suffix;
    std::int64_t scale;
  };
  for (const Unit& u : {Unit{"ms", 1000}, Unit{"us", 1}, Unit{"s", 1000000}, Unit{"", 1}}) {
    if (text.size() < u.suffix.size() || text.substr(text.size() - u.suffix.size()) != u.suffix) continue;
    const std::string_view num = text.substr(0, text.size() - u.suffix.size());
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (num.empty() || ec != std::errc{} || p != num.data() + num.size()) continue;
    return v * u.scale;
  }
  return std::nullopt;
}

std::optional<SensorGeometry> parse_geometry(std::string_view text) {
  const auto x = text.find('x');
  if (x == std::string_view::npos) return std::nullopt;
  SensorGeometry g;
  auto a = std::from_chars(text.data(), text.data() + x, g.width);
  auto b = std::from_chars(text.data() + x + 1, text.data() + text.size(), g.height);
  if (a.ec != std::errc{} || a.ptr != text.data() + x || b.ec != std::errc{} ||
      b.ptr != text.data() + text.size() || g.width <= 0 || g.height <= 0)
    return std::nullopt;
  return g;
}

std::map<std::string, ConfigValue> parse_config_table(std::string_view text) {
  std::map<std::string, ConfigValue> table;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (s.front() == '[') {
      const auto close = s.find(']');
      if (close == std::string_view::npos) throw ParseError("unterminated section header", line);
      section = std::string(trim(s.substr(1, close - 1)));
      if (!bare_key(section)) throw ParseError("invalid section name", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line);
    const std::string_view key = trim(s.substr(0, eq));
    if (!bare_key(key)) throw ParseError("invalid key '" + std::string(key) + "'", line);
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (table.count(full)) throw ParseError("duplicate key " + full, line);
    table.emplace(full, parse_value(trim(s.substr(eq + 1)), line));
  }
  return table;
}

ToolkitConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  std::map<std::string, ConfigValue> table;
  try {
    table = parse_config_table(text);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  ToolkitConfig cfg;
  std::vector<std::string> bad;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  auto as_double = [](const ConfigValue& v) -> std::optional<double> {
    if (auto d = std::get_if<double>(&v)) return *d;
    if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::nullopt;
  };
  auto as_int = [](const ConfigValue& v) -> std::optional<std::int64_t> {
    if (auto i = std::get_if<std::int64_t>(&v)) return *i;
    return std::nullopt;
  };
  auto as_string = [](const ConfigValue& v) -> std::optional<std::string> {
    if (auto s = std::get_if<std::string>(&v)) return *s;
    return std::nullopt;
  };
  auto as_bool = [](const ConfigValue& v) -> std::optional<bool> {
    if (auto b = std::get_if<bool>(&v)) return *b;
    return std::nullopt;
  };

  using Setter = std::function<bool(const ConfigValue&)>;
  auto real = [&](double& dst) -> Setter {
    return [&, p = &dst](const ConfigValue& v) { auto d = as_double(v); if (d) *p = *d; return d.has_value(); };
  };
  auto integer = [&](auto& dst) -> Setter {
    return [&, p = &dst](const ConfigValue& v) {
      auto i = as_int(v);
      if (i) *p = static_cast<std::remove_reference_t<decltype(dst)>>(*i);
      return i.has_value();
    };
  };
  auto flag = [&](bool& dst) -> Setter {
    return [&, p = &dst](const ConfigValue& v) { auto b = as_bool(v); if (b) *p = *b; return b.has_value(); };
  };
  auto class_of = [&](ClassId& dst) -> Setter {
    return [&, p = &dst](const ConfigValue& v) {
      auto s = as_string(v);
      auto c = s ? parse_class(*s) : std::nullopt;
      if (c) *p = *c;
      return c.has_value();
    };
  };

  SequenceManifest seq;
  bool has_sequence = false;
  std::string seq_events, seq_gt;
  std::int64_t min_pts = static_cast<std::int64_t>(cfg.cluster.min_pts);
  std::int64_t min_events = static_cast<std::int64_t>(cfg.cluster.min_cluster_events);

  std::map<std::string, Setter> setters = {
      {"class", class_of(cfg.class_id)},
      {"events.window_us", integer(cfg.window_us)},
      {"events.window",
       [&](const ConfigValue& v) {
         auto s = as_string(v);
         auto d = s ? parse_duration_us(*s) : std::nullopt;
         if (d) cfg.window_us = *d;
         return d.has_value();
       }},
      {"events.width", integer(cfg.geometry.width)},
      {"events.height", integer(cfg.geometry.height)},
      {"events.anchor",
       [&](const ConfigValue& v) {
         auto s = as_string(v);
         if (s == "first") cfg.anchor = WindowAnchor::first_event;
         else if (s == "zero") cfg.anchor = WindowAnchor::zero;
         else return false;
         return true;
       }},
      {"tracker.score_threshold", real(cfg.tracker.score_threshold)},
      {"tracker.first_gate", real(cfg.tracker.first_gate)},
      {"tracker.second_gate", real(cfg.tracker.second_gate)},
      {"tracker.max_lost", integer(cfg.tracker.max_lost)},
      {"tracker.activation_hits", integer(cfg.tracker.activation_hits)},
      {"tracker.motion_weight", real(cfg.tracker.motion_weight)},
      {"tracker.inertia_weight", real(cfg.tracker.inertia_weight)},
      {"tracker.history_len", integer(cfg.tracker.history_len)},
      {"tracker.init_from_low", flag(cfg.tracker.init_from_low)},
      {"tracker.enable_second_stage", flag(cfg.tracker.enable_second_stage)},
      {"kalman.std_weight_position", real(cfg.tracker.noise.std_weight_position)},
      {"kalman.std_weight_velocity", real(cfg.tracker.noise.std_weight_velocity)},
      {"cluster.eps", integer(cfg.cluster.eps)},
      {"cluster.min_pts", integer(min_pts)},
      {"cluster.min_cluster_events", integer(min_events)},
      {"cluster.score_saturation", real(cfg.cluster.score_saturation)},
      {"sequence.name",
       [&](const ConfigValue& v) { auto s = as_string(v); if (s) seq.name = *s; return s.has_value(); }},
      {"sequence.class", class_of(seq.class_id)},
      {"sequence.events",
       [&](const ConfigValue& v) { auto s = as_string(v); if (s) seq_events = *s; return s.has_value(); }},
      {"sequence.gt",
       [&](const ConfigValue& v) { auto s = as_string(v); if (s) seq_gt = *s; return s.has_value(); }},
      {"sequence.split",
       [&](const ConfigValue& v) {
         auto s = as_string(v);
         if (s == "train") seq.split = Split::train;
         else if (s == "test") seq.split = Split::test;
         else return false;
         return true;
       }},
      {"sequence.frame_count", integer(seq.frame_count)},
  };

  for (const auto& [key, value] : table) {
    if (key.rfind("paths.", 0) == 0) {
      if (auto s = as_string(value)) cfg.paths[key.substr(6)] = resolve(*s);
      else bad.push_back(key);
      continue;
    }
    auto it = setters.find(key);
    if (it == setters.end()) {
      bad.push_back(key + " (unknown)");
      continue;
    }
    if (key.rfind("sequence.", 0) == 0) has_sequence = true;
    if (!it->second(value)) bad.push_back(key);
  }

  if (min_pts < 1) bad.push_back("cluster.min_pts");
  else cfg.cluster.min_pts = static_cast<std::uint64_t>(min_pts);
  if (min_events < 1) bad.push_back("cluster.min_cluster_events");
  else cfg.cluster.min_cluster_events = static_cast<std::uint64_t>(min_events);
  if (cfg.window_us <= 0) bad.push_back("events.window_us");
  if (cfg.geometry.width <= 0) bad.push_back("events.width");
  if (cfg.geometry.height <= 0) bad.push_back("events.height");

  auto collect = [&](const std::function<void()>& check, const std::string& prefix) {
    try {
      check();
    } catch (const ConfigError& e) {
      std::istringstream words(std::string(e.what()).substr(std::string(e.what()).find(':') + 1));
      std::string w;
      while (words >> w) bad.push_back((w.rfind("std_weight", 0) == 0 ? "kalman." : prefix) + w);
    }
  };
  collect([&] { cfg.tracker.validate(); }, "tracker.");
  collect([&] { cfg.cluster.validate(); }, "cluster.");

  if (has_sequence) {
    seq.event_file = resolve(seq_events);
    if (!seq_gt.empty()) seq.gt_path = resolve(seq_gt);
    seq.geometry = cfg.geometry;
    seq.window_len = cfg.window_us;
    try {
      seq.validate();
      cfg.sequence = seq;
    } catch (const ConfigError& e) {
      bad.push_back(std::string("sequence (") + e.what() + ")");
    }
  }

  if (!bad.empty()) {
    std::string msg = "invalid config keys:";
    for (const auto& k : bad) msg += " " + k;
    throw ConfigError(msg);
  }
  return cfg;
}

ToolkitConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace emot
