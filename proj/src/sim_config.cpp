#include "lordpx/sim_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string_view>

#include "lordpx/error.hpp"

namespace lordpx {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto pos = s.find(sep);
    parts.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return parts;
}

struct ConfigLine {
  std::size_t line = 0;
  std::string key;
  std::vector<std::string> values;
};

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ConfigParse, source + ":" + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_number(std::string_view s, const std::string& source, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(source, line, "'" + std::string(s) + "' is not a valid number");
  }
  return v;
}

using Setter = std::function<void(ScenarioSpec&, std::string_view, const std::string&, std::size_t)>;

const std::map<std::string, Setter, std::less<>>& scalar_setters() {
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"n_sch", [](ScenarioSpec& s, std::string_view v, const std::string& src, std::size_t l) {
         s.n_sch = parse_number<std::size_t>(v, src, l);
         if (s.n_sch < 1) fail(src, l, "n_sch must be at least 1");
       }},
      {"alloc", [](ScenarioSpec& s, std::string_view v, const std::string& src, std::size_t l) {
         s.alloc = parse_number<double>(v, src, l);
         if (!(s.alloc > 0.0 && s.alloc < 1.0)) fail(src, l, "alloc must lie in (0, 1)");
       }},
      {"delta_pre", [](ScenarioSpec& s, std::string_view v, const std::string& src, std::size_t l) {
         s.delta_pre = parse_number<double>(v, src, l);
       }},
      {"rho", [](ScenarioSpec& s, std::string_view v, const std::string& src, std::size_t l) {
         s.rho = parse_number<double>(v, src, l);
         if (!(std::abs(s.rho) < 1.0)) fail(src, l, "|rho| must be below 1");
       }},
      {"icc", [](ScenarioSpec& s, std::string_view v, const std::string& src, std::size_t l) {
         s.icc_target = parse_number<double>(v, src, l);
         if (!(s.icc_target >= 0.0 && s.icc_target < 1.0)) fail(src, l, "icc must lie in [0, 1)");
       }},
      {"effect", [](ScenarioSpec& s, std::string_view v, const std::string& src, std::size_t l) {
         s.effect = parse_number<double>(v, src, l);
       }},
      {"seed", [](ScenarioSpec& s, std::string_view v, const std::string& src, std::size_t l) {
         s.seed = parse_number<std::uint64_t>(v, src, l);
       }},
      {"randomization", [](ScenarioSpec& s, std::string_view v, const std::string& src, std::size_t l) {
         if (v == "pupil") s.randomization = Randomization::Pupil;
         else if (v == "cluster") s.randomization = Randomization::Cluster;
         else fail(src, l, "randomization must be 'pupil' or 'cluster'");
       }},
  };
  return setters;
}

}  // namespace

SimulationConfig parse_sim_config(const std::string& text, const std::string& source) {
  ScenarioSpec base;
  SimulationConfig cfg;
  std::vector<ConfigLine> axes;
  std::map<std::string, std::size_t> seen;

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(source, line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail(source, line_no, "missing key");
    if (value.empty()) fail(source, line_no, "missing value for '" + key + "'");
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      fail(source, line_no, "'" + key + "' already set on line " + std::to_string(it->second));
    }

    if (key == "replicates") {
      cfg.replicates = parse_number<std::size_t>(value, source, line_no);
    } else if (key == "pupils_per_school") {
      base.pupils_per_school.clear();
      for (auto part : split(value, ' ')) {
        if (part.empty()) continue;
        base.pupils_per_school.push_back(parse_number<std::size_t>(part, source, line_no));
      }
    } else if (auto it = scalar_setters().find(key); it != scalar_setters().end()) {
      ConfigLine cl{line_no, key, {}};
      for (auto part : split(value, ',')) {
        if (part.empty()) fail(source, line_no, "empty list element for '" + key + "'");
        it->second(base, part, source, line_no);  // validates each element
        cl.values.emplace_back(part);
      }
      if (cl.values.size() > 1) axes.push_back(std::move(cl));
    } else {
      fail(source, line_no, "unknown key '" + key + "'");
    }
  }

  // Cartesian product, first axis slowest.
  std::vector<ScenarioSpec> grid{base};
  for (const auto& axis : axes) {
    std::vector<ScenarioSpec> next;
    for (const auto& spec : grid) {
      for (const auto& v : axis.values) {
        ScenarioSpec s = spec;
        scalar_setters().find(axis.key)->second(s, v, source, axis.line);
        next.push_back(std::move(s));
      }
    }
    grid = std::move(next);
  }
  for (const auto& s : grid) {
    try {
      s.validate();
    } catch (const Error& e) {
      // Cross-field problems are reported against the sizing keys.
      std::size_t at = 1;
      for (const char* k : {"pupils_per_school", "n_sch", "randomization"}) {
        if (auto it = seen.find(k); it != seen.end()) {
          at = it->second;
          break;
        }
      }
      fail(source, at, e.what());
    }
  }
  cfg.grid = std::move(grid);
  return cfg;
}

SimulationConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileUnreadable, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sim_config(buf.str(), path.string());
}

}  // namespace lordpx
