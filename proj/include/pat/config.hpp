#pragma once

// Experiment configuration in a strict TOML subset: [section] headers,
// `key = value` lines, '#' comments. Values are quoted strings, booleans,
// numbers, or (nested) arrays of numbers. Unknown keys are errors.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pat/admm.hpp"
#include "pat/dwt.hpp"
#include "pat/errors.hpp"
#include "pat/grid.hpp"
#include "pat/simulation.hpp"

namespace pat {

enum class Method { Baseline, Wvd, Hybrid };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::Baseline: return "baseline";
    case Method::Wvd: return "wvd";
    case Method::Hybrid: return "hybrid";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "baseline") return Method::Baseline;
  if (s == "wvd") return Method::Wvd;
  if (s == "hybrid") return Method::Hybrid;
  throw ConfigError("unknown method '" + s + "' (expected baseline, wvd or hybrid)");
}

inline std::string v_update_name(VUpdate v) { return v == VUpdate::Ball ? "ball" : "box"; }

inline VUpdate parse_v_update(const std::string& s) {
  if (s == "ball") return VUpdate::Ball;
  if (s == "box") return VUpdate::Box;
  throw ConfigError("unknown admm.v_update '" + s + "' (expected ball or box)");
}

struct ExperimentConfig {
  std::size_t nx = 128, ny = 128, nt = 512;
  double dx = 1.0 / 32, dt = 1.0 / 128;

  std::vector<Disk> disks = default_phantom().disks;
  std::optional<Box> box = default_box();

  double sigma = 0.25;
  std::uint64_t seed = 1;

  std::string wavelet_family = "db4";
  int wavelet_levels = 4;

  Method method = Method::Wvd;
  double threshold_scale = 1.0;
  std::optional<double> threshold;  // fixed w on detail levels, overrides the universal rule

  AdmmConfig admm{3e-4, 200, 1e-3, 100, 1e-4};

  bool limited_view = false;
  Interval aperture{-2.0, 2.0};
  double view_t_max = 4.0;

  int trials = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> deltas{0.5, 0.25, 0.125, 0.0625};

  std::string output_dir = "out";

  Grid2D grid() const { return make_grid(nx, ny, nt, dx, dt); }
  PhantomSpec phantom() const { return {disks, box}; }
  WaveletSpec wavelet() const { return WaveletSpec::parse(wavelet_family, wavelet_levels); }

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    auto box_eq = [](const std::optional<Box>& p, const std::optional<Box>& q) {
      if (p.has_value() != q.has_value()) return false;
      return !p || (p->x.lo == q->x.lo && p->x.hi == q->x.hi && p->y.lo == q->y.lo && p->y.hi == q->y.hi);
    };
    return a.nx == b.nx && a.ny == b.ny && a.nt == b.nt && a.dx == b.dx && a.dt == b.dt && a.disks == b.disks &&
           box_eq(a.box, b.box) && a.sigma == b.sigma && a.seed == b.seed && a.wavelet_family == b.wavelet_family &&
           a.wavelet_levels == b.wavelet_levels && a.method == b.method && a.threshold_scale == b.threshold_scale &&
           a.threshold == b.threshold && a.admm.c == b.admm.c && a.admm.max_iters == b.admm.max_iters &&
           a.admm.feasibility_tol == b.admm.feasibility_tol && a.admm.tv_inner_iters == b.admm.tv_inner_iters &&
           a.admm.tv_inner_tol == b.admm.tv_inner_tol && a.admm.v_update == b.admm.v_update &&
           a.limited_view == b.limited_view &&
           a.aperture.lo == b.aperture.lo && a.aperture.hi == b.aperture.hi && a.view_t_max == b.view_t_max &&
           a.trials == b.trials && a.seeds == b.seeds && a.deltas == b.deltas && a.output_dir == b.output_dir;
  }

  /// Throws ConfigError for any inconsistent setting.
  void validate() const {
    try {
      const Grid2D g = grid();
      validate_phantom(phantom(), g);
      (void)WaveletPyramid(g, wavelet());
      admm.validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    if (!(sigma >= 0.0)) throw ConfigError("noise.sigma must be nonnegative");
    if (!(threshold_scale >= 0.0)) throw ConfigError("estimator.threshold_scale must be nonnegative");
    if (threshold && !(*threshold >= 0.0)) throw ConfigError("estimator.threshold must be nonnegative");
    if (trials < 2) throw ConfigError("evaluate.trials must be at least 2");
    if (seeds.empty()) throw ConfigError("evaluate.seeds must not be empty");
    for (double d : deltas)
      if (!(d > 0.0)) throw ConfigError("evaluate.deltas must be positive");
  }
};

namespace detail {

struct ConfigValue {
  enum class Type { String, Bool, Number, Array } type = Type::Number;
  std::string text;  // string payload or number spelling
  bool flag = false;
  double number = 0.0;
  std::vector<ConfigValue> items;
};

class ValueParser {
 public:
  ValueParser(const std::string& s, int line) : s_(s), line_(line) {}

  ConfigValue parse() {
    ConfigValue v = value();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + what);
  }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n')) ++pos_;
  }

  ConfigValue value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    ConfigValue v;
    const char c = s_[pos_];
    if (c == '"') {
      v.type = ConfigValue::Type::String;
      ++pos_;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\\') {
          if (++pos_ >= s_.size()) fail("unterminated escape");
          const char e = s_[pos_];
          if (e == '"' || e == '\\') v.text.push_back(e);
          else if (e == 'n') v.text.push_back('\n');
          else if (e == 't') v.text.push_back('\t');
          else fail(std::string("unsupported escape \\") + e);
        } else {
          v.text.push_back(s_[pos_]);
        }
        ++pos_;
      }
      if (pos_ >= s_.size()) fail("unterminated string");
      ++pos_;
      return v;
    }
    if (c == '[') {
      v.type = ConfigValue::Type::Array;
      ++pos_;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      for (;;) {
        v.items.push_back(value());
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          skip_ws();
          if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return v;
          }
          continue;
        }
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return v;
        }
        fail("expected ',' or ']' in array");
      }
    }
    if (s_.compare(pos_, 4, "true") == 0) {
      v.type = ConfigValue::Type::Bool;
      v.flag = true;
      pos_ += 4;
      return v;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      v.type = ConfigValue::Type::Bool;
      pos_ += 5;
      return v;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '-' || s_[pos_] == '+' || s_[pos_] == '_'))
      ++pos_;
    v.text = s_.substr(start, pos_ - start);
    std::string digits;
    for (char d : v.text)
      if (d != '_') digits.push_back(d);
    if (digits.empty()) fail("expected a value");
    const char* first = digits.data() + (digits[0] == '+' ? 1 : 0);
    const char* last = digits.data() + digits.size();
    const auto [ptr, ec] = std::from_chars(first, last, v.number);
    if (ec != std::errc() || ptr != last || !std::isfinite(v.number)) fail("invalid number '" + v.text + "'");
    return v;
  }

  const std::string& s_;
  int line_;
  std::size_t pos_ = 0;
};

inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
}

inline int bracket_depth(const std::string& s) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (in_string) continue;
    depth += s[i] == '[';
    depth -= s[i] == ']';
  }
  return depth;
}

/// Flat map "section.key" -> value; arrays may span lines.
inline std::map<std::string, ConfigValue> parse_document(const std::string& text) {
  std::map<std::string, ConfigValue> out;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    std::string value = trim(line.substr(eq + 1));
    const int start_line = line_no;
    while (bracket_depth(value) > 0 && std::getline(in, raw)) {
      ++line_no;
      value += "\n" + trim(strip_comment(raw));
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) throw ConfigError("line " + std::to_string(start_line) + ": duplicate key '" + full + "'");
    out[full] = ValueParser(value, start_line).parse();
  }
  return out;
}

inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace detail

namespace config_detail {

using detail::ConfigValue;

class Reader {
 public:
  explicit Reader(std::map<std::string, ConfigValue> values) : values_(std::move(values)) {}

  const ConfigValue* find(const std::string& key) {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  double number(const std::string& key, double fallback) {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->type != ConfigValue::Type::Number) throw ConfigError(key + " must be a number");
    return v->number;
  }

  template <class Int>
  Int integer(const std::string& key, Int fallback) {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    return as_integer<Int>(*v, key);
  }

  bool flag(const std::string& key, bool fallback) {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->type != ConfigValue::Type::Bool) throw ConfigError(key + " must be true or false");
    return v->flag;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->type != ConfigValue::Type::String) throw ConfigError(key + " must be a quoted string");
    return v->text;
  }

  std::vector<double> numbers(const ConfigValue& v, const std::string& key) {
    if (v.type != ConfigValue::Type::Array) throw ConfigError(key + " must be an array");
    std::vector<double> out;
    for (const auto& item : v.items) {
      if (item.type != ConfigValue::Type::Number) throw ConfigError(key + " must contain numbers");
      out.push_back(item.number);
    }
    return out;
  }

  template <class Int>
  static Int as_integer(const ConfigValue& v, const std::string& key) {
    if (v.type != ConfigValue::Type::Number || v.number != std::floor(v.number) || v.number < 0 ||
        v.number > 9.007199254740992e15)
      throw ConfigError(key + " must be a nonnegative integer");
    return static_cast<Int>(v.number);
  }

  void reject_unknown() const {
    for (const auto& [key, v] : values_)
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "'");
  }

 private:
  std::map<std::string, ConfigValue> values_;
  std::set<std::string> used_;
};

}  // namespace config_detail

/// Missing keys keep their defaults; the result is validated.
inline ExperimentConfig parse_config(const std::string& text) {
  config_detail::Reader r(detail::parse_document(text));
  ExperimentConfig c;
  c.nx = r.integer<std::size_t>("grid.nx", c.nx);
  c.ny = r.integer<std::size_t>("grid.ny", c.ny);
  c.nt = r.integer<std::size_t>("grid.nt", c.nt);
  c.dx = r.number("grid.dx", c.dx);
  c.dt = r.number("grid.dt", c.dt);

  if (const auto* v = r.find("phantom.disks")) {
    if (v->type != detail::ConfigValue::Type::Array) throw ConfigError("phantom.disks must be an array");
    c.disks.clear();
    for (const auto& item : v->items) {
      const auto d = r.numbers(item, "phantom.disks entry");
      if (d.size() != 4) throw ConfigError("phantom.disks entries are [x, y, radius, amplitude]");
      c.disks.push_back({d[0], d[1], d[2], d[3]});
    }
  }
  if (const auto* v = r.find("phantom.box")) {
    const auto b = r.numbers(*v, "phantom.box");
    if (b.empty()) {
      c.box.reset();
    } else {
      if (b.size() != 4 || !(b[0] < b[1]) || !(b[2] < b[3]))
        throw ConfigError("phantom.box is [x_lo, x_hi, y_lo, y_hi] with lo < hi, or [] for none");
      c.box = Box{{b[0], b[1]}, {b[2], b[3]}};
    }
  }

  c.sigma = r.number("noise.sigma", c.sigma);
  c.seed = r.integer<std::uint64_t>("noise.seed", c.seed);

  c.wavelet_family = r.string("wavelet.family", c.wavelet_family);
  c.wavelet_levels = r.integer<int>("wavelet.levels", c.wavelet_levels);

  c.method = parse_method(r.string("estimator.method", method_name(c.method)));
  c.threshold_scale = r.number("estimator.threshold_scale", c.threshold_scale);
  if (const auto* v = r.find("estimator.threshold")) {
    if (v->type != detail::ConfigValue::Type::Number) throw ConfigError("estimator.threshold must be a number");
    c.threshold = v->number;
  }

  c.admm.c = r.number("admm.c", c.admm.c);
  c.admm.max_iters = r.integer<int>("admm.max_iters", c.admm.max_iters);
  c.admm.feasibility_tol = r.number("admm.feasibility_tol", c.admm.feasibility_tol);
  c.admm.tv_inner_iters = r.integer<int>("admm.tv_inner_iters", c.admm.tv_inner_iters);
  c.admm.tv_inner_tol = r.number("admm.tv_inner_tol", c.admm.tv_inner_tol);
  c.admm.v_update = parse_v_update(r.string("admm.v_update", v_update_name(c.admm.v_update)));

  c.limited_view = r.flag("limited_view.enabled", c.limited_view);
  if (const auto* v = r.find("limited_view.aperture")) {
    const auto a = r.numbers(*v, "limited_view.aperture");
    if (a.size() != 2) throw ConfigError("limited_view.aperture is [lo, hi]");
    c.aperture = {a[0], a[1]};
  }
  c.view_t_max = r.number("limited_view.t_max", c.view_t_max);

  c.trials = r.integer<int>("evaluate.trials", c.trials);
  if (const auto* v = r.find("evaluate.seeds")) {
    if (v->type != detail::ConfigValue::Type::Array) throw ConfigError("evaluate.seeds must be an array");
    c.seeds.clear();
    for (const auto& item : v->items)
      c.seeds.push_back(config_detail::Reader::as_integer<std::uint64_t>(item, "evaluate.seeds"));
  }
  if (const auto* v = r.find("evaluate.deltas")) c.deltas = r.numbers(*v, "evaluate.deltas");

  c.output_dir = r.string("output.dir", c.output_dir);
  r.reject_unknown();
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Writes every key, so the output replays the exact configuration.
inline std::string serialize_config(const ExperimentConfig& c) {
  using detail::format_number;
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"' || ch == '\\') out.push_back('\\');
      if (ch == '\n') {
        out += "\\n";
        continue;
      }
      if (ch == '\t') {
        out += "\\t";
        continue;
      }
      out.push_back(ch);
    }
    return out + "\"";
  };
  std::ostringstream o;
  o << "[grid]\n"
    << "nx = " << c.nx << "\nny = " << c.ny << "\nnt = " << c.nt << "\n"
    << "dx = " << format_number(c.dx) << "\ndt = " << format_number(c.dt) << "\n\n";
  o << "[phantom]\ndisks = [\n";
  for (const Disk& d : c.disks)
    o << "  [" << format_number(d.x) << ", " << format_number(d.y) << ", " << format_number(d.radius) << ", "
      << format_number(d.amplitude) << "],\n";
  o << "]\nbox = [";
  if (c.box)
    o << format_number(c.box->x.lo) << ", " << format_number(c.box->x.hi) << ", " << format_number(c.box->y.lo)
      << ", " << format_number(c.box->y.hi);
  o << "]\n\n";
  o << "[noise]\nsigma = " << format_number(c.sigma) << "\nseed = " << c.seed << "\n\n";
  o << "[wavelet]\nfamily = " << quote(c.wavelet_family) << "\nlevels = " << c.wavelet_levels << "\n\n";
  o << "[estimator]\nmethod = " << quote(method_name(c.method))
    << "\nthreshold_scale = " << format_number(c.threshold_scale) << "\n";
  if (c.threshold) o << "threshold = " << format_number(*c.threshold) << "\n";
  o << "\n[admm]\nc = " << format_number(c.admm.c) << "\nmax_iters = " << c.admm.max_iters
    << "\nfeasibility_tol = " << format_number(c.admm.feasibility_tol)
    << "\ntv_inner_iters = " << c.admm.tv_inner_iters << "\ntv_inner_tol = " << format_number(c.admm.tv_inner_tol)
    << "\nv_update = " << quote(v_update_name(c.admm.v_update)) << "\n\n";
  o << "[limited_view]\nenabled = " << (c.limited_view ? "true" : "false") << "\naperture = ["
    << format_number(c.aperture.lo) << ", " << format_number(c.aperture.hi)
    << "]\nt_max = " << format_number(c.view_t_max) << "\n\n";
  o << "[evaluate]\ntrials = " << c.trials << "\nseeds = [";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) o << (i ? ", " : "") << c.seeds[i];
  o << "]\ndeltas = [";
  for (std::size_t i = 0; i < c.deltas.size(); ++i) o << (i ? ", " : "") << format_number(c.deltas[i]);
  o << "]\n\n[output]\ndir = " << quote(c.output_dir) << "\n";
  return o.str();
}

}  // namespace pat
