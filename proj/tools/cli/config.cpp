#include "cli/config.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edgepipe/errors.hpp"

namespace edgepipe::cli {

namespace {

// Order here is the order of resolved.ini.
const std::vector<std::pair<std::string, std::string>>& known_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"protocol.N", ""},  // empty: size of the training set (18576 without data)
      {"protocol.n_c", ""},
      {"protocol.n_o", "1000"},
      {"protocol.tau_p", "1"},
      {"protocol.T", ""},  // empty: T_factor * N
      {"protocol.T_factor", "1.5"},
      {"protocol.alpha", "1e-4"},
      {"constants.L", "1.908"},  // number or "estimate"
      {"constants.c", "0.061"},  // number or "estimate"
      {"constants.M", "1"},      // number or "estimate"
      {"constants.M_V", "0"},
      {"constants.M_G", ""},  // empty: M_V + 1
      {"constants.D", "1"},   // number or "pilot"
      {"constants.pilot_n_c", ""},
      {"loss.lambda", "0.05"},
      {"data.source", ""},  // csv path, "synthetic", or empty for none
      {"data.has_header", "true"},
      {"data.delimiter", ","},
      {"data.label_column", ""},
      {"data.feature_columns", ""},
      {"data.preprocessing", "standardize"},
      {"data.scale_labels", "false"},
      {"data.split_fraction", "0.9"},
      {"data.synthetic_N", "20640"},
      {"data.synthetic_d", "8"},
      {"data.synthetic_noise", "1"},
      {"grid.kind", "step"},  // step | divisors | list
      {"grid.min", "100"},
      {"grid.max", ""},
      {"grid.step", "100"},
      {"grid.values", ""},
      {"sweep.n_o", ""},  // empty: protocol.n_o only
      {"sweep.n_c", ""},  // reference block sizes for traces
      {"run.seed", ""},
      {"run.runs", "20"},
      {"run.threads", "1"},
      {"run.trace_stride", "10"},
      {"run.init", "gaussian"},  // gaussian | zero
      {"check.thresholds", "0.25 0.5 0.75"},
      {"check.gap_tolerance", "0.1"},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <class T>
T parse_as(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("setting " + key + ": cannot parse '" + text + "' as a number");
  return v;
}

}  // namespace

Settings::Settings() {
  for (const auto& [k, v] : known_keys()) values_[k] = v;
}

void Settings::check_known(const std::string& key) const {
  if (values_.count(key)) return;
  const auto dot = key.find('.');
  std::string hint;
  if (dot != std::string::npos) {
    const std::string section = key.substr(0, dot + 1);
    for (const auto& [k, v] : known_keys())
      if (k.rfind(section, 0) == 0) hint += (hint.empty() ? "" : ", ") + k;
  }
  throw ConfigError("unknown setting '" + key + "'" +
                    (hint.empty() ? std::string("; settings look like section.key")
                                  : "; known keys: " + hint));
}

void Settings::load_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (item.parents.size() != 1)
      throw ConfigError("config file " + path.string() + ": key '" + item.name +
                        "' must sit inside exactly one [section]");
    std::string value;
    for (const auto& in_val : item.inputs) value += (value.empty() ? "" : " ") + in_val;
    set(item.parents.front() + "." + item.name, value);
  }
}

void Settings::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Settings::set(const std::string& key, std::string value) {
  check_known(key);
  values_[key] = trim(std::move(value));
}

bool Settings::has(const std::string& key) const { return !raw(key).empty(); }

const std::string& Settings::raw(const std::string& key) const {
  check_known(key);
  return values_.at(key);
}

double Settings::number(const std::string& key) const {
  if (!has(key)) throw ConfigError("setting " + key + " is required");
  const double v = parse_as<double>(key, raw(key));
  if (!std::isfinite(v)) throw ConfigError("setting " + key + " must be finite");
  return v;
}

std::int64_t Settings::integer(const std::string& key) const {
  if (!has(key)) throw ConfigError("setting " + key + " is required");
  return parse_as<std::int64_t>(key, raw(key));
}

std::uint64_t Settings::unsigned_integer(const std::string& key) const {
  if (!has(key)) throw ConfigError("setting " + key + " is required");
  return parse_as<std::uint64_t>(key, raw(key));
}

bool Settings::boolean(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("setting " + key + ": expected true or false, got '" + v + "'");
}

std::vector<double> Settings::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& t : tokens(raw(key))) out.push_back(parse_as<double>(key, t));
  return out;
}

std::vector<std::int64_t> Settings::integers(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& t : tokens(raw(key))) out.push_back(parse_as<std::int64_t>(key, t));
  return out;
}

std::string Settings::to_ini() const {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, def] : known_keys()) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    const std::string& v = values_.at(key);
    out << key.substr(dot + 1) << " = ";
    if (!v.empty()) out << '"' << v << '"';
    out << '\n';
  }
  return out.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ProtocolConfig protocol_template(const Settings& s, std::int64_t N) {
  ProtocolConfig cfg;
  cfg.N = N;
  cfg.n_c = 1;
  cfg.n_o = s.number("protocol.n_o");
  cfg.tau_p = s.number("protocol.tau_p");
  cfg.T = s.has("protocol.T") ? s.number("protocol.T")
                              : s.number("protocol.T_factor") * static_cast<double>(N);
  cfg.alpha = s.number("protocol.alpha");
  return cfg;
}

GridPolicy grid_policy(const Settings& s) {
  GridPolicy g;
  const std::string& kind = s.raw("grid.kind");
  if (kind == "step") {
    g.kind = GridPolicy::Kind::Step;
  } else if (kind == "divisors") {
    g.kind = GridPolicy::Kind::DivisorsOfN;
  } else if (kind == "list") {
    g.kind = GridPolicy::Kind::List;
    g.values = s.integers("grid.values");
  } else {
    throw ConfigError("grid.kind must be step, divisors or list, got '" + kind + "'");
  }
  g.min = s.integer("grid.min");
  g.max = s.has("grid.max") ? s.integer("grid.max") : 0;
  g.step = s.integer("grid.step");
  return g;
}

std::vector<std::int64_t> block_sizes(const Settings& s, const ProtocolConfig& tmpl) {
  if (s.has("protocol.n_c")) {
    GridPolicy single;
    single.kind = GridPolicy::Kind::List;
    single.values = {s.integer("protocol.n_c")};
    return candidate_block_sizes(tmpl, single);
  }
  return candidate_block_sizes(tmpl, grid_policy(s));
}

std::vector<double> overheads(const Settings& s) {
  auto list = s.numbers("sweep.n_o");
  if (list.empty()) list.push_back(s.number("protocol.n_o"));
  return list;
}

LossSpec loss_spec(const Settings& s, std::int64_t N) {
  const double lambda = s.number("loss.lambda");
  if (lambda < 0.0) throw ConfigError("loss.lambda must be non-negative");
  return LossSpec{lambda, N};
}

InitPolicy init_policy(const Settings& s) {
  InitPolicy p;
  const std::string& v = s.raw("run.init");
  if (v == "gaussian") {
    p.kind = InitPolicy::Kind::Gaussian;
  } else if (v == "zero") {
    p.kind = InitPolicy::Kind::Zero;
  } else {
    throw ConfigError("run.init must be gaussian or zero, got '" + v + "'");
  }
  return p;
}

std::uint64_t require_seed(const Settings& s, const std::string& purpose) {
  if (!s.has("run.seed"))
    throw ConfigError(purpose + " needs a master seed: pass --seed <u64> or set run.seed");
  return s.unsigned_integer("run.seed");
}

}  // namespace edgepipe::cli
