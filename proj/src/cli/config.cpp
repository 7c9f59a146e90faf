#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "goldsci/cli.hpp"
#include "goldsci/error.hpp"

namespace goldsci::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, const std::string& key) {
  text = trim(text);
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw DomainError("invalid number '" + std::string(text) + "' for " + RunConfig::flag_name(key));
  }
  return x;
}

template <class Int>
Int parse_integer(std::string_view text, const std::string& key) {
  text = trim(text);
  Int x = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw DomainError("invalid integer '" + std::string(text) + "' for " + RunConfig::flag_name(key));
  }
  return x;
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "alpha", "delta0", "delta1", "r", "mu_r_hist", "q", "single_step_rho",
      "sigma", "sd_e", "sd_r", "sd_p",
      "n_e", "n_r", "n_p", "mean_e", "mean_r", "mean_p", "c_r", "c_p",
      "method", "effect_ep", "effect_rp", "v_list", "weights", "target_power",
      "mode", "reps", "seed", "threads", "output_format",
  };
  return keys;
}

std::string RunConfig::flag_name(std::string_view key) {
  std::string s = "--";
  for (char ch : key) s.push_back(ch == '_' ? '-' : ch);
  return s;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw DomainError("unknown configuration key '" + key + "'");
  }
  values_[key] = std::string(trim(value));
}

void RunConfig::erase(const std::string& key) { values_.erase(key); }

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::optional<std::string> RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void RunConfig::parse(std::string_view text, std::string_view source) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw DomainError(std::string(source) + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    try {
      set(key, value);
    } catch (const DomainError& e) {
      throw DomainError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  parse(buf.str(), path);
}

std::string RunConfig::dump() const {
  std::string s;
  for (const auto& [key, value] : values_) s += key + " = " + value + "\n";
  return s;
}

std::string RunConfig::require_string(const std::string& key) const {
  const auto v = get(key);
  if (!v || v->empty()) throw DomainError("missing required option " + flag_name(key));
  return *v;
}

double RunConfig::require_double(const std::string& key) const {
  return parse_double(require_string(key), key);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  return find_double(key).value_or(fallback);
}

std::optional<double> RunConfig::find_double(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  return parse_double(*v, key);
}

int RunConfig::require_int(const std::string& key) const {
  return parse_integer<int>(require_string(key), key);
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (trim(*v).starts_with('-')) throw DomainError(flag_name(key) + " must be non-negative");
  return parse_integer<std::uint64_t>(*v, key);
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  const auto v = get(key);
  if (!v) return out;
  std::string_view rest = *v;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(parse_double(rest.substr(0, comma), key));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

}  // namespace goldsci::cli
