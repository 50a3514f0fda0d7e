#include "selfplay/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace selfplay {
namespace {

constexpr std::array<std::string_view, 18> kEngineKeys = {
    "G",           "B",
    "s_min",       "s_max",
    "l_base",      "l_cap",
    "w_sol",       "w_len",
    "w_div",       "w_fmt",
    "temperature", "max_prompt_tokens",
    "max_solution_tokens", "epsilon_std",
    "diversity_mode", "seed_problem_text",
    "dedup_pool",  "parallelism",
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool is_backend_key(std::string_view key) {
  return key.starts_with("remote_") || key.starts_with("synthetic_");
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
  throw ConfigError("invalid value for '" + std::string(key) + "': '" +
                    std::string(value) + "' (expected " + std::string(expected) +
                    ")");
}

}  // namespace

std::string_view diversity_mode_name(DiversityMode mode) {
  return mode == DiversityMode::kConcept ? "concept" : "embedding";
}

namespace kv {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

double get_double(const KeyValueMap& raw, std::string_view key, double fallback) {
  const auto it = raw.find(key);
  if (it == raw.end()) return fallback;
  const std::string_view v = trim(it->second);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    bad_value(key, it->second, "a finite real number");
  }
  return out;
}

int get_int(const KeyValueMap& raw, std::string_view key, int fallback) {
  const auto it = raw.find(key);
  if (it == raw.end()) return fallback;
  const std::string_view v = trim(it->second);
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    bad_value(key, it->second, "an integer");
  }
  return out;
}

bool get_bool(const KeyValueMap& raw, std::string_view key, bool fallback) {
  const auto it = raw.find(key);
  if (it == raw.end()) return fallback;
  const std::string_view v = trim(it->second);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, it->second, "a boolean");
}

std::string get_string(const KeyValueMap& raw, std::string_view key,
                       std::string fallback) {
  const auto it = raw.find(key);
  if (it == raw.end()) return fallback;
  return it->second;
}

}  // namespace kv

EngineConfig validate_config(const KeyValueMap& raw) {
  for (const auto& [key, value] : raw) {
    if (is_backend_key(key)) continue;
    bool known = false;
    for (auto k : kEngineKeys) known = known || k == key;
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }

  EngineConfig cfg;
  cfg.group_size = kv::get_int(raw, "G", cfg.group_size);
  cfg.batch_size = kv::get_int(raw, "B", cfg.batch_size);
  cfg.s_min = kv::get_double(raw, "s_min", cfg.s_min);
  cfg.s_max = kv::get_double(raw, "s_max", cfg.s_max);
  cfg.l_base = kv::get_double(raw, "l_base", cfg.l_base);
  cfg.max_prompt_tokens = kv::get_int(raw, "max_prompt_tokens", cfg.max_prompt_tokens);
  cfg.max_solution_tokens =
      kv::get_int(raw, "max_solution_tokens", cfg.max_solution_tokens);
  // The length ceiling follows the generation ceiling unless set explicitly.
  cfg.l_cap = kv::get_double(raw, "l_cap", static_cast<double>(cfg.max_solution_tokens));
  cfg.w_sol = kv::get_double(raw, "w_sol", cfg.w_sol);
  cfg.w_len = kv::get_double(raw, "w_len", cfg.w_len);
  cfg.w_div = kv::get_double(raw, "w_div", cfg.w_div);
  cfg.w_fmt = kv::get_double(raw, "w_fmt", cfg.w_fmt);
  cfg.temperature = kv::get_double(raw, "temperature", cfg.temperature);
  cfg.epsilon_std = kv::get_double(raw, "epsilon_std", cfg.epsilon_std);
  cfg.seed_problem_text = kv::get_string(raw, "seed_problem_text", cfg.seed_problem_text);
  cfg.dedup_pool = kv::get_bool(raw, "dedup_pool", cfg.dedup_pool);
  cfg.parallelism = kv::get_int(raw, "parallelism", cfg.parallelism);

  const std::string mode = std::string(trim(kv::get_string(raw, "diversity_mode", "embedding")));
  if (mode == "embedding") {
    cfg.diversity_mode = DiversityMode::kEmbedding;
  } else if (mode == "concept") {
    cfg.diversity_mode = DiversityMode::kConcept;
  } else {
    bad_value("diversity_mode", mode, "embedding|concept");
  }

  if (cfg.group_size < 2) throw ConfigError("G must be >= 2");
  if (cfg.batch_size <= 0) throw ConfigError("B must be > 0");
  if (cfg.batch_size % (2 * cfg.group_size) != 0) {
    throw ConfigError("B must be divisible by 2G");
  }
  if (cfg.s_min < 0.0) throw ConfigError("s_min must be >= 0");
  if (cfg.s_max > 1.0) throw ConfigError("s_max must be <= 1");
  if (!(cfg.s_min < cfg.s_max)) throw ConfigError("s_min must be < s_max");
  if (!(cfg.l_base > 0.0)) throw ConfigError("l_base must be > 0");
  if (cfg.l_cap < cfg.l_base) throw ConfigError("l_cap must be >= l_base");
  if (cfg.w_sol < 0.0) throw ConfigError("w_sol must be >= 0");
  if (cfg.w_len < 0.0) throw ConfigError("w_len must be >= 0");
  if (cfg.w_div < 0.0) throw ConfigError("w_div must be >= 0");
  if (cfg.w_fmt < 0.0) throw ConfigError("w_fmt must be >= 0");
  if (cfg.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (cfg.max_prompt_tokens <= 0) throw ConfigError("max_prompt_tokens must be > 0");
  if (cfg.max_solution_tokens <= 0) throw ConfigError("max_solution_tokens must be > 0");
  if (!(cfg.epsilon_std > 0.0)) throw ConfigError("epsilon_std must be > 0");
  if (trim(cfg.seed_problem_text).empty()) {
    throw ConfigError("seed_problem_text must be non-empty");
  }
  if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  return cfg;
}

KeyValueMap to_key_values(const EngineConfig& cfg) {
  using kv::format_double;
  KeyValueMap out;
  out["G"] = std::to_string(cfg.group_size);
  out["B"] = std::to_string(cfg.batch_size);
  out["s_min"] = format_double(cfg.s_min);
  out["s_max"] = format_double(cfg.s_max);
  out["l_base"] = format_double(cfg.l_base);
  out["l_cap"] = format_double(cfg.l_cap);
  out["w_sol"] = format_double(cfg.w_sol);
  out["w_len"] = format_double(cfg.w_len);
  out["w_div"] = format_double(cfg.w_div);
  out["w_fmt"] = format_double(cfg.w_fmt);
  out["temperature"] = format_double(cfg.temperature);
  out["max_prompt_tokens"] = std::to_string(cfg.max_prompt_tokens);
  out["max_solution_tokens"] = std::to_string(cfg.max_solution_tokens);
  out["epsilon_std"] = format_double(cfg.epsilon_std);
  out["diversity_mode"] = std::string(diversity_mode_name(cfg.diversity_mode));
  out["seed_problem_text"] = cfg.seed_problem_text;
  out["dedup_pool"] = cfg.dedup_pool ? "true" : "false";
  out["parallelism"] = std::to_string(cfg.parallelism);
  return out;
}

KeyValueMap parse_key_value_text(std::string_view text) {
  KeyValueMap out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    out[key] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

std::string render_key_value_text(const KeyValueMap& kv) {
  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

KeyValueMap read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_value_text(ss.str());
}

}  // namespace selfplay
