#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace selfplay {

// Flat key/value document as read from a config file.
using KeyValueMap = std::map<std::string, std::string, std::less<>>;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DiversityMode { kEmbedding, kConcept };

std::string_view diversity_mode_name(DiversityMode mode);

// Engine knobs. Config keys match the member names, except `G` (group_size)
// and `B` (batch_size).
struct EngineConfig {
  int group_size = 8;    // G: rollouts per prompt
  int batch_size = 256;  // B: samples per update, half teacher, half student
  double s_min = 0.5;
  double s_max = 0.9;
  double l_base = 1000.0;
  double l_cap = 2048.0;
  double w_sol = 1.0;
  double w_len = 1.0;
  double w_div = 1.0;
  double w_fmt = 0.1;
  double temperature = 1.0;
  int max_prompt_tokens = 1024;
  int max_solution_tokens = 2048;
  double epsilon_std = 1e-6;
  DiversityMode diversity_mode = DiversityMode::kEmbedding;
  std::string seed_problem_text = "What is 1+1?";
  bool dedup_pool = true;
  int parallelism = 4;

  // k = B / G references sampled per iteration.
  int references_per_iteration() const { return batch_size / group_size; }
  // m = B / (2G) groups per role.
  int selection_size() const { return batch_size / (2 * group_size); }

  bool operator==(const EngineConfig&) const = default;
};

// Fills defaults for missing keys and checks every invariant. Keys prefixed
// with `remote_` or `synthetic_` belong to the backends and are skipped here;
// any other unknown key is rejected.
EngineConfig validate_config(const KeyValueMap& raw);

// Inverse of validate_config: every engine key, doubles in shortest
// round-trip form.
KeyValueMap to_key_values(const EngineConfig& cfg);

// `key = value` lines; `#` starts a comment; blank lines ignored.
KeyValueMap parse_key_value_text(std::string_view text);
std::string render_key_value_text(const KeyValueMap& kv);
KeyValueMap read_key_value_file(const std::filesystem::path& path);

// Typed accessors shared by the backend settings loaders.
namespace kv {
double get_double(const KeyValueMap& raw, std::string_view key, double fallback);
int get_int(const KeyValueMap& raw, std::string_view key, int fallback);
bool get_bool(const KeyValueMap& raw, std::string_view key, bool fallback);
std::string get_string(const KeyValueMap& raw, std::string_view key,
                       std::string fallback);
std::string format_double(double value);
}  // namespace kv

}  // namespace selfplay
