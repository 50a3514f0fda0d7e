#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "selfplay/config.hpp"
#include "selfplay/embedder.hpp"
#include "selfplay/orchestrator.hpp"
#include "selfplay/pool.hpp"
#include "selfplay/remote.hpp"
#include "selfplay/simulation.hpp"
#include "selfplay/synthetic.hpp"
#include "selfplay/transcript.hpp"

extern char** environ;

namespace {

using namespace selfplay;
using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<double> s_min;
  std::optional<std::string> diversity_mode;
  std::optional<std::string> endpoint;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value config file");
  cmd->add_option("--set", f.sets, "override a config key (key=value), repeatable");
  cmd->add_option("--s-min", f.s_min, "lower solve-rate threshold");
  cmd->add_option("--diversity-mode", f.diversity_mode, "embedding or concept")
      ->check(CLI::IsMember({"embedding", "concept"}));
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// SELFPLAY_<KEY> variables. Engine keys match case-insensitively; backend
// keys are lowercased.
KeyValueMap environment_overrides() {
  std::map<std::string, std::string> engine_keys;
  for (const auto& [key, value] : to_key_values(EngineConfig{})) engine_keys[upper(key)] = key;
  KeyValueMap out;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    if (!entry.starts_with("SELFPLAY_")) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    const std::string name(entry.substr(9, eq - 9));
    const std::string value(entry.substr(eq + 1));
    if (auto it = engine_keys.find(name); it != engine_keys.end()) {
      out[it->second] = value;
    } else if (name.starts_with("REMOTE_") || name.starts_with("SYNTHETIC_")) {
      std::string key = name;
      for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out[key] = value;
    }
  }
  return out;
}

// defaults < file < environment < flags
KeyValueMap layered_config(const CommonFlags& f) {
  KeyValueMap raw;
  if (!f.config_path.empty()) raw = read_key_value_file(f.config_path);
  for (const auto& [k, v] : environment_overrides()) raw[k] = v;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    raw[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (f.s_min) raw["s_min"] = kv::format_double(*f.s_min);
  if (f.diversity_mode) raw["diversity_mode"] = *f.diversity_mode;
  if (f.endpoint) raw["remote_endpoint"] = *f.endpoint;
  return raw;
}

void print_report(const IterationReport& r) {
  std::cerr << "iteration " << r.iteration << ": generated " << r.generated << ", valid "
            << r.valid << ", samples " << r.samples << ", pool " << r.pool_size;
  if (r.aborted) std::cerr << " (aborted: " << r.abort_reason << ")";
  if (!r.dropped.empty()) std::cerr << ", dropped " << r.dropped.size();
  std::cerr << '\n';
}

int cmd_run(const CommonFlags& f, int iterations, std::uint64_t seed, const std::string& out) {
  const KeyValueMap raw = layered_config(f);
  const EngineConfig cfg = validate_config(raw);
  const RemoteSettings settings = RemoteSettings::from_config(raw);
  if (settings.endpoint.empty()) throw ConfigError("remote_endpoint is required (--endpoint)");
  RemotePolicy policy(settings);
  std::unique_ptr<Embedder> embedder;
  if (settings.embedder == "hashed") {
    embedder = std::make_unique<HashedEmbedder>();
  } else {
    embedder = std::make_unique<RemoteEmbedder>(settings);
  }
  RunOptions options;
  options.iterations = iterations;
  options.seed = seed;
  options.output_dir = out;
  options.on_iteration = print_report;
  run(cfg, policy, *embedder, options);
  return 0;
}

int cmd_simulate(const CommonFlags& f, int iterations, std::uint64_t seed, int seeds,
                 const std::string& adapt, int warmup, const std::vector<double>& sweep,
                 const std::string& out) {
  const KeyValueMap raw = layered_config(f);
  const SyntheticSettings syn = SyntheticSettings::from_config(raw);
  std::vector<bool> adapts;
  if (adapt == "both") {
    adapts = {true, false};
  } else {
    adapts = {adapt == "true"};
  }
  std::vector<std::optional<double>> s_mins;
  if (sweep.empty()) {
    s_mins.push_back(std::nullopt);
  } else {
    for (double s : sweep) s_mins.push_back(s);
  }

  for (const auto& s_min : s_mins) {
    KeyValueMap layer = raw;
    if (s_min) layer["s_min"] = kv::format_double(*s_min);
    const EngineConfig cfg = validate_config(layer);
    for (bool a : adapts) {
      for (int i = 0; i < seeds; ++i) {
        SimulationSpec spec;
        spec.cfg = cfg;
        spec.synthetic = syn;
        spec.adapt = a;
        spec.seed = seed + static_cast<std::uint64_t>(i);
        spec.iterations = iterations;
        spec.warmup = warmup;
        if (!out.empty()) {
          std::string name = "seed" + std::to_string(spec.seed) + (a ? "-adapt" : "-frozen");
          if (s_min) name += "-smin" + kv::format_double(*s_min);
          spec.output_dir = std::filesystem::path(out) / name;
        }
        const SimulationSummary summary = simulate(spec);
        json line = summary_json(summary);
        line["seed"] = spec.seed;
        line["adapt"] = a;
        line["s_min"] = cfg.s_min;
        line["iterations"] = iterations;
        std::cout << line.dump() << std::endl;
      }
    }
  }
  return 0;
}

int cmd_score(const CommonFlags& f, const std::string& input) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot open " + input);
  const json doc = json::parse(in);
  KeyValueMap overrides = layered_config(f);
  HashedEmbedder embedder;
  for (const auto& s : score_transcript(doc, embedder, overrides)) {
    std::cout << transcript_score_json(s).dump() << '\n';
  }
  return std::cout.good() ? 0 : 1;
}

int cmd_inspect(const std::string& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("no such pool log: " + path);
  // Read-only: no truncation of a partial tail, just skip it.
  std::ifstream in(path);
  std::string line;
  std::vector<Problem> problems;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (in.eof()) break;  // unterminated final record
    if (line.empty()) continue;
    try {
      problems.push_back(parse_pool_record(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::map<std::string, std::size_t> concepts;
  std::map<int, std::size_t> per_iteration;
  std::vector<std::size_t> histogram(10, 0);
  std::size_t with_rate = 0;
  std::set<std::string> ids;
  for (const auto& p : problems) {
    ids.insert(p.id);
    for (const auto& c : p.concepts) ++concepts[normalize_concept(c)];
    ++per_iteration[p.iteration];
    if (p.solve_rate) {
      const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(*p.solve_rate * 10));
      ++histogram[bin];
      ++with_rate;
    }
  }
  std::vector<std::pair<std::string, std::size_t>> top(concepts.begin(), concepts.end());
  std::stable_sort(top.begin(), top.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  json concept_counts = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(top.size(), 20); ++i) {
    concept_counts.push_back({{"concept", top[i].first}, {"count", top[i].second}});
  }
  json j = {
      {"size", ids.size()},
      {"records", problems.size()},
      {"iterations", per_iteration.empty() ? 0 : per_iteration.rbegin()->first},
      {"distinct_concepts", concepts.size()},
      {"top_concepts", concept_counts},
      {"solve_rate_histogram", histogram},
      {"with_solve_rate", with_rate},
  };
  std::cout << j.dump(2) << '\n';
  return std::cout.good() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-play curriculum engine"};
  app.require_subcommand(1);

  CommonFlags run_flags, sim_flags, score_flags;
  int run_iterations = 1, sim_iterations = 200, sim_seeds = 1, warmup = 40;
  std::uint64_t run_seed = 0, sim_seed = 0;
  std::string run_out, sim_out, adapt = "true", input, pool_log;
  std::vector<double> sweep;

  auto* run_cmd = app.add_subcommand("run", "drive remote backends");
  add_common(run_cmd, run_flags);
  run_cmd->add_option("--endpoint", run_flags.endpoint, "chat-completions base URL");
  run_cmd->add_option("--iterations", run_iterations)->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run_seed);
  run_cmd->add_option("--output-dir", run_out)->required();

  auto* sim_cmd = app.add_subcommand("simulate", "drive the synthetic agent");
  add_common(sim_cmd, sim_flags);
  sim_cmd->add_option("--iterations", sim_iterations)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim_seed, "first seed");
  sim_cmd->add_option("--seeds", sim_seeds, "number of consecutive seeds")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--adapt", adapt, "true, false or both")
      ->check(CLI::IsMember({"true", "false", "both"}));
  sim_cmd->add_option("--warmup", warmup, "iterations excluded from the summary")
      ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--sweep-s-min", sweep, "run once per s_min value")->delimiter(',');
  sim_cmd->add_option("--output-dir", sim_out, "write run artifacts under this directory");

  auto* score_cmd = app.add_subcommand("score", "score a transcript file offline");
  add_common(score_cmd, score_flags);
  score_cmd->add_option("--input", input)->required();

  auto* inspect_cmd = app.add_subcommand("inspect", "summarize a pool log");
  inspect_cmd->add_option("pool_log", pool_log)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_flags, run_iterations, run_seed, run_out);
    if (*sim_cmd) {
      return cmd_simulate(sim_flags, sim_iterations, sim_seed, sim_seeds, adapt, warmup, sweep,
                          sim_out);
    }
    if (*score_cmd) return cmd_score(score_flags, input);
    if (*inspect_cmd) return cmd_inspect(pool_log);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
