#include "selfplay/batch.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "selfplay/jsonl.hpp"
#include "selfplay/scoring.hpp"

namespace selfplay {

using nlohmann::json;

std::string_view role_name(Role role) { return role == Role::kStudent ? "student" : "teacher"; }

std::optional<Role> parse_role(std::string_view name) {
  if (name == "teacher") return Role::kTeacher;
  if (name == "student") return Role::kStudent;
  return std::nullopt;
}

std::vector<TrainingSample> assign_rewards(std::span<const TeacherGroup> teacher_groups,
                                           std::span<const StudentGroup> student_groups,
                                           const EngineConfig& cfg, int iteration) {
  std::vector<TrainingSample> out;
  for (const auto& g : teacher_groups) {
    if (g.completions.size() != g.scores.size()) {
      throw std::invalid_argument("teacher group " + g.group_id + ": completions and scores differ");
    }
    for (std::size_t i = 0; i < g.completions.size(); ++i) {
      TrainingSample s;
      s.role = Role::kTeacher;
      s.group_id = g.group_id;
      s.prompt = g.prompt;
      s.completion = g.completions[i];
      s.reward = g.scores[i].novelty;
      s.iteration = iteration;
      out.push_back(std::move(s));
    }
  }
  for (const auto& g : student_groups) {
    for (const auto& attempt : g.attempts) {
      TrainingSample s;
      s.role = Role::kStudent;
      s.group_id = g.group_id;
      s.prompt = g.prompt;
      s.completion = attempt.text;
      s.reward = correctness_score(attempt, g.reference, cfg);
      s.iteration = iteration;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<double> compute_advantages(std::span<const double> rewards, double epsilon_std) {
  std::vector<double> out(rewards.size(), 0.0);
  if (rewards.empty()) return out;
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double stddev = std::sqrt(ss / n);
  if (!(stddev >= epsilon_std)) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / stddev;
  return out;
}

void apply_group_advantages(std::vector<TrainingSample>& samples, double epsilon_std) {
  std::map<std::pair<Role, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    groups[{samples[i].role, samples[i].group_id}].push_back(i);
  }
  for (const auto& [key, members] : groups) {
    std::vector<double> rewards;
    rewards.reserve(members.size());
    for (auto i : members) rewards.push_back(samples[i].reward);
    const auto adv = compute_advantages(rewards, epsilon_std);
    for (std::size_t j = 0; j < members.size(); ++j) samples[members[j]].advantage = adv[j];
  }
}

std::string sample_record_json(const TrainingSample& s) {
  json j;
  j["iteration"] = s.iteration;
  j["role"] = std::string(role_name(s.role));
  j["group_id"] = s.group_id;
  j["prompt"] = s.prompt;
  j["completion"] = s.completion;
  j["reward"] = s.reward;
  j["advantage"] = s.advantage;
  j["token_unit"] = s.token_unit;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

TrainingSample parse_sample_record(std::string_view line) {
  const json j = json::parse(line);
  TrainingSample s;
  s.iteration = j.at("iteration").get<int>();
  const auto role = parse_role(j.at("role").get<std::string>());
  if (!role) throw std::invalid_argument("unknown role");
  s.role = *role;
  s.group_id = j.at("group_id").get<std::string>();
  s.prompt = j.at("prompt").get<std::string>();
  s.completion = j.at("completion").get<std::string>();
  s.reward = j.at("reward").get<double>();
  s.advantage = j.at("advantage").get<double>();
  s.token_unit = j.at("token_unit").get<std::string>();
  return s;
}

std::size_t emit_batch(std::span<const TrainingSample> samples, const std::filesystem::path& path) {
  std::vector<std::string> lines;
  lines.reserve(samples.size());
  for (const auto& s : samples) {
    if (!std::isfinite(s.reward) || !std::isfinite(s.advantage)) {
      throw std::invalid_argument("non-finite reward or advantage in group " + s.group_id);
    }
    lines.push_back(sample_record_json(s));
  }
  jsonl::touch(path);
  jsonl::append_lines(path, lines);
  return lines.size();
}

std::vector<TrainingSample> read_batch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open batch file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();

  std::vector<TrainingSample> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < content.size()) {
    ++line_no;
    const auto nl = content.find('\n', start);
    if (nl == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": truncated record");
    }
    try {
      out.push_back(parse_sample_record(std::string_view(content).substr(start, nl - start)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": bad record: " + e.what());
    }
    start = nl + 1;
  }
  return out;
}

}  // namespace selfplay
