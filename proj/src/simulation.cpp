#include "selfplay/simulation.hpp"

#include <cmath>

#include "selfplay/embedder.hpp"
#include "selfplay/orchestrator.hpp"

namespace selfplay {

SimulationSummary simulate(const SimulationSpec& spec) {
  SyntheticAgent agent(spec.synthetic, spec.adapt);
  HashedEmbedder embedder;

  SimulationSummary summary;
  std::size_t in_band = 0, counted = 0, well_posed = 0;
  std::vector<double> late_means;

  RunOptions options;
  options.iterations = spec.iterations;
  options.seed = spec.seed;
  options.output_dir = spec.output_dir;
  options.on_iteration = [&](const IterationReport& r) {
    summary.selected_means.push_back(r.selected_solve_rate_mean);
    if (r.iteration <= spec.warmup) return;
    ++counted;
    if (r.selected_solve_rate_mean) {
      const double m = *r.selected_solve_rate_mean;
      late_means.push_back(m);
      if (m >= spec.cfg.s_min && m <= spec.cfg.s_max) ++in_band;
    }
    for (const auto& p : r.selected_students) {
      const auto latent = decode_latent(p.text);
      if (latent && !latent->ill_posed) ++well_posed;
      ++summary.selected_total;
    }
  };

  RunResult result = run(spec.cfg, agent, embedder, options);

  if (counted > 0) summary.in_band_fraction = static_cast<double>(in_band) / counted;
  if (!late_means.empty()) {
    double mean = 0.0;
    for (double x : late_means) mean += x;
    mean /= static_cast<double>(late_means.size());
    double ss = 0.0;
    for (double x : late_means) ss += (x - mean) * (x - mean);
    summary.selected_mean_std = std::sqrt(ss / static_cast<double>(late_means.size()));
  }
  if (summary.selected_total > 0) {
    summary.valid_fraction_selected =
        static_cast<double>(well_posed) / static_cast<double>(summary.selected_total);
  }
  summary.final_pool_size = result.pool.size();
  summary.final_mean_pairwise_distance = result.pool.mean_pairwise_distance();
  summary.final_state = agent.state();
  return summary;
}

nlohmann::json summary_json(const SimulationSummary& s) {
  return {
      {"in_band_fraction", s.in_band_fraction},
      {"selected_mean_std", s.selected_mean_std},
      {"valid_fraction_selected", s.valid_fraction_selected},
      {"selected_total", s.selected_total},
      {"final_pool_size", s.final_pool_size},
      {"final_mean_pairwise_distance", s.final_mean_pairwise_distance},
      {"final_capability", s.final_state.capability},
      {"final_target_difficulty", s.final_state.target_difficulty},
      {"final_topic_mixture", s.final_state.topic_mixture},
  };
}

}  // namespace selfplay
