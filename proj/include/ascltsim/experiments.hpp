#ifndef ASCLTSIM_EXPERIMENTS_HPP
#define ASCLTSIM_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ascltsim/asclt.hpp"
#include "ascltsim/conditions.hpp"

namespace ascltsim {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Parsed from a strict JSON config file; unknown keys anywhere are errors.
struct ExperimentConfig {
  std::string model = "iid";
  double tau = 1.0;
  std::vector<GridSize> n_ladder;  // strictly increasing in both coordinates
  int reps = 1;
  std::uint64_t seed = 0;
  Normalization normalization = Normalization::paper_log;  // headline mode
  std::string method = "auto";  // auto | iid | cholesky | circulant
  double epsilon = 0.5;
  bool cond_berman = false;
  bool cond_dprime = false;
  bool cond_gap = false;
  int gap_reps = 0;  // 0: reuse `reps`
  std::string output_dir = ".";

  // Canonical single-line JSON echo (key-sorted); hashed into the manifest.
  std::string canonical_json() const;
};

ExperimentConfig parse_experiment_config_text(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

struct RepRecord {
  int rep = 0;
  double a_paper = 0.0;
  double a_harmonic = 0.0;
  int no_exceed = 0;  // indicator of M_n <= u_n at this ladder size
};

struct NormalSummary {
  double mean = 0.0;
  double sd = 0.0;      // sample sd (n-1 denominator)
  double stderr_ = 0.0; // sd / sqrt(reps)
  std::optional<double> analytic;  // E[A_n], i.i.d. models only
};

struct LadderSummary {
  GridSize n;
  NormalSummary paper;
  NormalSummary harmonic;
  double exp_neg_tau = 0.0;
  double p_hat = 0.0;         // empirical no-exceedance frequency
  double p_hat_stderr = 0.0;  // binomial
  std::optional<double> p_exact;  // (1 - tau/(n1 n2))^{n1 n2}, i.i.d. only
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::vector<RepRecord>> records;  // [ladder index][rep]
  std::vector<LadderSummary> summaries;
  std::vector<ConditionReport> conditions;  // one per ladder size, when enabled
};

// Deterministic given (config, threads is irrelevant to the result).
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 1);

// trajectories.csv, summary.csv, conditions.json, manifest.json under dir.
void write_experiment_outputs(const ExperimentResult& result, const std::string& dir);

// The summary table formatted for stdout, one row per ladder size in the
// config's headline normalization.
std::string format_convergence_table(const ExperimentResult& result);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace ascltsim

#endif
