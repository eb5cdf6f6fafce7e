#pragma once

// Generative simulators for the shuffled conditional-independence model and
// the difficulty-mixture model, plus the accuracy-grid and gap-curve
// experiments built on them.

#include <cstdint>
#include <vector>

#include "infoagg/core.hpp"
#include "infoagg/oracle.hpp"

namespace infoagg {

struct CiSimSpec {
  std::vector<double> accuracies;  // each in [1/K, 1]
  int k = 2;
  int m = 1;
  std::uint64_t seed = 0;
};

struct DifficultySimSpec {
  std::vector<double> abilities;  // beta_i >= 0
  DifficultyMixture mixture;
  int k = 2;
  int m = 1;
  std::uint64_t seed = 0;
};

void validate(const CiSimSpec& spec);
void validate(const DifficultySimSpec& spec);

// Truth uniform over the K labels; agent i answers it with probability x_i,
// otherwise a uniformly chosen other label. Question q uses its own stream
// derive(seed, q), so output is independent of `threads`.
PredictionMatrix simulate_ci(const CiSimSpec& spec, unsigned threads = 1);

struct DifficultySample {
  PredictionMatrix matrix;
  std::vector<double> alphas;  // difficulty drawn for each question
};

// As simulate_ci, with per-question accuracy sigma_K(alpha beta_i) and alpha
// drawn from the mixture.
PredictionMatrix simulate_difficulty(const DifficultySimSpec& spec, unsigned threads = 1);
DifficultySample simulate_difficulty_traced(const DifficultySimSpec& spec, unsigned threads = 1);

struct Table2Options {
  int m = 10'000;
  std::vector<double> accuracies{0.6, 0.7, 0.8, 0.9};
  std::vector<int> ks{2, 4, 6, 8, 10};
  unsigned threads = 1;
};

// Accuracies as fractions in [0, 1].
struct Table2Row {
  int k = 0;
  double mv = 0.0;
  double sp = 0.0;
  double single_best = 0.0;
  double isp = 0.0;
  double opt = 0.0;
};

// Per K: simulate, then score MV (uniform ties), SP and ISP (empirical
// second-order matrix of the same data, uniform ties), the agent with the
// highest true accuracy, and OW with the true accuracies.
std::vector<Table2Row> run_table2(std::uint64_t seed, const Table2Options& opts = {});

// Gaps in accuracy (fractions), averaged over replications.
struct GapPoint {
  int k = 0;
  double gap_isp_mv = 0.0;
  double gap_mv_sp = 0.0;
  double stderr_isp_mv = 0.0;  // standard error of the mean; 0 with one replication
  double stderr_mv_sp = 0.0;
};

// Replication r runs run_table2 with seed derive(seed, r).
std::vector<GapPoint> run_gap_curve(std::uint64_t seed, int replications,
                                    const Table2Options& opts = {});

}  // namespace infoagg
