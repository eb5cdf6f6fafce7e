#pragma once

// Label-free accuracy estimation and the end-to-end aggregation pipeline.
//
// OW-L fits accuracies x so that the model-implied second-order matrix
// matches the empirical one in squared loss (projected gradient descent with
// backtracking inside the box [1/K + eps, 1 - eps], several random starts).
// OW-I counts how often each agent agrees with ISP pseudo-labels.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infoagg/aggregate.hpp"
#include "infoagg/core.hpp"
#include "infoagg/secondorder.hpp"

namespace infoagg {

struct ErmConfig {
  int starts = 8;
  int max_iters = 2000;
  double step = 0.05;
  double tol = 1e-8;
  double epsilon = kDefaultClampEpsilon;  // box is [1/K + epsilon, 1 - epsilon]
  std::uint64_t seed = 0;
};

struct FitResult {
  std::vector<double> accuracies;
  double loss = 0.0;
  int restarts_agreeing = 0;
  bool converged = false;
  int iterations = 0;  // of the best start
};

// Sum over ordered pairs i != j and all (k, l) of squared residuals between
// the model probabilities at x and so_hat.
double erm_loss(std::span<const double> x, const SecondOrderMatrix& so_hat);
std::vector<double> erm_gradient(std::span<const double> x, const SecondOrderMatrix& so_hat);

FitResult fit_ow_l(const SecondOrderMatrix& so_hat, const ErmConfig& cfg);
FitResult fit_ow_l(const PredictionMatrix& pm, const ErmConfig& cfg);

// ISP pseudo-labels (lowest-index ties) then per-agent agreement rates,
// clamped into the box.
FitResult fit_ow_i(const PredictionMatrix& pm, const SecondOrderMatrix& so,
                   const TiePolicy& tie = TiePolicy::lowest_index(),
                   double epsilon = kDefaultClampEpsilon);

struct Method {
  enum class Kind { kMv, kSp, kIsp, kOwL, kOwI, kOwOracle, kEow };
  Kind kind = Kind::kMv;
  std::vector<double> params;  // accuracies for OW_ORACLE, abilities for EOW

  static Method parse(std::string_view name, std::vector<double> params = {});
  std::string name() const;
};

struct PipelineConfig {
  ErmConfig erm;
  TiePolicy tie = TiePolicy::uniform_random(0);
  std::optional<std::uint64_t> shuffle_seed;
  double smoothing = 0.0;
  unsigned threads = 1;
};

struct PipelineResult {
  std::vector<Label> labels;          // one per question, original labelling
  std::optional<FitResult> fit;       // OW-L / OW-I
  std::vector<double> weights;        // weighted methods
  int imputed_cells = 0;              // second-order methods
};

// Shuffles (when configured), fits, aggregates every question, maps back.
// The truth column of `pm` is never consulted.
PipelineResult pipeline_aggregate(const PredictionMatrix& pm, const Method& method,
                                  const PipelineConfig& cfg);

}  // namespace infoagg
