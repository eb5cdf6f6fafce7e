#pragma once

// Domain types shared by every module: label spaces, prediction matrices,
// per-question label shuffles, agent profiles and the generalized
// sigmoid/logit pair sigma_K(x) = e^x / (K - 1 + e^x).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace infoagg {

// Canonical index of a candidate label, in [0, K).
using Label = int;

class LabelSpace {
 public:
  // Labels must be distinct and non-empty; at least two of them.
  explicit LabelSpace(std::vector<std::string> labels);

  // K labels named "s1" .. "sK".
  static LabelSpace with_size(int k);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& name(Label label) const;
  std::optional<Label> find(std::string_view name) const;
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> labels_;
};

// M questions x N agents of label indices (row-major), plus optional truth.
class PredictionMatrix {
 public:
  PredictionMatrix(LabelSpace space, std::vector<std::string> agents,
                   std::vector<Label> answers,
                   std::optional<std::vector<Label>> truth = std::nullopt,
                   std::vector<std::string> question_ids = {});

  const LabelSpace& space() const { return space_; }
  int num_labels() const { return space_.size(); }
  int num_questions() const { return num_questions_; }
  int num_agents() const { return static_cast<int>(agents_.size()); }

  Label answer(int question, int agent) const {
    return answers_[static_cast<std::size_t>(question) * agents_.size() +
                    static_cast<std::size_t>(agent)];
  }
  std::span<const Label> row(int question) const {
    return {answers_.data() + static_cast<std::size_t>(question) * agents_.size(),
            agents_.size()};
  }
  const std::vector<Label>& answers() const { return answers_; }

  bool has_truth() const { return truth_.has_value(); }
  const std::optional<std::vector<Label>>& truth() const { return truth_; }

  const std::vector<std::string>& agents() const { return agents_; }
  const std::vector<std::string>& question_ids() const { return question_ids_; }

  PredictionMatrix without_truth() const;
  PredictionMatrix with_truth(std::vector<Label> truth) const;
  PredictionMatrix select_agents(std::span<const int> agents) const;
  PredictionMatrix select_questions(std::span<const int> questions) const;

  bool operator==(const PredictionMatrix&) const = default;

 private:
  LabelSpace space_;
  std::vector<std::string> agents_;
  std::vector<std::string> question_ids_;
  std::vector<Label> answers_;
  std::optional<std::vector<Label>> truth_;
  int num_questions_ = 0;
};

// One permutation of [0, K) per question. perms[q][original] = shuffled.
struct ShuffleMap {
  std::vector<std::vector<Label>> perms;
  std::uint64_t seed = 0;

  ShuffleMap inverse() const;
  bool operator==(const ShuffleMap&) const = default;
};

ShuffleMap identity_shuffle(int num_questions, int k);

// Throws DimensionError if the map does not fit (m, k), InputError if an
// entry is not a bijection on [0, k).
void validate_shuffle(const ShuffleMap& map, int num_questions, int k);

struct AgentProfile {
  std::vector<double> accuracy;  // x_i
  std::vector<double> ability;   // beta_i
  std::vector<double> weight;    // w_i

  // Weights are the optimal-weight logits of the clamped accuracies; ability
  // is the same logit (the unit-difficulty ability that yields x_i).
  static AgentProfile from_accuracies(std::span<const double> accuracy, int k,
                                      double epsilon = 1e-6);
  // Weights are the abilities themselves; accuracy is sigma_K(beta_i).
  static AgentProfile from_abilities(std::span<const double> ability, int k);

  int size() const { return static_cast<int>(accuracy.size()); }
  std::vector<double> normalized_weights() const;
};

double sigma_k(double x, int k);
double sigma_k_inverse(double p, int k);

inline constexpr double kDefaultClampEpsilon = 1e-6;

// Clamp into [1/K + eps, 1 - eps].
double clamp_accuracy(double x, int k, double epsilon = kDefaultClampEpsilon);

// sigma_k_inverse of the clamped accuracy; exactly 0 for accuracies at or
// below the floor 1/K + eps.
double ow_weight(double x, int k, double epsilon = kDefaultClampEpsilon);
std::vector<double> ow_weights(std::span<const double> accuracy, int k,
                               double epsilon = kDefaultClampEpsilon);

// Relabels every answer (and truth) of question q through an independent
// uniform permutation drawn from derive(seed, q).
struct ShuffleResult {
  PredictionMatrix matrix;
  ShuffleMap map;
};
ShuffleResult shuffle_apply(const PredictionMatrix& pm, std::uint64_t seed);
PredictionMatrix shuffle_apply(const PredictionMatrix& pm, const ShuffleMap& map);

PredictionMatrix shuffle_invert(const PredictionMatrix& pm, const ShuffleMap& map);
// One aggregated label per question.
std::vector<Label> shuffle_invert(std::span<const Label> labels, const ShuffleMap& map);

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// handled exactly once; callers must make body(i) independent of the others.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace infoagg
