#pragma once

// Aggregation rules over one question's answer vector.
//
// Every rule picks the label maximizing a score: raw votes (MV), weighted
// votes (OW with logit weights, EOW with ability weights), or an advantage
// that subtracts a peer-predicted score from the votes (SP, ISP). Advantage
// vectors for MV/SP/ISP sum to zero over labels.

#include <cstdint>
#include <span>
#include <vector>

#include "infoagg/core.hpp"
#include "infoagg/secondorder.hpp"

namespace infoagg {

enum class Rule { kMajority, kSurprisinglyPopular, kInverseSurprisinglyPopular };

const char* rule_name(Rule rule);

struct AdvantageVector {
  std::vector<double> values;
  Rule rule = Rule::kMajority;
};

class TiePolicy {
 public:
  enum class Mode { kUniformRandom, kLowestIndex };

  static TiePolicy uniform_random(std::uint64_t seed) { return TiePolicy(Mode::kUniformRandom, seed); }
  static TiePolicy lowest_index() { return TiePolicy(Mode::kLowestIndex, 0); }

  Mode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }

  // Picks one of `candidates` (non-empty, ascending). Deterministic in
  // (seed, question).
  Label resolve(std::span<const Label> candidates, std::uint64_t question) const;

 private:
  TiePolicy(Mode mode, std::uint64_t seed) : mode_(mode), seed_(seed) {}
  Mode mode_;
  std::uint64_t seed_;
};

// Advantages closer than this to the maximum count as tied.
inline constexpr double kAdvantageTieTolerance = 1e-9;

// Labels whose score is within `tolerance` of the maximum, ascending.
std::vector<Label> argmax_set(std::span<const double> scores, double tolerance);

struct Decision {
  Label label = 0;
  AdvantageVector advantage;
};

Label aggregate_mv(std::span<const Label> answers, const LabelSpace& space,
                   const TiePolicy& tie, std::uint64_t question = 0);

// Per-label sum of weights of the agents voting for it.
std::vector<double> weighted_votes(std::span<const Label> answers,
                                   std::span<const double> weights, int k);

// Tie tolerance for weighted votes, relative to the total absolute weight.
double weighted_tie_tolerance(std::span<const double> weights);

// argmax_s sum_i w_i 1{a_i = s}. OW when w_i = sigma_K^{-1}(x_i), EOW when
// w_i = beta_i.
Label aggregate_weighted(std::span<const Label> answers, std::span<const double> weights,
                         const LabelSpace& space, const TiePolicy& tie,
                         std::uint64_t question = 0);

AdvantageVector advantage_mv(std::span<const Label> answers, const LabelSpace& space);

// (1/(N-1)) sum_{j != i} P(A_i = s | A_j = a_j)
double sp_score(Label target_label, int target_agent, std::span<const Label> answers,
                const SecondOrderMatrix& so);
AdvantageVector advantage_sp(std::span<const Label> answers, const SecondOrderMatrix& so);
Decision aggregate_sp(std::span<const Label> answers, const LabelSpace& space,
                      const SecondOrderMatrix& so, const TiePolicy& tie,
                      std::uint64_t question = 0);

// (1/(N-1)) sum_{j != i} (1/(K-1)) sum_{a != a_j} P(A_i = s | A_j = a)
double isp_score(Label target_label, int target_agent, std::span<const Label> answers,
                 const SecondOrderMatrix& so);
AdvantageVector advantage_isp(std::span<const Label> answers, const SecondOrderMatrix& so);
Decision aggregate_isp(std::span<const Label> answers, const LabelSpace& space,
                       const SecondOrderMatrix& so, const TiePolicy& tie,
                       std::uint64_t question = 0);

AdvantageVector advantage(Rule rule, std::span<const Label> answers, const LabelSpace& space,
                          const SecondOrderMatrix* so);

// Accuracy level at which agent i's logit weight equals the summed logit
// weights of its peers. OW strictly beats following agent i alone whenever
// x_i is below this value.
double dominance_threshold(const AgentProfile& profile, int target_agent,
                           const LabelSpace& space);

}  // namespace infoagg
