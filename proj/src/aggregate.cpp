#include "infoagg/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "infoagg/errors.hpp"
#include "infoagg/rng.hpp"

namespace infoagg {

namespace {

void check_answers(std::span<const Label> answers, int k) {
  if (answers.empty()) throw InputError("empty answer vector");
  for (Label a : answers) {
    if (a < 0 || a >= k) throw DomainError("answer index outside [0, K)");
  }
}

void check_peer_inputs(std::span<const Label> answers, const SecondOrderMatrix& so,
                       int target_agent) {
  const int n = static_cast<int>(answers.size());
  if (n < 2) throw InputError("second-order scores need at least two agents");
  if (so.num_agents() != n) {
    throw DimensionError("answer vector has " + std::to_string(n) +
                         " agents but the second-order matrix covers " +
                         std::to_string(so.num_agents()));
  }
  check_answers(answers, so.num_labels());
  if (target_agent < 0 || target_agent >= n) throw DimensionError("agent index out of range");
}

Decision decide(AdvantageVector adv, const TiePolicy& tie, std::uint64_t question) {
  const auto best = argmax_set(adv.values, kAdvantageTieTolerance);
  const Label label = tie.resolve(best, question);
  return Decision{.label = label, .advantage = std::move(adv)};
}

}  // namespace

const char* rule_name(Rule rule) {
  switch (rule) {
    case Rule::kMajority: return "MV";
    case Rule::kSurprisinglyPopular: return "SP";
    case Rule::kInverseSurprisinglyPopular: return "ISP";
  }
  return "?";
}

Label TiePolicy::resolve(std::span<const Label> candidates, std::uint64_t question) const {
  if (candidates.empty()) throw InputError("no candidate labels to break a tie between");
  if (candidates.size() == 1 || mode_ == Mode::kLowestIndex) return candidates.front();
  SplitMix64 rng(seed_, question, StreamTag::kTieBreak);
  return candidates[uniform_index(rng, candidates.size())];
}

std::vector<Label> argmax_set(std::span<const double> scores, double tolerance) {
  if (scores.empty()) return {};
  const double best = *std::max_element(scores.begin(), scores.end());
  std::vector<Label> out;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    if (scores[s] >= best - tolerance) out.push_back(static_cast<Label>(s));
  }
  return out;
}

Label aggregate_mv(std::span<const Label> answers, const LabelSpace& space,
                   const TiePolicy& tie, std::uint64_t question) {
  check_answers(answers, space.size());
  std::vector<double> votes(static_cast<std::size_t>(space.size()), 0.0);
  for (Label a : answers) votes[static_cast<std::size_t>(a)] += 1.0;
  return tie.resolve(argmax_set(votes, 0.5), question);
}

std::vector<double> weighted_votes(std::span<const Label> answers,
                                   std::span<const double> weights, int k) {
  if (answers.size() != weights.size()) {
    throw DimensionError("answers and weights differ in length");
  }
  check_answers(answers, k);
  std::vector<double> votes(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (!std::isfinite(weights[i])) throw DomainError("weights must be finite");
    votes[static_cast<std::size_t>(answers[i])] += weights[i];
  }
  return votes;
}

double weighted_tie_tolerance(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += std::abs(w);
  return 1e-12 * total;
}

Label aggregate_weighted(std::span<const Label> answers, std::span<const double> weights,
                         const LabelSpace& space, const TiePolicy& tie,
                         std::uint64_t question) {
  const auto votes = weighted_votes(answers, weights, space.size());
  return tie.resolve(argmax_set(votes, weighted_tie_tolerance(weights)), question);
}

AdvantageVector advantage_mv(std::span<const Label> answers, const LabelSpace& space) {
  check_answers(answers, space.size());
  const int k = space.size();
  const double share = static_cast<double>(answers.size()) / k;
  AdvantageVector adv{.values = std::vector<double>(static_cast<std::size_t>(k), -share),
                      .rule = Rule::kMajority};
  for (Label a : answers) adv.values[static_cast<std::size_t>(a)] += 1.0;
  return adv;
}

double sp_score(Label target_label, int target_agent, std::span<const Label> answers,
                const SecondOrderMatrix& so) {
  check_peer_inputs(answers, so, target_agent);
  if (target_label < 0 || target_label >= so.num_labels()) {
    throw DomainError("label index outside [0, K)");
  }
  const int n = static_cast<int>(answers.size());
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j == target_agent) continue;
    total += so(target_agent, j, target_label, answers[static_cast<std::size_t>(j)]);
  }
  return total / (n - 1);
}

double isp_score(Label target_label, int target_agent, std::span<const Label> answers,
                 const SecondOrderMatrix& so) {
  check_peer_inputs(answers, so, target_agent);
  const int k = so.num_labels();
  if (target_label < 0 || target_label >= k) throw DomainError("label index outside [0, K)");
  const int n = static_cast<int>(answers.size());
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j == target_agent) continue;
    const Label aj = answers[static_cast<std::size_t>(j)];
    // Every conditioning label except the one agent j actually gave.
    const double counterfactual =
        so.row_sum(target_agent, j, target_label) - so(target_agent, j, target_label, aj);
    total += counterfactual / (k - 1);
  }
  return total / (n - 1);
}

namespace {

template <class Score>
AdvantageVector peer_advantage(std::span<const Label> answers, const SecondOrderMatrix& so,
                               Rule rule, Score score) {
  check_peer_inputs(answers, so, 0);
  const int k = so.num_labels();
  const int n = static_cast<int>(answers.size());
  AdvantageVector adv{.values = std::vector<double>(static_cast<std::size_t>(k), 0.0),
                      .rule = rule};
  for (Label s = 0; s < k; ++s) {
    double predicted = 0.0;
    for (int i = 0; i < n; ++i) predicted += score(s, i, answers, so);
    adv.values[static_cast<std::size_t>(s)] = -predicted;
  }
  for (Label a : answers) adv.values[static_cast<std::size_t>(a)] += 1.0;
  return adv;
}

}  // namespace

AdvantageVector advantage_sp(std::span<const Label> answers, const SecondOrderMatrix& so) {
  return peer_advantage(answers, so, Rule::kSurprisinglyPopular, sp_score);
}

AdvantageVector advantage_isp(std::span<const Label> answers, const SecondOrderMatrix& so) {
  return peer_advantage(answers, so, Rule::kInverseSurprisinglyPopular, isp_score);
}

Decision aggregate_sp(std::span<const Label> answers, const LabelSpace& space,
                      const SecondOrderMatrix& so, const TiePolicy& tie,
                      std::uint64_t question) {
  if (so.num_labels() != space.size()) throw DimensionError("label count mismatch");
  return decide(advantage_sp(answers, so), tie, question);
}

Decision aggregate_isp(std::span<const Label> answers, const LabelSpace& space,
                       const SecondOrderMatrix& so, const TiePolicy& tie,
                       std::uint64_t question) {
  if (so.num_labels() != space.size()) throw DimensionError("label count mismatch");
  return decide(advantage_isp(answers, so), tie, question);
}

AdvantageVector advantage(Rule rule, std::span<const Label> answers, const LabelSpace& space,
                          const SecondOrderMatrix* so) {
  if (rule == Rule::kMajority) return advantage_mv(answers, space);
  if (so == nullptr) throw InputError("SP/ISP advantages need a second-order matrix");
  return rule == Rule::kSurprisinglyPopular ? advantage_sp(answers, *so)
                                            : advantage_isp(answers, *so);
}

double dominance_threshold(const AgentProfile& profile, int target_agent,
                           const LabelSpace& space) {
  const int n = profile.size();
  const int k = space.size();
  if (n < 2) throw InputError("dominance threshold needs at least two agents");
  if (target_agent < 0 || target_agent >= n) throw DimensionError("agent index out of range");
  // (K-1)^{N-2} prod x_j / ((K-1)^{N-2} prod x_j + prod (1 - x_j)), in logs.
  double log_num = (n - 2) * std::log(static_cast<double>(k - 1));
  double log_miss = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j == target_agent) continue;
    const double x = profile.accuracy[static_cast<std::size_t>(j)];
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("accuracy outside [0, 1]");
    log_num += std::log(x);
    log_miss += std::log1p(-x);
  }
  if (std::isinf(log_num) && std::isinf(log_miss)) {
    throw DomainError("dominance threshold undefined for peers at both 0 and 1");
  }
  return 1.0 / (1.0 + std::exp(log_miss - log_num));
}

}  // namespace infoagg
