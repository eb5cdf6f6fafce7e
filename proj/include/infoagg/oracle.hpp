#pragma once

// Brute-force reference computations: exact posteriors under the shuffled
// conditional-independence model and under the difficulty-mixture model,
// and exact expectations obtained by enumerating all K^N answer vectors.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "infoagg/aggregate.hpp"
#include "infoagg/core.hpp"
#include "infoagg/errors.hpp"
#include "infoagg/rng.hpp"
#include "infoagg/secondorder.hpp"

namespace infoagg {

struct DifficultyAtom {
  double alpha = 0.0;   // difficulty; larger is easier, 0 means pure guessing
  double weight = 0.0;  // probability mass
};

// Distribution D(alpha) over question difficulty. Discrete atoms are used as
// given; continuous families are discretized by 64-point Gauss-Legendre
// quadrature (log-uniform on the log scale, log-normal after a logistic map
// of the real line onto (0, 1)).
class DifficultyMixture {
 public:
  enum class Family { kAtoms, kLogUniform, kLogNormal };

  static DifficultyMixture atoms(std::vector<DifficultyAtom> atoms);
  static DifficultyMixture log_uniform(double lo, double hi);
  static DifficultyMixture log_normal(double mu, double sigma);

  Family family() const { return family_; }
  std::span<const double> parameters() const { return params_; }
  // Atoms for discrete mixtures, quadrature nodes for continuous ones.
  const std::vector<DifficultyAtom>& support() const { return support_; }

  double sample(SplitMix64& rng) const;
  double mean() const;
  std::string describe() const;

 private:
  DifficultyMixture(Family family, std::vector<double> params,
                    std::vector<DifficultyAtom> support)
      : family_(family), params_(std::move(params)), support_(std::move(support)) {}

  Family family_;
  std::vector<double> params_;
  std::vector<DifficultyAtom> support_;
};

inline constexpr int kQuadratureOrder = 64;
inline constexpr std::uint64_t kDefaultEnumerationBudget = 10'000'000;

// Calls fn(answers) for every vector in [0, k)^n in lexicographic order.
// Throws ResourceError when k^n exceeds the budget.
template <class Fn>
void for_each_answer_vector(int n, int k, std::uint64_t budget, Fn&& fn) {
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > budget / static_cast<std::uint64_t>(k)) {
      throw ResourceError("enumeration of " + std::to_string(k) + "^" + std::to_string(n) +
                          " answer vectors exceeds the budget of " + std::to_string(budget));
    }
    total *= static_cast<std::uint64_t>(k);
  }
  std::vector<Label> a(static_cast<std::size_t>(n), 0);
  for (std::uint64_t c = 0; c < total; ++c) {
    fn(std::span<const Label>(a));
    for (int i = n - 1; i >= 0; --i) {
      if (++a[static_cast<std::size_t>(i)] < k) break;
      a[static_cast<std::size_t>(i)] = 0;
    }
  }
}

// P(A = answers | S* = truth) = prod_i [x_i if a_i = truth else (1-x_i)/(K-1)]
double ci_likelihood(std::span<const Label> answers, Label truth, std::span<const double> x,
                     int k);
// E_alpha prod_i P(A_i = a_i | truth, alpha), with accuracy sigma_K(alpha beta_i)
double mixture_likelihood(std::span<const Label> answers, Label truth,
                          std::span<const double> abilities, const DifficultyMixture& mix,
                          int k);

// Posterior over labels under a uniform prior. Accuracies may sit at 1/K or 1.
std::vector<double> bayes_posterior(std::span<const Label> answers, std::span<const double> x,
                                    const LabelSpace& space);
std::vector<double> mixture_posterior(std::span<const Label> answers,
                                      std::span<const double> abilities,
                                      const DifficultyMixture& mix, const LabelSpace& space);

// Population second-order matrix under the difficulty mixture: the
// alpha-expectation of the closed forms at x_i(alpha) = sigma_K(alpha beta_i).
SecondOrderMatrix mixture_second_order(std::span<const double> abilities,
                                       const DifficultyMixture& mix, const LabelSpace& space);

// E[Adv_rule(s*)] with s* = `truth` (default s_1), SP/ISP scored against the
// exact second-order matrix.
double exact_expected_advantage(Rule rule, std::span<const double> x, const LabelSpace& space,
                                std::uint64_t budget = kDefaultEnumerationBudget,
                                Label truth = 0);
double exact_expected_advantage_mixture(Rule rule, std::span<const double> abilities,
                                        const DifficultyMixture& mix, const LabelSpace& space,
                                        std::uint64_t budget = kDefaultEnumerationBudget);

// Probability that the rule returns the truth, with ties resolved uniformly
// at random (a tie among t labels containing the truth counts 1/t).
double exact_expected_accuracy(Rule rule, std::span<const double> x, const LabelSpace& space,
                               std::uint64_t budget = kDefaultEnumerationBudget);
double exact_expected_accuracy_weighted(std::span<const double> weights,
                                        std::span<const double> x, const LabelSpace& space,
                                        std::uint64_t budget = kDefaultEnumerationBudget);
// Accuracy of the Bayes decision: sum over answer vectors of max_s P(s, a).
double exact_bayes_accuracy(std::span<const double> x, const LabelSpace& space,
                            std::uint64_t budget = kDefaultEnumerationBudget);

struct AdvantageGaps {
  double isp_minus_mv = 0.0;
  double mv_minus_sp = 0.0;
};

// Closed forms:
//   ISP - MV = sum_i sum_{j != i} (K x_i - 1)(K x_j - 1)^2 / ((N-1) K (K-1)^3)
//   MV - SP  = same numerator / ((N-1) K (K-1)^2)
AdvantageGaps closed_form_gaps(std::span<const double> x, const LabelSpace& space);

}  // namespace infoagg
