#pragma once

// Second-order information: pairwise conditional answer probabilities
// P(A_i = s_k | A_j = s_l), either implied by an accuracy profile or counted
// from a prediction matrix.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "infoagg/core.hpp"

namespace infoagg {

enum class SecondOrderSource { kExact, kEmpirical, kLeaveOneOut, kMixture };

struct SecondOrderProvenance {
  SecondOrderSource source = SecondOrderSource::kExact;
  int sample_size = 0;                     // M for empirical estimates
  std::optional<int> excluded_question = std::nullopt;  // leave-one-out only
  double smoothing = 0.0;                  // additive pseudo-count
};

// Dense N x N x K x K table. Immutable once built.
class SecondOrderMatrix {
 public:
  // probs and imputed are indexed by index(i, j, k, l). Entries are checked
  // to be in [0, 1] with every conditional column summing to 1.
  SecondOrderMatrix(int n, int k, std::vector<double> probs,
                    std::vector<std::uint8_t> imputed = {},
                    SecondOrderProvenance provenance = {});

  int num_agents() const { return n_; }
  int num_labels() const { return k_; }

  // P(A_i = s_k | A_j = s_l)
  double operator()(int i, int j, Label k, Label l) const { return probs_[index(i, j, k, l)]; }
  bool imputed(int i, int j, Label k, Label l) const {
    return !imputed_.empty() && imputed_[index(i, j, k, l)] != 0;
  }
  // sum over l of P(A_i = s_k | A_j = s_l)
  double row_sum(int i, int j, Label k) const {
    return row_sums_[(static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
                      static_cast<std::size_t>(j)) *
                         static_cast<std::size_t>(k_) +
                     static_cast<std::size_t>(k)];
  }
  int imputed_count() const;

  const SecondOrderProvenance& provenance() const { return provenance_; }
  std::span<const double> probs() const { return probs_; }
  std::span<const std::uint8_t> imputed_flags() const { return imputed_; }

  std::size_t index(int i, int j, Label k, Label l) const {
    return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
             static_cast<std::size_t>(j)) *
                static_cast<std::size_t>(k_) +
            static_cast<std::size_t>(k)) *
               static_cast<std::size_t>(k_) +
           static_cast<std::size_t>(l);
  }

  // Largest absolute entry difference over off-diagonal agent pairs.
  double max_abs_diff(const SecondOrderMatrix& other) const;

 private:
  int n_;
  int k_;
  std::vector<double> probs_;
  std::vector<std::uint8_t> imputed_;
  std::vector<double> row_sums_;
  SecondOrderProvenance provenance_;
};

// Closed forms under the shuffled conditional-independence model:
//   same label:  x_i x_j + (1 - x_i)(1 - x_j) / (K - 1)
//   cross label: (x_i (1 - x_j) + (1 - x_i) x_j) / (K - 1)
//                + (K - 2)(1 - x_i)(1 - x_j) / (K - 1)^2
double model_same_label(double xi, double xj, int k);
double model_cross_label(double xi, double xj, int k);

SecondOrderMatrix exact_second_order(std::span<const double> accuracy, const LabelSpace& space);
SecondOrderMatrix exact_second_order(const AgentProfile& profile, const LabelSpace& space);

// Co-occurrence counts of every agent pair; the building block for the full
// and leave-one-out estimators.
class PairCounts {
 public:
  explicit PairCounts(const PredictionMatrix& pm);

  void remove_question(const PredictionMatrix& pm, int question);
  // Zero-denominator cells fall back to 1/K and are flagged imputed.
  SecondOrderMatrix to_matrix(SecondOrderProvenance provenance) const;

  long joint(int i, int j, Label k, Label l) const;
  long marginal(int j, Label l) const;

 private:
  int n_;
  int k_;
  int m_;
  std::vector<long> joint_;     // N x N x K x K
  std::vector<long> marginal_;  // N x K
};

SecondOrderMatrix empirical_second_order(const PredictionMatrix& pm, double smoothing = 0.0);
SecondOrderMatrix loo_second_order(const PredictionMatrix& pm, int exclude_question,
                                   double smoothing = 0.0);

}  // namespace infoagg
