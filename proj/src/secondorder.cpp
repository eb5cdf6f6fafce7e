#include "infoagg/secondorder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "infoagg/errors.hpp"

namespace infoagg {

namespace {

constexpr double kColumnSumTolerance = 1e-9;

}  // namespace

SecondOrderMatrix::SecondOrderMatrix(int n, int k, std::vector<double> probs,
                                     std::vector<std::uint8_t> imputed,
                                     SecondOrderProvenance provenance)
    : n_(n), k_(k), probs_(std::move(probs)), imputed_(std::move(imputed)),
      provenance_(provenance) {
  if (n < 1 || k < 2) throw InputError("second-order matrix needs N >= 1 and K >= 2");
  const std::size_t cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n) *
                            static_cast<std::size_t>(k) * static_cast<std::size_t>(k);
  if (probs_.size() != cells) throw DimensionError("second-order table has the wrong size");
  if (!imputed_.empty() && imputed_.size() != cells) {
    throw DimensionError("imputed-flag table has the wrong size");
  }
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("second-order entry outside [0, 1]");
  }
  row_sums_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n) *
                       static_cast<std::size_t>(k),
                   0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (Label l = 0; l < k; ++l) {
        double column = 0.0;
        for (Label kk = 0; kk < k; ++kk) column += (*this)(i, j, kk, l);
        if (std::abs(column - 1.0) > kColumnSumTolerance) {
          throw DomainError("conditional column (" + std::to_string(i) + "," +
                            std::to_string(j) + ",*," + std::to_string(l) +
                            ") does not sum to 1");
        }
      }
      for (Label kk = 0; kk < k; ++kk) {
        double row = 0.0;
        for (Label l = 0; l < k; ++l) row += (*this)(i, j, kk, l);
        row_sums_[(static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>(j)) *
                      static_cast<std::size_t>(k) +
                  static_cast<std::size_t>(kk)] = row;
      }
    }
  }
}

int SecondOrderMatrix::imputed_count() const {
  return static_cast<int>(std::count(imputed_.begin(), imputed_.end(), std::uint8_t{1}));
}

double SecondOrderMatrix::max_abs_diff(const SecondOrderMatrix& other) const {
  if (other.n_ != n_ || other.k_ != k_) throw DimensionError("second-order shapes differ");
  double worst = 0.0;
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      if (i == j) continue;
      for (Label kk = 0; kk < k_; ++kk) {
        for (Label l = 0; l < k_; ++l) {
          worst = std::max(worst, std::abs((*this)(i, j, kk, l) - other(i, j, kk, l)));
        }
      }
    }
  }
  return worst;
}

double model_same_label(double xi, double xj, int k) {
  return xi * xj + (1.0 - xi) * (1.0 - xj) / (k - 1);
}

double model_cross_label(double xi, double xj, int k) {
  const double km1 = k - 1;
  return (xi * (1.0 - xj) + (1.0 - xi) * xj) / km1 +
         (k - 2) * (1.0 - xi) * (1.0 - xj) / (km1 * km1);
}

SecondOrderMatrix exact_second_order(std::span<const double> accuracy,
                                     const LabelSpace& space) {
  const int n = static_cast<int>(accuracy.size());
  const int k = space.size();
  if (n < 1) throw InputError("no agents");
  for (double x : accuracy) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("accuracy outside [0, 1]");
  }
  std::vector<double> probs(static_cast<std::size_t>(n * n * k * k));
  auto at = [&](int i, int j, int kk, int l) -> double& {
    return probs[static_cast<std::size_t>(((i * n + j) * k + kk) * k + l)];
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double xi = accuracy[static_cast<std::size_t>(i)];
      const double xj = accuracy[static_cast<std::size_t>(j)];
      const double same = i == j ? 1.0 : model_same_label(xi, xj, k);
      const double cross = i == j ? 0.0 : model_cross_label(xi, xj, k);
      for (int kk = 0; kk < k; ++kk) {
        for (int l = 0; l < k; ++l) at(i, j, kk, l) = kk == l ? same : cross;
      }
    }
  }
  return SecondOrderMatrix(n, k, std::move(probs), {},
                           SecondOrderProvenance{.source = SecondOrderSource::kExact});
}

SecondOrderMatrix exact_second_order(const AgentProfile& profile, const LabelSpace& space) {
  return exact_second_order(profile.accuracy, space);
}

PairCounts::PairCounts(const PredictionMatrix& pm)
    : n_(pm.num_agents()), k_(pm.num_labels()), m_(pm.num_questions()) {
  joint_.assign(static_cast<std::size_t>(n_ * n_ * k_ * k_), 0);
  marginal_.assign(static_cast<std::size_t>(n_ * k_), 0);
  for (int q = 0; q < m_; ++q) {
    const auto row = pm.row(q);
    for (int j = 0; j < n_; ++j) {
      const Label l = row[static_cast<std::size_t>(j)];
      ++marginal_[static_cast<std::size_t>(j * k_ + l)];
      for (int i = 0; i < n_; ++i) {
        ++joint_[static_cast<std::size_t>(((i * n_ + j) * k_ + row[static_cast<std::size_t>(i)]) *
                                              k_ +
                                          l)];
      }
    }
  }
}

void PairCounts::remove_question(const PredictionMatrix& pm, int question) {
  if (question < 0 || question >= m_) throw DimensionError("question index out of range");
  const auto row = pm.row(question);
  for (int j = 0; j < n_; ++j) {
    const Label l = row[static_cast<std::size_t>(j)];
    --marginal_[static_cast<std::size_t>(j * k_ + l)];
    for (int i = 0; i < n_; ++i) {
      --joint_[static_cast<std::size_t>(((i * n_ + j) * k_ + row[static_cast<std::size_t>(i)]) *
                                            k_ +
                                        l)];
    }
  }
  --m_;
}

long PairCounts::joint(int i, int j, Label k, Label l) const {
  return joint_[static_cast<std::size_t>(((i * n_ + j) * k_ + k) * k_ + l)];
}

long PairCounts::marginal(int j, Label l) const {
  return marginal_[static_cast<std::size_t>(j * k_ + l)];
}

SecondOrderMatrix PairCounts::to_matrix(SecondOrderProvenance provenance) const {
  const double alpha = provenance.smoothing;
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("smoothing must be >= 0");
  provenance.sample_size = m_;
  std::vector<double> probs(joint_.size());
  std::vector<std::uint8_t> imputed(joint_.size(), 0);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      for (Label l = 0; l < k_; ++l) {
        const long denom = marginal(j, l);
        for (Label kk = 0; kk < k_; ++kk) {
          const auto idx = static_cast<std::size_t>(((i * n_ + j) * k_ + kk) * k_ + l);
          if (i == j) {
            probs[idx] = kk == l ? 1.0 : 0.0;
          } else if (denom == 0 && alpha == 0.0) {
            probs[idx] = 1.0 / k_;
            imputed[idx] = 1;
          } else {
            probs[idx] = (static_cast<double>(joint(i, j, kk, l)) + alpha) /
                         (static_cast<double>(denom) + k_ * alpha);
          }
        }
      }
    }
  }
  return SecondOrderMatrix(n_, k_, std::move(probs), std::move(imputed), provenance);
}

SecondOrderMatrix empirical_second_order(const PredictionMatrix& pm, double smoothing) {
  if (pm.num_questions() < 1) throw InputError("empirical second-order needs M >= 1");
  return PairCounts(pm).to_matrix(SecondOrderProvenance{
      .source = SecondOrderSource::kEmpirical, .sample_size = 0, .excluded_question = {},
      .smoothing = smoothing});
}

SecondOrderMatrix loo_second_order(const PredictionMatrix& pm, int exclude_question,
                                   double smoothing) {
  if (pm.num_questions() < 2) throw InputError("leave-one-out second-order needs M >= 2");
  PairCounts counts(pm);
  counts.remove_question(pm, exclude_question);
  return counts.to_matrix(SecondOrderProvenance{.source = SecondOrderSource::kLeaveOneOut,
                                                .sample_size = 0,
                                                .excluded_question = exclude_question,
                                                .smoothing = smoothing});
}

}  // namespace infoagg
