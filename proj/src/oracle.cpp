#include "infoagg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

namespace infoagg {

namespace {

// log(K - 1 + e^z) without overflow.
double log_denominator(double z, int k) {
  const double km1 = k - 1;
  if (z > 0.0) return z + std::log1p(km1 * std::exp(-z));
  return std::log(km1 + std::exp(z));
}

double log_sum_exp(std::span<const double> v) {
  const double hi = *std::max_element(v.begin(), v.end());
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

// Full set of Gauss-Legendre nodes/weights on [-1, 1].
std::vector<std::pair<double, double>> legendre_rule() {
  using Rule = boost::math::quadrature::gauss<double, kQuadratureOrder>;
  const auto& nodes = Rule::abscissa();
  const auto& weights = Rule::weights();
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out.emplace_back(nodes[i], weights[i]);
    if (nodes[i] != 0.0) out.emplace_back(-nodes[i], weights[i]);
  }
  return out;
}

std::vector<DifficultyAtom> normalized(std::vector<DifficultyAtom> atoms) {
  double total = 0.0;
  for (const auto& a : atoms) total += a.weight;
  for (auto& a : atoms) a.weight /= total;
  return atoms;
}

void check_abilities(std::span<const double> abilities) {
  if (abilities.empty()) throw InputError("no agents");
  for (double b : abilities) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("abilities must be finite and >= 0");
  }
}

void check_accuracies(std::span<const double> x) {
  if (x.empty()) throw InputError("no agents");
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("accuracy outside [0, 1]");
  }
}

}  // namespace

DifficultyMixture DifficultyMixture::atoms(std::vector<DifficultyAtom> atoms) {
  if (atoms.empty()) throw InputError("a difficulty mixture needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.alpha >= 0.0) || !std::isfinite(a.alpha)) {
      throw DomainError("difficulty atoms must be finite and >= 0");
    }
    if (!(a.weight >= 0.0)) throw DomainError("atom weights must be >= 0");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("atom weights must sum to 1");
  std::vector<double> params;
  for (const auto& a : atoms) {
    params.push_back(a.alpha);
    params.push_back(a.weight);
  }
  return DifficultyMixture(Family::kAtoms, std::move(params), std::move(atoms));
}

DifficultyMixture DifficultyMixture::log_uniform(double lo, double hi) {
  if (!(lo > 0.0 && hi > lo) || !std::isfinite(hi)) {
    throw DomainError("log-uniform difficulty needs 0 < lo < hi");
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  std::vector<DifficultyAtom> support;
  for (const auto& [node, weight] : legendre_rule()) {
    support.push_back({std::exp(0.5 * (a + b) + 0.5 * (b - a) * node), 0.5 * weight});
  }
  return DifficultyMixture(Family::kLogUniform, {lo, hi}, normalized(std::move(support)));
}

DifficultyMixture DifficultyMixture::log_normal(double mu, double sigma) {
  if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("log-normal difficulty needs finite mu and sigma > 0");
  }
  std::vector<DifficultyAtom> support;
  for (const auto& [node, weight] : legendre_rule()) {
    const double u = 0.5 * (node + 1.0);
    const double z = std::log(u / (1.0 - u));
    const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    support.push_back({std::exp(mu + sigma * z), 0.5 * weight * density / (u * (1.0 - u))});
  }
  return DifficultyMixture(Family::kLogNormal, {mu, sigma}, normalized(std::move(support)));
}

double DifficultyMixture::sample(SplitMix64& rng) const {
  switch (family_) {
    case Family::kAtoms: {
      const double u = uniform01(rng);
      double acc = 0.0;
      for (const auto& a : support_) {
        acc += a.weight;
        if (u < acc) return a.alpha;
      }
      return support_.back().alpha;
    }
    case Family::kLogUniform: {
      const double a = std::log(params_[0]);
      const double b = std::log(params_[1]);
      return std::exp(a + (b - a) * uniform01(rng));
    }
    case Family::kLogNormal:
      return std::exp(params_[0] + params_[1] * standard_normal(rng));
  }
  return 0.0;
}

double DifficultyMixture::mean() const {
  switch (family_) {
    case Family::kAtoms: {
      double m = 0.0;
      for (const auto& a : support_) m += a.alpha * a.weight;
      return m;
    }
    case Family::kLogUniform:
      return (params_[1] - params_[0]) / std::log(params_[1] / params_[0]);
    case Family::kLogNormal:
      return std::exp(params_[0] + 0.5 * params_[1] * params_[1]);
  }
  return 0.0;
}

std::string DifficultyMixture::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family_) {
    case Family::kAtoms:
      for (std::size_t i = 0; i < support_.size(); ++i) {
        if (i) os << ',';
        os << support_[i].alpha << ':' << support_[i].weight;
      }
      break;
    case Family::kLogUniform:
      os << "log-uniform:" << params_[0] << ':' << params_[1];
      break;
    case Family::kLogNormal:
      os << "log-normal:" << params_[0] << ':' << params_[1];
      break;
  }
  return os.str();
}

double ci_likelihood(std::span<const Label> answers, Label truth, std::span<const double> x,
                     int k) {
  if (answers.size() != x.size()) throw DimensionError("answers and accuracies differ in length");
  double p = 1.0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    p *= answers[i] == truth ? x[i] : (1.0 - x[i]) / (k - 1);
  }
  return p;
}

namespace {

// log prod_i P(A_i = a_i | truth, alpha)
double log_likelihood_at(std::span<const Label> answers, Label truth,
                         std::span<const double> abilities, double alpha, int k) {
  double acc = 0.0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const double z = alpha * abilities[i];
    acc += (answers[i] == truth ? z : 0.0) - log_denominator(z, k);
  }
  return acc;
}

double log_mixture_likelihood(std::span<const Label> answers, Label truth,
                              std::span<const double> abilities, const DifficultyMixture& mix,
                              int k) {
  std::vector<double> terms;
  terms.reserve(mix.support().size());
  for (const auto& atom : mix.support()) {
    if (atom.weight <= 0.0) continue;
    terms.push_back(std::log(atom.weight) +
                    log_likelihood_at(answers, truth, abilities, atom.alpha, k));
  }
  return log_sum_exp(terms);
}

}  // namespace

double mixture_likelihood(std::span<const Label> answers, Label truth,
                          std::span<const double> abilities, const DifficultyMixture& mix,
                          int k) {
  if (answers.size() != abilities.size()) {
    throw DimensionError("answers and abilities differ in length");
  }
  check_abilities(abilities);
  return std::exp(log_mixture_likelihood(answers, truth, abilities, mix, k));
}

std::vector<double> bayes_posterior(std::span<const Label> answers, std::span<const double> x,
                                    const LabelSpace& space) {
  check_accuracies(x);
  const int k = space.size();
  std::vector<double> post(static_cast<std::size_t>(k));
  double total = 0.0;
  for (Label s = 0; s < k; ++s) {
    post[static_cast<std::size_t>(s)] = ci_likelihood(answers, s, x, k);
    total += post[static_cast<std::size_t>(s)];
  }
  if (total <= 0.0) {
    // Impossible answer vector under the model; no label is favoured.
    std::fill(post.begin(), post.end(), 1.0 / k);
    return post;
  }
  for (double& p : post) p /= total;
  return post;
}

std::vector<double> mixture_posterior(std::span<const Label> answers,
                                      std::span<const double> abilities,
                                      const DifficultyMixture& mix, const LabelSpace& space) {
  if (answers.size() != abilities.size()) {
    throw DimensionError("answers and abilities differ in length");
  }
  check_abilities(abilities);
  const int k = space.size();
  std::vector<double> logs(static_cast<std::size_t>(k));
  for (Label s = 0; s < k; ++s) {
    logs[static_cast<std::size_t>(s)] = log_mixture_likelihood(answers, s, abilities, mix, k);
  }
  const double norm = log_sum_exp(logs);
  std::vector<double> post(logs.size());
  for (std::size_t s = 0; s < logs.size(); ++s) post[s] = std::exp(logs[s] - norm);
  return post;
}

SecondOrderMatrix mixture_second_order(std::span<const double> abilities,
                                       const DifficultyMixture& mix, const LabelSpace& space) {
  check_abilities(abilities);
  const int n = static_cast<int>(abilities.size());
  const int k = space.size();
  std::vector<double> same(static_cast<std::size_t>(n * n), 0.0);
  std::vector<double> cross(static_cast<std::size_t>(n * n), 0.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (const auto& atom : mix.support()) {
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = sigma_k(atom.alpha * abilities[static_cast<std::size_t>(i)], k);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const auto idx = static_cast<std::size_t>(i * n + j);
        same[idx] += atom.weight * model_same_label(x[static_cast<std::size_t>(i)],
                                                    x[static_cast<std::size_t>(j)], k);
        cross[idx] += atom.weight * model_cross_label(x[static_cast<std::size_t>(i)],
                                                      x[static_cast<std::size_t>(j)], k);
      }
    }
  }
  std::vector<double> probs(static_cast<std::size_t>(n * n * k * k));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto idx = static_cast<std::size_t>(i * n + j);
      for (int kk = 0; kk < k; ++kk) {
        for (int l = 0; l < k; ++l) {
          double p;
          if (i == j) p = kk == l ? 1.0 : 0.0;
          else p = kk == l ? same[idx] : cross[idx];
          probs[static_cast<std::size_t>(((i * n + j) * k + kk) * k + l)] = p;
        }
      }
    }
  }
  return SecondOrderMatrix(n, k, std::move(probs), {},
                           SecondOrderProvenance{.source = SecondOrderSource::kMixture});
}

double exact_expected_advantage(Rule rule, std::span<const double> x, const LabelSpace& space,
                                std::uint64_t budget, Label truth) {
  check_accuracies(x);
  const int k = space.size();
  if (truth < 0 || truth >= k) throw DomainError("truth label out of range");
  const auto so = exact_second_order(x, space);
  double expected = 0.0;
  for_each_answer_vector(static_cast<int>(x.size()), k, budget, [&](std::span<const Label> a) {
    const double p = ci_likelihood(a, truth, x, k);
    if (p == 0.0) return;
    expected += p * advantage(rule, a, space, &so).values[static_cast<std::size_t>(truth)];
  });
  return expected;
}

double exact_expected_advantage_mixture(Rule rule, std::span<const double> abilities,
                                        const DifficultyMixture& mix, const LabelSpace& space,
                                        std::uint64_t budget) {
  check_abilities(abilities);
  const int k = space.size();
  const auto so = mixture_second_order(abilities, mix, space);
  double expected = 0.0;
  for_each_answer_vector(static_cast<int>(abilities.size()), k, budget,
                         [&](std::span<const Label> a) {
                           const double p = mixture_likelihood(a, 0, abilities, mix, k);
                           if (p == 0.0) return;
                           expected += p * advantage(rule, a, space, &so).values[0];
                         });
  return expected;
}

namespace {

double share_if_chosen(std::span<const Label> best, Label truth) {
  if (std::find(best.begin(), best.end(), truth) == best.end()) return 0.0;
  return 1.0 / static_cast<double>(best.size());
}

}  // namespace

double exact_expected_accuracy(Rule rule, std::span<const double> x, const LabelSpace& space,
                               std::uint64_t budget) {
  check_accuracies(x);
  const int k = space.size();
  const auto so = exact_second_order(x, space);
  double acc = 0.0;
  for_each_answer_vector(static_cast<int>(x.size()), k, budget, [&](std::span<const Label> a) {
    const double p = ci_likelihood(a, 0, x, k);
    if (p == 0.0) return;
    const auto adv = advantage(rule, a, space, &so);
    acc += p * share_if_chosen(argmax_set(adv.values, kAdvantageTieTolerance), 0);
  });
  return acc;
}

double exact_expected_accuracy_weighted(std::span<const double> weights,
                                        std::span<const double> x, const LabelSpace& space,
                                        std::uint64_t budget) {
  check_accuracies(x);
  if (weights.size() != x.size()) throw DimensionError("weights and accuracies differ in length");
  const int k = space.size();
  const double tol = weighted_tie_tolerance(weights);
  double acc = 0.0;
  for_each_answer_vector(static_cast<int>(x.size()), k, budget, [&](std::span<const Label> a) {
    const double p = ci_likelihood(a, 0, x, k);
    if (p == 0.0) return;
    acc += p * share_if_chosen(argmax_set(weighted_votes(a, weights, k), tol), 0);
  });
  return acc;
}

double exact_bayes_accuracy(std::span<const double> x, const LabelSpace& space,
                            std::uint64_t budget) {
  check_accuracies(x);
  const int k = space.size();
  double acc = 0.0;
  for_each_answer_vector(static_cast<int>(x.size()), k, budget, [&](std::span<const Label> a) {
    double best = 0.0;
    for (Label s = 0; s < k; ++s) best = std::max(best, ci_likelihood(a, s, x, k));
    acc += best / k;
  });
  return acc;
}

AdvantageGaps closed_form_gaps(std::span<const double> x, const LabelSpace& space) {
  check_accuracies(x);
  const int n = static_cast<int>(x.size());
  if (n < 2) throw InputError("advantage gaps need at least two agents");
  const double k = space.size();
  double numerator = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double ui = k * x[static_cast<std::size_t>(i)] - 1.0;
      const double uj = k * x[static_cast<std::size_t>(j)] - 1.0;
      numerator += ui * uj * uj;
    }
  }
  const double base = (n - 1) * k;
  return AdvantageGaps{.isp_minus_mv = numerator / (base * std::pow(k - 1.0, 3)),
                       .mv_minus_sp = numerator / (base * (k - 1.0) * (k - 1.0))};
}

}  // namespace infoagg
