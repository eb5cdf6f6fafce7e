#pragma once

// Test-only reference implementation. Everything here is computed from the
// generative model by direct enumeration over the truth, the difficulty atom
// and the full answer vector. It shares no code with the library beyond the
// plain std types, so agreement between the two is a real cross-check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace brute {

struct Atom {
  double alpha;
  double weight;
};

// Either the shuffled CI model with accuracies x (one atom, accuracies used
// as given) or the difficulty model with abilities and a discrete mixture.
struct Model {
  int n = 0;
  int k = 2;
  std::vector<double> x;     // CI accuracies
  std::vector<double> beta;  // difficulty abilities
  std::vector<Atom> atoms;   // empty for the CI model

  static Model ci(std::vector<double> x, int k) {
    Model m;
    m.n = static_cast<int>(x.size());
    m.k = k;
    m.x = std::move(x);
    return m;
  }
  static Model difficulty(std::vector<double> beta, std::vector<Atom> atoms, int k) {
    Model m;
    m.n = static_cast<int>(beta.size());
    m.k = k;
    m.beta = std::move(beta);
    m.atoms = std::move(atoms);
    return m;
  }

  // Accuracy of agent i at atom index t.
  double accuracy(int i, std::size_t t) const {
    if (atoms.empty()) return x[static_cast<std::size_t>(i)];
    const double e = std::exp(atoms[t].alpha * beta[static_cast<std::size_t>(i)]);
    return e / (k - 1 + e);
  }
  std::size_t atom_count() const { return atoms.empty() ? 1 : atoms.size(); }
  double atom_weight(std::size_t t) const { return atoms.empty() ? 1.0 : atoms[t].weight; }

  // P(A_i = a | S* = s, atom t)
  double answer_prob(int i, int a, int s, std::size_t t) const {
    const double p = accuracy(i, t);
    return a == s ? p : (1.0 - p) / (k - 1);
  }
};

inline void for_each_vector(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  while (true) {
    fn(a);
    int i = n - 1;
    while (i >= 0 && ++a[static_cast<std::size_t>(i)] == k) a[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) return;
  }
}

// P(A = a | S* = s)
inline double likelihood(const Model& m, const std::vector<int>& a, int s) {
  double total = 0.0;
  for (std::size_t t = 0; t < m.atom_count(); ++t) {
    double p = m.atom_weight(t);
    for (int i = 0; i < m.n; ++i) p *= m.answer_prob(i, a[static_cast<std::size_t>(i)], s, t);
    total += p;
  }
  return total;
}

// P(A_i = k | A_j = l) from the joint with a uniform truth.
inline double conditional(const Model& m, int i, int j, int k, int l) {
  if (i == j) return k == l ? 1.0 : 0.0;
  double joint = 0.0, marginal = 0.0;
  for (int s = 0; s < m.k; ++s) {
    for (std::size_t t = 0; t < m.atom_count(); ++t) {
      const double pj = m.atom_weight(t) * m.answer_prob(j, l, s, t) / m.k;
      joint += pj * m.answer_prob(i, k, s, t);
      marginal += pj;
    }
  }
  return joint / marginal;
}

// Advantage of label s under rule 0 = MV, 1 = SP, 2 = ISP.
inline std::vector<double> advantage(const Model& m, const std::vector<int>& a, int rule) {
  std::vector<double> adv(static_cast<std::size_t>(m.k), 0.0);
  for (int s = 0; s < m.k; ++s) {
    double votes = 0.0;
    for (int v : a) votes += v == s;
    double predicted = 0.0;
    if (rule == 0) {
      predicted = static_cast<double>(m.n) / m.k;
    } else {
      for (int i = 0; i < m.n; ++i) {
        double score = 0.0;
        for (int j = 0; j < m.n; ++j) {
          if (j == i) continue;
          const int aj = a[static_cast<std::size_t>(j)];
          if (rule == 1) {
            score += conditional(m, i, j, s, aj);
          } else {
            double other = 0.0;
            for (int l = 0; l < m.k; ++l) {
              if (l != aj) other += conditional(m, i, j, s, l);
            }
            score += other / (m.k - 1);
          }
        }
        predicted += score / (m.n - 1);
      }
    }
    adv[static_cast<std::size_t>(s)] = votes - predicted;
  }
  return adv;
}

// E[Adv_rule(S*)] averaged over a uniform truth.
inline double expected_advantage(const Model& m, int rule) {
  double total = 0.0;
  for (int s = 0; s < m.k; ++s) {
    for_each_vector(m.n, m.k, [&](const std::vector<int>& a) {
      const double p = likelihood(m, a, s);
      if (p > 0.0) total += p / m.k * advantage(m, a, rule)[static_cast<std::size_t>(s)];
    });
  }
  return total;
}

inline std::vector<int> near_argmax(const std::vector<double>& v, double tol) {
  const double best = *std::max_element(v.begin(), v.end());
  std::vector<int> out;
  for (std::size_t s = 0; s < v.size(); ++s) {
    if (v[s] >= best - tol) out.push_back(static_cast<int>(s));
  }
  return out;
}

// Probability of answering correctly when decide(a) returns the tied set and
// ties are broken uniformly.
inline double expected_accuracy(const Model& m,
                                const std::function<std::vector<int>(const std::vector<int>&)>& decide) {
  double total = 0.0;
  for (int s = 0; s < m.k; ++s) {
    for_each_vector(m.n, m.k, [&](const std::vector<int>& a) {
      const double p = likelihood(m, a, s);
      if (p == 0.0) return;
      const auto best = decide(a);
      if (std::find(best.begin(), best.end(), s) != best.end()) {
        total += p / m.k / static_cast<double>(best.size());
      }
    });
  }
  return total;
}

inline double rule_accuracy(const Model& m, int rule) {
  return expected_accuracy(m, [&](const std::vector<int>& a) {
    return near_argmax(advantage(m, a, rule), 1e-9);
  });
}

inline std::vector<double> posterior(const Model& m, const std::vector<int>& a) {
  std::vector<double> post(static_cast<std::size_t>(m.k));
  double z = 0.0;
  for (int s = 0; s < m.k; ++s) z += post[static_cast<std::size_t>(s)] = likelihood(m, a, s);
  for (double& p : post) p /= z;
  return post;
}

inline double bayes_accuracy(const Model& m) {
  double total = 0.0;
  for_each_vector(m.n, m.k, [&](const std::vector<int>& a) {
    double best = 0.0;
    for (int s = 0; s < m.k; ++s) best = std::max(best, likelihood(m, a, s) / m.k);
    total += best;
  });
  return total;
}

}  // namespace brute
