#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "infoagg/aggregate.hpp"
#include "infoagg/cli.hpp"
#include "infoagg/core.hpp"
#include "infoagg/errors.hpp"
#include "infoagg/oracle.hpp"
#include "infoagg/rng.hpp"
#include "infoagg/secondorder.hpp"
#include "infoagg/simulate.hpp"

namespace infoagg::cli {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CheckResult compare(std::string name, double observed, double expected, double tol) {
  const bool ok = std::abs(observed - expected) <= tol;
  return {std::move(name), ok ? CheckStatus::kPass : CheckStatus::kFail,
          "observed=" + num(observed) + " expected=" + num(expected) + " tol=" + num(tol)};
}

CheckResult verdict(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok ? CheckStatus::kPass : CheckStatus::kFail, std::move(detail)};
}

std::uint64_t vector_count(int n, int k) {
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::uint64_t>(k);
  return total;
}

// Random instance: N agents, K labels, accuracies uniform in [1/K, 1).
struct Instance {
  int n;
  int k;
  std::vector<double> x;
};

Instance random_instance(SplitMix64& rng, int n_lo, int n_hi, int k_lo, int k_hi) {
  Instance inst;
  inst.n = n_lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_hi - n_lo + 1)));
  inst.k = k_lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k_hi - k_lo + 1)));
  for (int i = 0; i < inst.n; ++i) {
    inst.x.push_back(1.0 / inst.k + (1.0 - 1.0 / inst.k) * uniform01(rng));
  }
  return inst;
}

bool subset_of_near_max(std::span<const Label> chosen, std::span<const double> scores) {
  const double best = *std::max_element(scores.begin(), scores.end());
  return std::all_of(chosen.begin(), chosen.end(), [&](Label s) {
    return scores[static_cast<std::size_t>(s)] >= best * (1.0 - 1e-9);
  });
}

// -------------------------------------------------------------- examples

void examples(const VerifyOptions& opts, std::vector<CheckResult>& out) {
  {
    const std::vector<double> x{1.0, 1.0, 0.5, 0.5};
    const auto space = LabelSpace::with_size(2);
    out.push_back(compare("examples/four-agent-mv-accuracy",
                          exact_expected_accuracy(Rule::kMajority, x, space, opts.budget), 7.0 / 8, 1e-12));
    out.push_back(compare("examples/four-agent-sp-accuracy",
                          exact_expected_accuracy(Rule::kSurprisinglyPopular, x, space, opts.budget),
                          3.0 / 4, 1e-12));
    out.push_back(compare("examples/four-agent-isp-accuracy",
                          exact_expected_accuracy(Rule::kInverseSurprisinglyPopular, x, space, opts.budget),
                          1.0, 1e-12));
    const auto so = exact_second_order(x, space);
    const std::vector<Label> split{0, 0, 1, 1};
    out.push_back(compare("examples/four-agent-split-adv-sp", advantage_sp(split, so).values[0], -1.0 / 3, 1e-12));
    out.push_back(compare("examples/four-agent-split-adv-isp", advantage_isp(split, so).values[0], 1.0 / 3, 1e-12));
  }
  {
    std::vector<double> x(4, 1.0);
    x.insert(x.end(), 5, 0.5);
    const auto space = LabelSpace::with_size(2);
    out.push_back(compare("examples/nine-agent-mv-error",
                          1.0 - exact_expected_accuracy(Rule::kMajority, x, space, opts.budget), 1.0 / 32, 1e-12));
    out.push_back(compare("examples/nine-agent-sp-error",
                          1.0 - exact_expected_accuracy(Rule::kSurprisinglyPopular, x, space, opts.budget),
                          3.0 / 16, 1e-12));
    out.push_back(compare("examples/nine-agent-isp-error",
                          1.0 - exact_expected_accuracy(Rule::kInverseSurprisinglyPopular, x, space, opts.budget),
                          0.0, 1e-12));
  }
  {
    // alpha = 0 (coin flips) with mass 0.3, alpha large enough that both
    // agents are certain with mass 0.7.
    const auto mix = DifficultyMixture::atoms({{0.0, 0.3}, {50.0, 0.7}});
    const std::vector<double> beta{1.0, 1.0};
    const std::vector<Label> both_right{0, 0}, first_right{0, 1};
    const double joint = mixture_likelihood(both_right, 0, beta, mix, 2);
    const double marginal = joint + mixture_likelihood(first_right, 0, beta, mix, 2);
    out.push_back(compare("examples/two-atom-joint", joint, 0.775, 1e-12));
    out.push_back(compare("examples/two-atom-marginal-product", marginal * marginal, 0.7225, 1e-12));
  }
}

// -------------------------------------------------------------- thm1

void optimal_weight(const VerifyOptions& opts, std::vector<CheckResult>& out) {
  SplitMix64 rng(opts.seed, 1, StreamTag::kSimulate);
  int instances = 0, skipped = 0, vectors = 0;
  bool bayes_ok = true, homog_ok = true, dominance_ok = true;
  int dominance_cases = 0;
  std::string first_failure;
  for (int d = 0; d < 30; ++d) {
    const Instance inst = random_instance(rng, 2, 4, 2, 3);
    if (vector_count(inst.n, inst.k) > opts.budget) {
      ++skipped;
      continue;
    }
    ++instances;
    const auto space = LabelSpace::with_size(inst.k);
    const auto weights = ow_weights(inst.x, inst.k);
    const double tol = weighted_tie_tolerance(weights);
    const std::vector<double> same(static_cast<std::size_t>(inst.n), inst.x[0]);
    const auto same_w = ow_weights(same, inst.k);
    for_each_answer_vector(inst.n, inst.k, opts.budget, [&](std::span<const Label> a) {
      ++vectors;
      const auto post = bayes_posterior(a, inst.x, space);
      const auto chosen = argmax_set(weighted_votes(a, weights, inst.k), tol);
      if (!subset_of_near_max(chosen, post)) {
        bayes_ok = false;
        if (first_failure.empty()) first_failure = "instance " + std::to_string(d);
      }
      std::vector<double> votes(static_cast<std::size_t>(inst.k), 0.0);
      for (Label l : a) votes[static_cast<std::size_t>(l)] += 1.0;
      if (same_w[0] > 0.0 &&
          argmax_set(weighted_votes(a, same_w, inst.k), weighted_tie_tolerance(same_w)) !=
              argmax_set(votes, 0.5)) {
        homog_ok = false;
      }
    });
    const double ow_acc = exact_expected_accuracy_weighted(weights, inst.x, space, opts.budget);
    const auto profile = AgentProfile::from_accuracies(inst.x, inst.k);
    for (int i = 0; i < inst.n; ++i) {
      if (inst.x[static_cast<std::size_t>(i)] < dominance_threshold(profile, i, space) - 1e-9) {
        ++dominance_cases;
        if (!(ow_acc > inst.x[static_cast<std::size_t>(i)])) dominance_ok = false;
      }
    }
  }
  const std::string scope = std::to_string(instances) + " instances, " + std::to_string(vectors) +
                            " answer vectors";
  if (instances == 0) {
    out.push_back({"thm1/ow-in-bayes-argmax", CheckStatus::kSkipped, "budget too small"});
    return;
  }
  out.push_back(verdict("thm1/ow-in-bayes-argmax", bayes_ok,
                        scope + (first_failure.empty() ? "" : ", first failure " + first_failure)));
  out.push_back(verdict("thm1/homogeneous-ow-equals-mv", homog_ok, scope));
  out.push_back(verdict("thm1/ow-beats-dominated-agents", dominance_ok,
                        std::to_string(dominance_cases) + " agents below the dominance threshold"));
  if (skipped > 0) {
    out.push_back({"thm1/oversized-instances", CheckStatus::kSkipped,
                   std::to_string(skipped) + " instances exceed the budget"});
  }
}

// -------------------------------------------------------------- thm2

void gaps(const VerifyOptions& opts, std::vector<CheckResult>& out) {
  SplitMix64 rng(opts.seed, 2, StreamTag::kSimulate);
  double max_err = 0.0, min_gap = INFINITY;
  int instances = 0, skipped = 0;
  for (int d = 0; d < 200; ++d) {
    const Instance inst = random_instance(rng, 2, 5, 2, 4);
    if (vector_count(inst.n, inst.k) > opts.budget) {
      ++skipped;
      continue;
    }
    ++instances;
    const auto space = LabelSpace::with_size(inst.k);
    const double mv = exact_expected_advantage(Rule::kMajority, inst.x, space, opts.budget);
    const double sp = exact_expected_advantage(Rule::kSurprisinglyPopular, inst.x, space, opts.budget);
    const double isp =
        exact_expected_advantage(Rule::kInverseSurprisinglyPopular, inst.x, space, opts.budget);
    const auto closed = closed_form_gaps(inst.x, space);
    max_err = std::max({max_err, std::abs(closed.isp_minus_mv - (isp - mv)),
                        std::abs(closed.mv_minus_sp - (mv - sp))});
    min_gap = std::min({min_gap, closed.isp_minus_mv, closed.mv_minus_sp});
  }
  if (instances == 0) {
    out.push_back({"thm2/closed-form-vs-enumeration", CheckStatus::kSkipped, "budget too small"});
    return;
  }
  out.push_back(verdict("thm2/closed-form-vs-enumeration", max_err <= 1e-10,
                        "max |diff|=" + num(max_err) + " over " + std::to_string(instances) +
                            " instances, tol=1e-10"));
  out.push_back(verdict("thm2/gaps-nonnegative", min_gap >= -1e-15, "min gap=" + num(min_gap)));
  if (skipped > 0) {
    out.push_back({"thm2/oversized-instances", CheckStatus::kSkipped,
                   std::to_string(skipped) + " instances exceed the budget"});
  }
}

// -------------------------------------------------------------- thm4 / thm5

struct MixtureInstance {
  int n;
  int k;
  std::vector<double> beta;
  DifficultyMixture mix;
};

std::vector<MixtureInstance> mixture_instances(std::uint64_t seed, int count) {
  SplitMix64 rng(seed, 4, StreamTag::kDifficulty);
  std::vector<MixtureInstance> list;
  for (int d = 0; d < count; ++d) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 3));
    const int k = 2 + static_cast<int>(uniform_index(rng, 2));
    std::vector<double> beta;
    for (int i = 0; i < n; ++i) beta.push_back(0.1 + 2.9 * uniform01(rng));
    const double w = 0.1 + 0.8 * uniform01(rng);
    const double hard = uniform01(rng);
    const double easy = 1.0 + 4.0 * uniform01(rng);
    list.push_back({n, k, std::move(beta), DifficultyMixture::atoms({{hard, w}, {easy, 1.0 - w}})});
  }
  return list;
}

void extended_weight(const VerifyOptions& opts, std::vector<CheckResult>& out) {
  int instances = 0, vectors = 0;
  bool ok = true;
  for (const auto& inst : mixture_instances(opts.seed, 50)) {
    if (vector_count(inst.n, inst.k) > opts.budget) continue;
    ++instances;
    const auto space = LabelSpace::with_size(inst.k);
    const double tol = weighted_tie_tolerance(inst.beta);
    for_each_answer_vector(inst.n, inst.k, opts.budget, [&](std::span<const Label> a) {
      ++vectors;
      const auto chosen = argmax_set(weighted_votes(a, inst.beta, inst.k), tol);
      ok &= subset_of_near_max(chosen, mixture_posterior(a, inst.beta, inst.mix, space));
    });
  }
  if (instances == 0) {
    out.push_back({"thm4/eow-in-mixture-posterior-argmax", CheckStatus::kSkipped, "budget too small"});
    return;
  }
  out.push_back(verdict("thm4/eow-in-mixture-posterior-argmax", ok,
                        std::to_string(instances) + " instances, " + std::to_string(vectors) +
                            " answer vectors"));
}

void mixture_ordering(const VerifyOptions& opts, std::vector<CheckResult>& out) {
  int instances = 0;
  double worst = INFINITY;
  for (const auto& inst : mixture_instances(opts.seed, 50)) {
    if (vector_count(inst.n, inst.k) > opts.budget) continue;
    ++instances;
    const auto space = LabelSpace::with_size(inst.k);
    const double mv = exact_expected_advantage_mixture(Rule::kMajority, inst.beta, inst.mix, space, opts.budget);
    const double sp =
        exact_expected_advantage_mixture(Rule::kSurprisinglyPopular, inst.beta, inst.mix, space, opts.budget);
    const double isp = exact_expected_advantage_mixture(Rule::kInverseSurprisinglyPopular, inst.beta,
                                                        inst.mix, space, opts.budget);
    worst = std::min({worst, isp - mv, mv - sp});
  }
  if (instances == 0) {
    out.push_back({"thm5/isp-mv-sp-ordering", CheckStatus::kSkipped, "budget too small"});
    return;
  }
  out.push_back(verdict("thm5/isp-mv-sp-ordering", worst >= -1e-12,
                        "smallest gap=" + num(worst) + " over " + std::to_string(instances) + " instances"));
}

// -------------------------------------------------------------- props

void properties(const VerifyOptions& opts, std::vector<CheckResult>& out) {
  SplitMix64 rng(opts.seed, 5, StreamTag::kSimulate);
  bool exch = true, label_sym = true, mono = true, null_info = true, zero_sum = true, bounded = true;
  for (int d = 0; d < 100; ++d) {
    const Instance inst = random_instance(rng, 2, 5, 2, 4);
    const auto space = LabelSpace::with_size(inst.k);
    const auto so = exact_second_order(inst.x, space);
    for (int i = 0; i < inst.n; ++i) {
      for (int j = 0; j < inst.n; ++j) {
        if (i == j) continue;
        for (int k = 0; k < inst.k; ++k) {
          for (int l = 0; l < inst.k; ++l) {
            exch &= std::abs(so(i, j, k, l) - so(j, i, k, l)) <= 1e-12;
          }
        }
        // Same-label probability grows with the peer's accuracy.
        const double xi = inst.x[static_cast<std::size_t>(i)];
        const double xj = inst.x[static_cast<std::size_t>(j)];
        mono &= model_same_label(xi, std::min(1.0, xj + 0.05), inst.k) >=
                model_same_label(xi, xj, inst.k) - 1e-15;
        null_info &= std::abs(model_same_label(1.0 / inst.k, xj, inst.k) - 1.0 / inst.k) <= 1e-12 &&
                     std::abs(model_cross_label(1.0 / inst.k, xj, inst.k) - 1.0 / inst.k) <= 1e-12;
      }
    }
    // Label symmetry: every diagonal entry equal, every off-diagonal equal.
    for (int i = 0; i < inst.n; ++i) {
      for (int j = 0; j < inst.n; ++j) {
        if (i == j) continue;
        for (int k = 0; k < inst.k; ++k) {
          for (int l = 0; l < inst.k; ++l) {
            const double ref = k == l ? so(i, j, 0, 0) : so(i, j, 1, 0);
            label_sym &= std::abs(so(i, j, k, l) - ref) <= 1e-12;
          }
        }
      }
    }
    std::vector<Label> a(static_cast<std::size_t>(inst.n));
    for (auto& v : a) v = static_cast<Label>(uniform_index(rng, static_cast<std::uint64_t>(inst.k)));
    for (Rule rule : {Rule::kMajority, Rule::kSurprisinglyPopular, Rule::kInverseSurprisinglyPopular}) {
      const auto adv = advantage(rule, a, space, &so);
      double total = 0.0;
      for (double v : adv.values) {
        total += v;
        bounded &= std::abs(v) <= inst.n + 1e-12;
      }
      zero_sum &= std::abs(total) <= 1e-9;
    }
  }
  out.push_back(verdict("props/exchangeability", exch, "P(A_i=k|A_j=l) = P(A_j=k|A_i=l), 100 draws"));
  out.push_back(verdict("props/label-symmetry", label_sym, "same-label and cross-label entries constant"));
  out.push_back(verdict("props/monotonicity", mono, "same-label entry non-decreasing in x_j"));
  out.push_back(verdict("props/null-information", null_info, "x_i = 1/K gives rows of 1/K"));
  out.push_back(verdict("props/advantage-zero-sum", zero_sum, "sum over labels within 1e-9"));
  out.push_back(verdict("props/advantage-bounded", bounded, "|Adv| <= N"));

  // Shuffle round trip and label-uniform truth after shuffling.
  const std::vector<double> x{0.6, 0.7, 0.8, 0.9};
  const int k = 4, m = 100'000;
  const auto fixed_truth = [&] {
    auto pm = simulate_ci(CiSimSpec{.accuracies = x, .k = k, .m = m, .seed = opts.seed});
    // Relabel every question so the truth is s1: the unshuffled setting.
    ShuffleMap to_first;
    for (Label t : *pm.truth()) {
      std::vector<Label> perm(static_cast<std::size_t>(k));
      for (Label l = 0; l < k; ++l) perm[static_cast<std::size_t>(l)] = l == t ? 0 : (l == 0 ? t : l);
      to_first.perms.push_back(perm);
    }
    return shuffle_apply(pm, to_first);
  }();
  const auto shuffled = shuffle_apply(fixed_truth, opts.seed + 1);
  out.push_back(verdict("props/shuffle-round-trip",
                        shuffle_invert(shuffled.matrix, shuffled.map) == fixed_truth,
                        "invert(apply(pm)) == pm at M=" + std::to_string(m)));

  std::vector<int> truth_counts(static_cast<std::size_t>(k), 0);
  std::vector<int> agent_hits(x.size(), 0);
  for (int q = 0; q < m; ++q) {
    const Label t = (*shuffled.matrix.truth())[static_cast<std::size_t>(q)];
    ++truth_counts[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < x.size(); ++i) agent_hits[i] += shuffled.matrix.answer(q, static_cast<int>(i)) == t;
  }
  bool uniform = true, accurate = true;
  const double se_truth = std::sqrt((1.0 / k) * (1 - 1.0 / k) / m);
  for (int c : truth_counts) uniform &= std::abs(static_cast<double>(c) / m - 1.0 / k) <= 3 * se_truth;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double se = std::sqrt(x[i] * (1 - x[i]) / m);
    accurate &= std::abs(static_cast<double>(agent_hits[i]) / m - x[i]) <= 3 * se;
  }
  out.push_back(verdict("props/shuffled-truth-uniform", uniform, "each label within 3 s.e. of 1/K"));
  out.push_back(verdict("props/shuffled-accuracy", accurate, "each agent within 3 s.e. of x_i"));
}

}  // namespace

std::vector<CheckResult> run_verify(const VerifyOptions& opts) {
  std::vector<CheckResult> out;
  const auto& s = opts.suite;
  const bool all = s == "all";
  auto guarded = [&](const char* suite, const std::function<void()>& body) {
    try {
      body();
    } catch (const ResourceError& e) {
      out.push_back({std::string(suite) + "/enumeration", CheckStatus::kSkipped, e.what()});
    }
  };
  if (all || s == "examples") guarded("examples", [&] { examples(opts, out); });
  if (all || s == "thm1") guarded("thm1", [&] { optimal_weight(opts, out); });
  if (all || s == "thm2") guarded("thm2", [&] { gaps(opts, out); });
  if (all || s == "thm4") guarded("thm4", [&] { extended_weight(opts, out); });
  if (all || s == "thm5") guarded("thm5", [&] { mixture_ordering(opts, out); });
  if (all || s == "props") guarded("props", [&] { properties(opts, out); });
  return out;
}

void print_checks(std::ostream& out, const std::vector<CheckResult>& checks) {
  int pass = 0, fail = 0, skip = 0;
  for (const auto& c : checks) {
    const char* tag = c.status == CheckStatus::kPass ? "PASS" : c.status == CheckStatus::kFail ? "FAIL" : "SKIPPED";
    (c.status == CheckStatus::kPass ? pass : c.status == CheckStatus::kFail ? fail : skip)++;
    out << tag << "  " << c.name << "  " << c.detail << "\n";
  }
  out << pass << " passed, " << fail << " failed, " << skip << " skipped\n";
}

}  // namespace infoagg::cli
