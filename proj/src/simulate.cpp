#include "infoagg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "infoagg/aggregate.hpp"
#include "infoagg/errors.hpp"
#include "infoagg/rng.hpp"
#include "infoagg/secondorder.hpp"

namespace infoagg {

namespace {

std::vector<std::string> numbered_agents(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(std::to_string(i + 1));
  return names;
}

// Agent answer given the truth: correct with probability p, otherwise one of
// the other K-1 labels uniformly.
Label draw_answer(SplitMix64& rng, Label truth, double p, int k) {
  if (bernoulli(rng, p)) return truth;
  auto wrong = static_cast<Label>(uniform_index(rng, static_cast<std::uint64_t>(k - 1)));
  return wrong >= truth ? wrong + 1 : wrong;
}

void check_common(int k, int m, std::size_t n) {
  if (k < 2) throw DomainError("K must be at least 2");
  if (m < 1) throw InputError("question count must be at least 1");
  if (n == 0) throw InputError("no agents");
}

}  // namespace

void validate(const CiSimSpec& spec) {
  check_common(spec.k, spec.m, spec.accuracies.size());
  const double floor = 1.0 / spec.k;
  for (double x : spec.accuracies) {
    if (!(x >= floor - 1e-12 && x <= 1.0)) {
      throw DomainError("accuracy " + std::to_string(x) + " outside [1/K, 1]");
    }
  }
}

void validate(const DifficultySimSpec& spec) {
  check_common(spec.k, spec.m, spec.abilities.size());
  for (double b : spec.abilities) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("abilities must be finite and >= 0");
  }
}

PredictionMatrix simulate_ci(const CiSimSpec& spec, unsigned threads) {
  validate(spec);
  const std::size_t n = spec.accuracies.size();
  const auto m = static_cast<std::size_t>(spec.m);
  std::vector<Label> answers(m * n);
  std::vector<Label> truth(m);
  parallel_for(m, threads, [&](std::size_t q) {
    SplitMix64 rng(spec.seed, q, StreamTag::kSimulate);
    truth[q] = static_cast<Label>(uniform_index(rng, static_cast<std::uint64_t>(spec.k)));
    for (std::size_t i = 0; i < n; ++i) {
      answers[q * n + i] = draw_answer(rng, truth[q], spec.accuracies[i], spec.k);
    }
  });
  return PredictionMatrix(LabelSpace::with_size(spec.k), numbered_agents(n), std::move(answers),
                          std::move(truth));
}

DifficultySample simulate_difficulty_traced(const DifficultySimSpec& spec, unsigned threads) {
  validate(spec);
  const std::size_t n = spec.abilities.size();
  const auto m = static_cast<std::size_t>(spec.m);
  std::vector<Label> answers(m * n);
  std::vector<Label> truth(m);
  std::vector<double> alphas(m);
  parallel_for(m, threads, [&](std::size_t q) {
    SplitMix64 difficulty_rng(spec.seed, q, StreamTag::kDifficulty);
    alphas[q] = spec.mixture.sample(difficulty_rng);
    SplitMix64 rng(spec.seed, q, StreamTag::kSimulate);
    truth[q] = static_cast<Label>(uniform_index(rng, static_cast<std::uint64_t>(spec.k)));
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigma_k(alphas[q] * spec.abilities[i], spec.k);
      answers[q * n + i] = draw_answer(rng, truth[q], p, spec.k);
    }
  });
  return DifficultySample{
      .matrix = PredictionMatrix(LabelSpace::with_size(spec.k), numbered_agents(n),
                                 std::move(answers), std::move(truth)),
      .alphas = std::move(alphas)};
}

PredictionMatrix simulate_difficulty(const DifficultySimSpec& spec, unsigned threads) {
  return simulate_difficulty_traced(spec, threads).matrix;
}

namespace {

double fraction_correct(std::span<const Label> labels, std::span<const Label> truth) {
  std::size_t hits = 0;
  for (std::size_t q = 0; q < truth.size(); ++q) hits += labels[q] == truth[q];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

Table2Row score_k(std::uint64_t seed, int k, const Table2Options& opts) {
  const CiSimSpec spec{.accuracies = opts.accuracies,
                       .k = k,
                       .m = opts.m,
                       .seed = derive_seed(seed, static_cast<std::uint64_t>(k),
                                           StreamTag::kSimulate)};
  const PredictionMatrix pm = simulate_ci(spec, opts.threads);
  const auto& truth = *pm.truth();
  const LabelSpace& space = pm.space();
  const auto so = empirical_second_order(pm);
  const auto weights = ow_weights(opts.accuracies, k);
  const TiePolicy tie = TiePolicy::uniform_random(
      derive_seed(seed, static_cast<std::uint64_t>(k), StreamTag::kTieBreak));

  const auto m = static_cast<std::size_t>(pm.num_questions());
  std::vector<Label> mv(m), sp(m), isp(m), opt(m);
  parallel_for(m, opts.threads, [&](std::size_t q) {
    const auto row = pm.row(static_cast<int>(q));
    mv[q] = aggregate_mv(row, space, tie, q);
    sp[q] = aggregate_sp(row, space, so, tie, q).label;
    isp[q] = aggregate_isp(row, space, so, tie, q).label;
    opt[q] = aggregate_weighted(row, weights, space, tie, q);
  });

  const auto best = static_cast<int>(
      std::max_element(opts.accuracies.begin(), opts.accuracies.end()) - opts.accuracies.begin());
  std::size_t best_hits = 0;
  for (std::size_t q = 0; q < m; ++q) best_hits += pm.answer(static_cast<int>(q), best) == truth[q];

  return Table2Row{.k = k,
                   .mv = fraction_correct(mv, truth),
                   .sp = fraction_correct(sp, truth),
                   .single_best = static_cast<double>(best_hits) / static_cast<double>(m),
                   .isp = fraction_correct(isp, truth),
                   .opt = fraction_correct(opt, truth)};
}

}  // namespace

std::vector<Table2Row> run_table2(std::uint64_t seed, const Table2Options& opts) {
  std::vector<Table2Row> rows;
  for (int k : opts.ks) rows.push_back(score_k(seed, k, opts));
  return rows;
}

std::vector<GapPoint> run_gap_curve(std::uint64_t seed, int replications,
                                    const Table2Options& opts) {
  if (replications < 1) throw InputError("need at least one replication");
  const std::size_t nk = opts.ks.size();
  std::vector<std::vector<double>> isp_mv(nk), mv_sp(nk);
  for (int r = 0; r < replications; ++r) {
    const auto rows =
        run_table2(derive_seed(seed, static_cast<std::uint64_t>(r), StreamTag::kReplication), opts);
    for (std::size_t c = 0; c < nk; ++c) {
      isp_mv[c].push_back(rows[c].isp - rows[c].mv);
      mv_sp[c].push_back(rows[c].mv - rows[c].sp);
    }
  }
  auto mean_se = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return std::pair{mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(v.size() - 1);
    return std::pair{mean, std::sqrt(var / static_cast<double>(v.size()))};
  };
  std::vector<GapPoint> out;
  for (std::size_t c = 0; c < nk; ++c) {
    const auto [a, sa] = mean_se(isp_mv[c]);
    const auto [b, sb] = mean_se(mv_sp[c]);
    out.push_back(GapPoint{.k = opts.ks[c],
                           .gap_isp_mv = a,
                           .gap_mv_sp = b,
                           .stderr_isp_mv = sa,
                           .stderr_mv_sp = sb});
  }
  return out;
}

}  // namespace infoagg
