#include "infoagg/estimate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "infoagg/errors.hpp"
#include "infoagg/rng.hpp"

namespace infoagg {

namespace {

// Partial derivatives of the model forms with respect to their first
// argument. Both forms are symmetric in (a, b).
double d_same(double b, int k) { return b - (1.0 - b) / (k - 1); }
double d_cross(double b, int k) {
  const double km1 = k - 1;
  return (1.0 - 2.0 * b) / km1 - (k - 2) * (1.0 - b) / (km1 * km1);
}

void check_point(std::span<const double> x, const SecondOrderMatrix& so_hat) {
  if (static_cast<int>(x.size()) != so_hat.num_agents()) {
    throw DimensionError("accuracy vector length differs from the agent count");
  }
}

// Summed residuals of the same-label and cross-label cells of pair (i, j).
struct PairResidual {
  double same = 0.0;
  double cross = 0.0;
  double squared = 0.0;
};

PairResidual pair_residual(std::span<const double> x, const SecondOrderMatrix& so, int i,
                           int j) {
  const int k = so.num_labels();
  const double ps = model_same_label(x[static_cast<std::size_t>(i)],
                                     x[static_cast<std::size_t>(j)], k);
  const double pc = model_cross_label(x[static_cast<std::size_t>(i)],
                                      x[static_cast<std::size_t>(j)], k);
  PairResidual r;
  for (Label kk = 0; kk < k; ++kk) {
    for (Label l = 0; l < k; ++l) {
      if (kk == l) {
        const double d = ps - so(i, j, kk, l);
        r.same += d;
        r.squared += d * d;
      } else {
        const double d = pc - so(i, j, kk, l);
        r.cross += d;
        r.squared += d * d;
      }
    }
  }
  return r;
}

struct Box {
  double lo;
  double hi;
  double project(double v) const { return std::clamp(v, lo, hi); }
};

Box make_box(int k, double epsilon) {
  const Box box{1.0 / k + epsilon, 1.0 - epsilon};
  if (!(box.lo < box.hi)) throw DomainError("accuracy box is empty");
  return box;
}

double projected_gradient_norm(std::span<const double> x, std::span<const double> g,
                               const Box& box) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - box.project(x[i] - g[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

struct StartResult {
  std::vector<double> x;
  double loss;
  bool converged;
  int iterations;
};

StartResult descend(std::vector<double> x, const SecondOrderMatrix& so, const ErmConfig& cfg,
                    const Box& box) {
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-20;
  constexpr double kMaxStep = 1e6;
  double f = erm_loss(x, so);
  double step = cfg.step;
  std::vector<double> trial(x.size());
  for (int it = 0; it < cfg.max_iters; ++it) {
    const auto g = erm_gradient(x, so);
    if (projected_gradient_norm(x, g, box) < cfg.tol) {
      return {std::move(x), f, true, it};
    }
    double t = step;
    bool accepted = false;
    while (t >= kMinStep) {
      double moved = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        trial[i] = box.project(x[i] - t * g[i]);
        moved += (trial[i] - x[i]) * (trial[i] - x[i]);
      }
      const double ft = erm_loss(trial, so);
      if (ft <= f - kArmijo / t * moved) {
        accepted = true;
        x.swap(trial);
        f = ft;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No decrease is possible at machine precision: a stationary point.
      const auto gg = erm_gradient(x, so);
      return {std::move(x), f, projected_gradient_norm(x, gg, box) < std::sqrt(cfg.tol), it};
    }
    step = std::min(2.0 * t, kMaxStep);
  }
  const auto g = erm_gradient(x, so);
  const bool ok = projected_gradient_norm(x, g, box) < cfg.tol;
  return {std::move(x), f, ok, cfg.max_iters};
}

}  // namespace

double erm_loss(std::span<const double> x, const SecondOrderMatrix& so_hat) {
  check_point(x, so_hat);
  const int n = so_hat.num_agents();
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) loss += pair_residual(x, so_hat, i, j).squared;
    }
  }
  return loss;
}

std::vector<double> erm_gradient(std::span<const double> x, const SecondOrderMatrix& so_hat) {
  check_point(x, so_hat);
  const int n = so_hat.num_agents();
  const int k = so_hat.num_labels();
  std::vector<double> grad(x.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto r = pair_residual(x, so_hat, i, j);
      const double xi = x[static_cast<std::size_t>(i)];
      const double xj = x[static_cast<std::size_t>(j)];
      // Cell (i, j) depends on x_i through the first argument and on x_j
      // through the second; symmetry lets both use d_*(other argument).
      grad[static_cast<std::size_t>(i)] += 2.0 * (r.same * d_same(xj, k) + r.cross * d_cross(xj, k));
      grad[static_cast<std::size_t>(j)] += 2.0 * (r.same * d_same(xi, k) + r.cross * d_cross(xi, k));
    }
  }
  return grad;
}

FitResult fit_ow_l(const SecondOrderMatrix& so_hat, const ErmConfig& cfg) {
  if (cfg.starts < 1) throw InputError("ERM needs at least one start");
  if (cfg.max_iters < 0 || !(cfg.step > 0.0) || !(cfg.tol > 0.0)) {
    throw InputError("invalid ERM configuration");
  }
  const int n = so_hat.num_agents();
  const Box box = make_box(so_hat.num_labels(), cfg.epsilon);
  std::vector<StartResult> results;
  results.reserve(static_cast<std::size_t>(cfg.starts));
  for (int s = 0; s < cfg.starts; ++s) {
    SplitMix64 rng(cfg.seed, static_cast<std::uint64_t>(s), StreamTag::kRestart);
    std::vector<double> x0(static_cast<std::size_t>(n));
    for (double& v : x0) v = box.lo + (box.hi - box.lo) * uniform01(rng);
    results.push_back(descend(std::move(x0), so_hat, cfg, box));
  }
  const auto best = std::min_element(results.begin(), results.end(),
                                     [](const auto& a, const auto& b) { return a.loss < b.loss; });
  FitResult out;
  out.accuracies = best->x;
  out.loss = best->loss;
  out.converged = best->converged;
  out.iterations = best->iterations;
  out.restarts_agreeing = static_cast<int>(std::count_if(
      results.begin(), results.end(),
      [&](const auto& r) { return std::abs(r.loss - best->loss) <= 1e-4; }));
  return out;
}

FitResult fit_ow_l(const PredictionMatrix& pm, const ErmConfig& cfg) {
  if (pm.num_questions() < 1) throw InputError("OW-L needs at least one question");
  return fit_ow_l(empirical_second_order(pm), cfg);
}

FitResult fit_ow_i(const PredictionMatrix& pm, const SecondOrderMatrix& so,
                   const TiePolicy& tie, double epsilon) {
  const int m = pm.num_questions();
  if (m < 1) throw InputError("OW-I needs at least one question");
  const int n = pm.num_agents();
  std::vector<long> agree(static_cast<std::size_t>(n), 0);
  for (int q = 0; q < m; ++q) {
    const auto row = pm.row(q);
    const Label pseudo =
        aggregate_isp(row, pm.space(), so, tie, static_cast<std::uint64_t>(q)).label;
    for (int i = 0; i < n; ++i) {
      if (row[static_cast<std::size_t>(i)] == pseudo) ++agree[static_cast<std::size_t>(i)];
    }
  }
  FitResult out;
  out.converged = true;
  out.restarts_agreeing = 1;
  for (long a : agree) {
    out.accuracies.push_back(
        clamp_accuracy(static_cast<double>(a) / m, pm.num_labels(), epsilon));
  }
  out.loss = erm_loss(out.accuracies, so);
  return out;
}

Method Method::parse(std::string_view name, std::vector<double> params) {
  std::string key;
  for (char c : name) {
    key.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  Method m;
  m.params = std::move(params);
  if (key == "mv") m.kind = Kind::kMv;
  else if (key == "sp") m.kind = Kind::kSp;
  else if (key == "isp") m.kind = Kind::kIsp;
  else if (key == "ow-l") m.kind = Kind::kOwL;
  else if (key == "ow-i") m.kind = Kind::kOwI;
  else if (key == "ow-oracle") m.kind = Kind::kOwOracle;
  else if (key == "eow") m.kind = Kind::kEow;
  else throw InputError("unknown method '" + std::string(name) + "'");
  return m;
}

std::string Method::name() const {
  switch (kind) {
    case Kind::kMv: return "mv";
    case Kind::kSp: return "sp";
    case Kind::kIsp: return "isp";
    case Kind::kOwL: return "ow-l";
    case Kind::kOwI: return "ow-i";
    case Kind::kOwOracle: return "ow-oracle";
    case Kind::kEow: return "eow";
  }
  return "?";
}

PipelineResult pipeline_aggregate(const PredictionMatrix& pm, const Method& method,
                                  const PipelineConfig& cfg) {
  PredictionMatrix work = pm.without_truth();
  std::optional<ShuffleMap> map;
  if (cfg.shuffle_seed) {
    auto shuffled = shuffle_apply(work, *cfg.shuffle_seed);
    work = std::move(shuffled.matrix);
    map = std::move(shuffled.map);
  }
  const int m = work.num_questions();
  const int n = work.num_agents();
  const int k = work.num_labels();
  const LabelSpace& space = work.space();

  PipelineResult result;
  result.labels.assign(static_cast<std::size_t>(m), 0);
  auto each_question = [&](auto&& decide) {
    parallel_for(static_cast<std::size_t>(m), cfg.threads, [&](std::size_t q) {
      result.labels[q] = decide(work.row(static_cast<int>(q)), static_cast<std::uint64_t>(q));
    });
  };

  using Kind = Method::Kind;
  switch (method.kind) {
    case Kind::kMv:
      each_question([&](auto row, std::uint64_t q) { return aggregate_mv(row, space, cfg.tie, q); });
      break;
    case Kind::kSp:
    case Kind::kIsp: {
      if (m < 1) throw InputError("second-order methods need at least one question");
      const auto so = empirical_second_order(work, cfg.smoothing);
      result.imputed_cells = so.imputed_count();
      const bool isp = method.kind == Kind::kIsp;
      each_question([&](auto row, std::uint64_t q) {
        return isp ? aggregate_isp(row, space, so, cfg.tie, q).label
                   : aggregate_sp(row, space, so, cfg.tie, q).label;
      });
      break;
    }
    case Kind::kOwOracle:
    case Kind::kEow:
    case Kind::kOwL:
    case Kind::kOwI: {
      if (method.kind == Kind::kOwOracle || method.kind == Kind::kEow) {
        if (static_cast<int>(method.params.size()) != n) {
          throw InputError(method.name() + " needs one parameter per agent (" +
                           std::to_string(n) + "), got " +
                           std::to_string(method.params.size()));
        }
        result.weights = method.kind == Kind::kEow
                             ? method.params
                             : ow_weights(method.params, k, cfg.erm.epsilon);
      } else if (method.kind == Kind::kOwL) {
        result.fit = fit_ow_l(empirical_second_order(work, cfg.smoothing), cfg.erm);
        result.weights = ow_weights(result.fit->accuracies, k, cfg.erm.epsilon);
      } else {
        const auto so = empirical_second_order(work, cfg.smoothing);
        result.imputed_cells = so.imputed_count();
        result.fit = fit_ow_i(work, so, TiePolicy::lowest_index(), cfg.erm.epsilon);
        result.weights = ow_weights(result.fit->accuracies, k, cfg.erm.epsilon);
      }
      each_question([&](auto row, std::uint64_t q) {
        return aggregate_weighted(row, result.weights, space, cfg.tie, q);
      });
      break;
    }
  }
  if (map) result.labels = shuffle_invert(result.labels, *map);
  return result;
}

}  // namespace infoagg
