#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "infoagg/errors.hpp"
#include "infoagg/estimate.hpp"
#include "infoagg/rng.hpp"
#include "infoagg/simulate.hpp"

using namespace infoagg;

TEST_CASE("loss vanishes at the generating accuracies") {
  const std::vector<double> x{0.6, 0.7, 0.8, 0.9};
  const auto so = exact_second_order(x, LabelSpace::with_size(3));
  CHECK(erm_loss(x, so) < 1e-28);
  const std::vector<double> off{0.65, 0.7, 0.8, 0.9};
  CHECK(erm_loss(off, so) > 0.0);
  const std::vector<double> wrong_size{0.6};
  CHECK_THROWS_AS(erm_loss(wrong_size, so), DimensionError);
}

TEST_CASE("analytic gradient matches central differences") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + static_cast<int>(uniform_index(rng, 3));
    std::vector<double> truth, x;
    for (int i = 0; i < 4; ++i) {
      truth.push_back(1.0 / k + (1 - 1.0 / k) * uniform01(rng));
      x.push_back(1.0 / k + 0.02 + (0.96 - 1.0 / k) * uniform01(rng));
    }
    const auto so = exact_second_order(truth, LabelSpace::with_size(k));
    const auto g = erm_gradient(x, so);
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto up = x, down = x;
      up[i] += 1e-6;
      down[i] -= 1e-6;
      const double fd = (erm_loss(up, so) - erm_loss(down, so)) / 2e-6;
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
    }
  }
}

TEST_CASE("OW-L recovers accuracies from an exact matrix") {
  for (int k : {2, 4}) {
    const std::vector<double> x{0.6, 0.7, 0.8, 0.9};
    const auto fit = fit_ow_l(exact_second_order(x, LabelSpace::with_size(k)), ErmConfig{});
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fit.accuracies[i] - x[i]) < 1e-6);
    CHECK(fit.loss < 1e-12);
    CHECK(fit.restarts_agreeing >= 1);
  }
}

TEST_CASE("OW-L and OW-I on simulated data") {
  const std::vector<double> x{0.6, 0.7, 0.8, 0.9};
  const auto pm = simulate_ci(CiSimSpec{.accuracies = x, .k = 3, .m = 20'000, .seed = 4});
  const auto fit = fit_ow_l(pm.without_truth(), ErmConfig{});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fit.accuracies[i] - x[i]) < 0.03);
  const auto so = empirical_second_order(pm);
  const auto owi = fit_ow_i(pm, so);
  // Agreement with pseudo-labels preserves the ranking of the agents.
  for (std::size_t i = 1; i < x.size(); ++i) CHECK(owi.accuracies[i] > owi.accuracies[i - 1]);
  for (double a : owi.accuracies) {
    CHECK(a >= 1.0 / 3);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("ERM configuration is checked") {
  const auto so = exact_second_order(std::vector<double>{0.6, 0.7}, LabelSpace::with_size(2));
  ErmConfig cfg;
  cfg.starts = 0;
  CHECK_THROWS_AS(fit_ow_l(so, cfg), InputError);
  ErmConfig same_seed;
  CHECK(fit_ow_l(so, same_seed).accuracies == fit_ow_l(so, same_seed).accuracies);
}

TEST_CASE("method names") {
  CHECK(Method::parse("ISP").kind == Method::Kind::kIsp);
  CHECK(Method::parse("ow_l").kind == Method::Kind::kOwL);
  CHECK(Method::parse("ow-oracle").name() == "ow-oracle");
  CHECK_THROWS_AS(Method::parse("median"), InputError);
}

TEST_CASE("pipeline never reads the truth column") {
  const auto pm = simulate_ci(CiSimSpec{.accuracies = {0.6, 0.7, 0.8, 0.9}, .k = 4, .m = 2000, .seed = 2});
  std::vector<Label> corrupted(*pm.truth());
  for (auto& t : corrupted) t = (t + 1) % 4;
  const auto other = pm.with_truth(corrupted);
  PipelineConfig cfg;
  cfg.erm.starts = 2;
  for (const char* name : {"mv", "sp", "isp", "ow-l", "ow-i"}) {
    const auto method = Method::parse(name);
    CHECK(pipeline_aggregate(pm, method, cfg).labels == pipeline_aggregate(other, method, cfg).labels);
  }
  const auto oracle = Method::parse("ow-oracle", {0.6, 0.7, 0.8, 0.9});
  CHECK(pipeline_aggregate(pm, oracle, cfg).labels == pipeline_aggregate(other, oracle, cfg).labels);
}

TEST_CASE("pipeline options") {
  const auto pm = simulate_ci(CiSimSpec{.accuracies = {0.6, 0.7, 0.8, 0.9}, .k = 2, .m = 3000, .seed = 9});
  PipelineConfig cfg;
  CHECK_THROWS_AS(pipeline_aggregate(pm, Method::parse("ow-oracle"), cfg), InputError);
  CHECK_THROWS_AS(pipeline_aggregate(pm, Method::parse("eow", {1.0}), cfg), InputError);

  // Threads do not change the result.
  PipelineConfig threaded = cfg;
  threaded.threads = 3;
  const auto isp = Method::parse("isp");
  CHECK(pipeline_aggregate(pm, isp, cfg).labels == pipeline_aggregate(pm, isp, threaded).labels);

  // Shuffling maps back to the original labelling: accuracy stays in range.
  PipelineConfig shuffled = cfg;
  shuffled.shuffle_seed = 12;
  const auto labels = pipeline_aggregate(pm, isp, shuffled).labels;
  int hits = 0;
  for (int q = 0; q < pm.num_questions(); ++q) hits += labels[static_cast<std::size_t>(q)] == (*pm.truth())[static_cast<std::size_t>(q)];
  CHECK(static_cast<double>(hits) / pm.num_questions() > 0.85);

  const auto ow = pipeline_aggregate(pm, Method::parse("ow-l"), cfg);
  REQUIRE(ow.fit.has_value());
  CHECK(ow.weights.size() == 4);
}
