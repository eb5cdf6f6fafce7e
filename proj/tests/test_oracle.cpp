#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "infoagg/errors.hpp"
#include "infoagg/oracle.hpp"
#include "infoagg/rng.hpp"
#include "support/brute_force.hpp"

using namespace infoagg;

namespace {

const Rule kRules[] = {Rule::kMajority, Rule::kSurprisinglyPopular, Rule::kInverseSurprisinglyPopular};

std::vector<double> random_accuracies(SplitMix64& rng, int n, int k) {
  std::vector<double> x;
  for (int i = 0; i < n; ++i) x.push_back(1.0 / k + (1.0 - 1.0 / k) * uniform01(rng));
  return x;
}

}  // namespace

TEST_CASE("four-agent example") {
  const std::vector<double> x{1.0, 1.0, 0.5, 0.5};
  const auto space = LabelSpace::with_size(2);
  CHECK(exact_expected_accuracy(Rule::kMajority, x, space) == doctest::Approx(7.0 / 8).epsilon(1e-12));
  CHECK(exact_expected_accuracy(Rule::kSurprisinglyPopular, x, space) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(exact_expected_accuracy(Rule::kInverseSurprisinglyPopular, x, space) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nine-agent example") {
  std::vector<double> x(4, 1.0);
  x.insert(x.end(), 5, 0.5);
  const auto space = LabelSpace::with_size(2);
  CHECK(1 - exact_expected_accuracy(Rule::kMajority, x, space) == doctest::Approx(1.0 / 32).epsilon(1e-12));
  CHECK(1 - exact_expected_accuracy(Rule::kSurprisinglyPopular, x, space) == doctest::Approx(3.0 / 16).epsilon(1e-12));
  CHECK(std::abs(1 - exact_expected_accuracy(Rule::kInverseSurprisinglyPopular, x, space)) < 1e-12);
}

TEST_CASE("expected advantages agree with the brute-force oracle") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 3));
    const int k = 2 + static_cast<int>(uniform_index(rng, 3));
    const auto x = random_accuracies(rng, n, k);
    const auto space = LabelSpace::with_size(k);
    const auto model = brute::Model::ci(x, k);
    for (int r = 0; r < 3; ++r) {
      CHECK(exact_expected_advantage(kRules[r], x, space) ==
            doctest::Approx(brute::expected_advantage(model, r)).epsilon(1e-11).scale(1.0));
      CHECK(exact_expected_accuracy(kRules[r], x, space) ==
            doctest::Approx(brute::rule_accuracy(model, r)).epsilon(1e-11));
    }
    CHECK(exact_expected_advantage(Rule::kMajority, x, space) ==
          doctest::Approx([&] {
            double s = 0.0;
            for (double v : x) s += v - 1.0 / k;
            return s;
          }()));
    CHECK(exact_bayes_accuracy(x, space) == doctest::Approx(brute::bayes_accuracy(model)).epsilon(1e-12));
    // The truth label does not matter after shuffling.
    CHECK(exact_expected_advantage(Rule::kInverseSurprisinglyPopular, x, space, kDefaultEnumerationBudget, k - 1) ==
          doctest::Approx(exact_expected_advantage(Rule::kInverseSurprisinglyPopular, x, space)));
  }
}

TEST_CASE("closed-form gaps") {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 3));
    const int k = 2 + static_cast<int>(uniform_index(rng, 3));
    const auto x = random_accuracies(rng, n, k);
    const auto model = brute::Model::ci(x, k);
    const double mv = brute::expected_advantage(model, 0);
    const double sp = brute::expected_advantage(model, 1);
    const double isp = brute::expected_advantage(model, 2);
    const auto gaps = closed_form_gaps(x, LabelSpace::with_size(k));
    CHECK(gaps.isp_minus_mv == doctest::Approx(isp - mv).epsilon(1e-10).scale(1e-3));
    CHECK(gaps.mv_minus_sp == doctest::Approx(mv - sp).epsilon(1e-10).scale(1e-3));
    CHECK(gaps.isp_minus_mv >= 0.0);
    CHECK(gaps.mv_minus_sp >= 0.0);
  }
  CHECK_THROWS_AS(closed_form_gaps(std::vector<double>{0.7}, LabelSpace::with_size(2)), InputError);
}

TEST_CASE("posteriors") {
  const std::vector<double> x{0.9, 0.6, 0.7};
  const auto model = brute::Model::ci(x, 3);
  const std::vector<Label> a{0, 1, 1};
  const auto post = bayes_posterior(a, x, LabelSpace::with_size(3));
  const auto ref = brute::posterior(model, {0, 1, 1});
  for (int s = 0; s < 3; ++s) CHECK(post[static_cast<std::size_t>(s)] == doctest::Approx(ref[static_cast<std::size_t>(s)]));
  // A certain agent fixes the posterior; contradicting certainties give a uniform fallback.
  const std::vector<double> sure{1.0, 0.7};
  CHECK(bayes_posterior(std::vector<Label>{1, 0}, sure, LabelSpace::with_size(2))[1] == 1.0);
  const std::vector<double> both_sure{1.0, 1.0};
  CHECK(bayes_posterior(std::vector<Label>{1, 0}, both_sure, LabelSpace::with_size(2))[0] == 0.5);
}

TEST_CASE("difficulty mixture arithmetic") {
  const auto mix = DifficultyMixture::atoms({{0.0, 0.3}, {50.0, 0.7}});
  const std::vector<double> beta{1.0, 1.0};
  CHECK(mixture_likelihood(std::vector<Label>{0, 0}, 0, beta, mix, 2) == doctest::Approx(0.775).epsilon(1e-14));
  CHECK(mixture_likelihood(std::vector<Label>{0, 1}, 0, beta, mix, 2) == doctest::Approx(0.075).epsilon(1e-14));
  CHECK(mixture_likelihood(std::vector<Label>{1, 1}, 0, beta, mix, 2) == doctest::Approx(0.075).epsilon(1e-14));
  const auto so = mixture_second_order(beta, mix, LabelSpace::with_size(2));
  CHECK(so.provenance().source == SecondOrderSource::kMixture);
  // P(A_1 = s | A_2 = s) = P(both right or both wrong) / (1/2)
  CHECK(so(0, 1, 0, 0) == doctest::Approx(0.775 + 0.075));

  SplitMix64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 3));
    const int k = 2 + static_cast<int>(uniform_index(rng, 2));
    std::vector<double> b;
    for (int i = 0; i < n; ++i) b.push_back(3 * uniform01(rng));
    const double w = 0.1 + 0.8 * uniform01(rng);
    const double a1 = uniform01(rng), a2 = 1 + 4 * uniform01(rng);
    const auto m2 = DifficultyMixture::atoms({{a1, w}, {a2, 1 - w}});
    const auto model = brute::Model::difficulty(b, {{a1, w}, {a2, 1 - w}}, k);
    const auto space = LabelSpace::with_size(k);
    const auto mso = mixture_second_order(b, m2, space);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int p = 0; p < k; ++p)
          for (int q = 0; q < k; ++q)
            CHECK(mso(i, j, p, q) == doctest::Approx(brute::conditional(model, i, j, p, q)).epsilon(1e-12));
    for (int r = 0; r < 3; ++r) {
      CHECK(exact_expected_advantage_mixture(kRules[r], b, m2, space) ==
            doctest::Approx(brute::expected_advantage(model, r)).epsilon(1e-10).scale(1.0));
    }
    std::vector<Label> ans(static_cast<std::size_t>(n));
    for (auto& v : ans) v = static_cast<Label>(uniform_index(rng, static_cast<std::uint64_t>(k)));
    const auto post = mixture_posterior(ans, b, m2, space);
    const auto ref = brute::posterior(model, std::vector<int>(ans.begin(), ans.end()));
    for (int s = 0; s < k; ++s) CHECK(post[static_cast<std::size_t>(s)] == doctest::Approx(ref[static_cast<std::size_t>(s)]).epsilon(1e-12));
  }
}

TEST_CASE("mixture posterior is stable for huge difficulties") {
  const auto mix = DifficultyMixture::atoms({{400.0, 0.5}, {900.0, 0.5}});
  const std::vector<double> beta{3.0, 1.0, 1.0};
  const auto post = mixture_posterior(std::vector<Label>{0, 1, 1}, beta, mix, LabelSpace::with_size(2));
  CHECK(std::isfinite(post[0]));
  CHECK(post[0] == doctest::Approx(1.0));
}

TEST_CASE("mixture validation and continuous families") {
  CHECK_THROWS_AS(DifficultyMixture::atoms({{1.0, 0.5}}), DomainError);
  CHECK_THROWS_AS(DifficultyMixture::atoms({{-1.0, 1.0}}), DomainError);
  CHECK_THROWS_AS(DifficultyMixture::atoms({}), InputError);
  CHECK_THROWS_AS(DifficultyMixture::log_uniform(2.0, 1.0), DomainError);
  CHECK_THROWS_AS(DifficultyMixture::log_normal(0.0, 0.0), DomainError);

  const auto lu = DifficultyMixture::log_uniform(0.5, 8.0);
  CHECK(lu.support().size() == static_cast<std::size_t>(kQuadratureOrder));
  double quad_mean = 0.0, total = 0.0;
  for (const auto& a : lu.support()) {
    quad_mean += a.alpha * a.weight;
    total += a.weight;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(quad_mean == doctest::Approx(lu.mean()).epsilon(1e-12));

  const auto ln = DifficultyMixture::log_normal(0.2, 0.5);
  double ln_mean = 0.0;
  for (const auto& a : ln.support()) ln_mean += a.alpha * a.weight;
  CHECK(ln_mean == doctest::Approx(ln.mean()).epsilon(1e-6));

  SplitMix64 rng(3);
  double sample_mean = 0.0;
  const int draws = 200'000;
  for (int i = 0; i < draws; ++i) sample_mean += ln.sample(rng);
  CHECK(sample_mean / draws == doctest::Approx(ln.mean()).epsilon(0.01));

  const auto atoms = DifficultyMixture::atoms({{0.5, 0.25}, {3.0, 0.75}});
  int low = 0;
  for (int i = 0; i < 40'000; ++i) low += atoms.sample(rng) == 0.5;
  CHECK(std::abs(low / 40'000.0 - 0.25) < 0.01);
}

TEST_CASE("enumeration budget") {
  const std::vector<double> x(12, 0.7);
  CHECK_THROWS_AS(exact_expected_accuracy(Rule::kMajority, x, LabelSpace::with_size(4), 1000), ResourceError);
  int calls = 0;
  for_each_answer_vector(3, 3, 27, [&](std::span<const Label>) { ++calls; });
  CHECK(calls == 27);
}
