#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "infoagg/aggregate.hpp"
#include "infoagg/errors.hpp"
#include "infoagg/rng.hpp"
#include "infoagg/secondorder.hpp"
#include "support/brute_force.hpp"

using namespace infoagg;

namespace {

std::vector<double> random_accuracies(SplitMix64& rng, int n, int k) {
  std::vector<double> x;
  for (int i = 0; i < n; ++i) x.push_back(1.0 / k + (1.0 - 1.0 / k) * uniform01(rng));
  return x;
}

}  // namespace

TEST_CASE("majority vote and tie policies") {
  const auto space = LabelSpace::with_size(3);
  const std::vector<Label> a{0, 1, 1, 2};
  CHECK(aggregate_mv(a, space, TiePolicy::lowest_index(), 0) == 1);
  const std::vector<Label> tied{0, 2};
  CHECK(aggregate_mv(tied, space, TiePolicy::lowest_index(), 0) == 0);
  // Uniform ties pick each candidate about half the time, reproducibly.
  const auto tie = TiePolicy::uniform_random(11);
  int zeros = 0;
  for (std::uint64_t q = 0; q < 4000; ++q) {
    const Label l = aggregate_mv(tied, space, tie, q);
    CHECK((l == 0 || l == 2));
    zeros += l == 0;
    CHECK(l == aggregate_mv(tied, space, tie, q));
  }
  CHECK(std::abs(zeros - 2000) < 200);
  CHECK_THROWS_AS(aggregate_mv(std::vector<Label>{}, space, tie, 0), InputError);
}

TEST_CASE("weighted vote") {
  const auto space = LabelSpace::with_size(2);
  const std::vector<Label> a{0, 1, 1};
  const std::vector<double> w{3.0, 1.0, 1.0};
  CHECK(aggregate_weighted(a, w, space, TiePolicy::lowest_index(), 0) == 0);
  const std::vector<double> short_w{1.0};
  CHECK_THROWS_AS(aggregate_weighted(a, short_w, space, TiePolicy::lowest_index(), 0), DimensionError);
  // Equal positive weights reproduce majority vote.
  const std::vector<double> same{0.7, 0.7, 0.7};
  CHECK(aggregate_weighted(a, same, space, TiePolicy::lowest_index(), 0) == 1);
}

TEST_CASE("split case of the four-agent example") {
  const std::vector<double> x{1.0, 1.0, 0.5, 0.5};
  const auto so = exact_second_order(x, LabelSpace::with_size(2));
  const std::vector<Label> split{0, 0, 1, 1};
  CHECK(advantage_sp(split, so).values[0] == doctest::Approx(-1.0 / 3).epsilon(1e-12));
  CHECK(advantage_isp(split, so).values[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(advantage_mv(split, LabelSpace::with_size(2)).values[0] == 0.0);
  const auto space = LabelSpace::with_size(2);
  CHECK(aggregate_sp(split, space, so, TiePolicy::lowest_index(), 0).label == 1);
  CHECK(aggregate_isp(split, space, so, TiePolicy::lowest_index(), 0).label == 0);
}

TEST_CASE("advantages agree with the brute-force oracle") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 4));
    const int k = 2 + static_cast<int>(uniform_index(rng, 3));
    const auto x = random_accuracies(rng, n, k);
    const auto space = LabelSpace::with_size(k);
    const auto so = exact_second_order(x, space);
    const auto model = brute::Model::ci(x, k);
    std::vector<Label> a(static_cast<std::size_t>(n));
    for (auto& v : a) v = static_cast<Label>(uniform_index(rng, static_cast<std::uint64_t>(k)));
    const std::vector<int> ai(a.begin(), a.end());
    const Rule rules[] = {Rule::kMajority, Rule::kSurprisinglyPopular, Rule::kInverseSurprisinglyPopular};
    for (int r = 0; r < 3; ++r) {
      const auto lib = advantage(rules[r], a, space, &so).values;
      const auto ref = brute::advantage(model, ai, r);
      double total = 0.0;
      for (int s = 0; s < k; ++s) {
        CHECK(lib[static_cast<std::size_t>(s)] ==
              doctest::Approx(ref[static_cast<std::size_t>(s)]).epsilon(1e-11).scale(1.0));
        total += lib[static_cast<std::size_t>(s)];
        CHECK(std::abs(lib[static_cast<std::size_t>(s)]) <= n + 1e-12);
      }
      CHECK(std::abs(total) < 1e-9);
    }
  }
}

TEST_CASE("null-information agents make SP and ISP collapse to MV") {
  for (int k : {2, 3, 5}) {
    const std::vector<double> x(4, 1.0 / k);
    const auto space = LabelSpace::with_size(k);
    const auto so = exact_second_order(x, space);
    const std::vector<Label> a{0, 1, 1, static_cast<Label>(k - 1)};
    const auto mv = advantage_mv(a, space).values;
    const auto sp = advantage_sp(a, so).values;
    const auto isp = advantage_isp(a, so).values;
    for (int s = 0; s < k; ++s) {
      CHECK(sp[static_cast<std::size_t>(s)] == doctest::Approx(mv[static_cast<std::size_t>(s)]));
      CHECK(isp[static_cast<std::size_t>(s)] == doctest::Approx(mv[static_cast<std::size_t>(s)]));
    }
  }
}

TEST_CASE("peer scores reject bad inputs") {
  const auto so = exact_second_order(std::vector<double>{0.7, 0.8, 0.9}, LabelSpace::with_size(2));
  const std::vector<Label> two{0, 1};
  CHECK_THROWS_AS(advantage_sp(two, so), DimensionError);
  const std::vector<Label> one{0};
  const auto so1 = exact_second_order(std::vector<double>{0.7}, LabelSpace::with_size(2));
  CHECK_THROWS_AS(advantage_isp(one, so1), InputError);
  const std::vector<Label> bad{0, 1, 2};
  CHECK_THROWS_AS(advantage_isp(bad, so), DomainError);
  CHECK_THROWS_AS(advantage(Rule::kSurprisinglyPopular, two, LabelSpace::with_size(2), nullptr),
                  InputError);
}

TEST_CASE("dominance threshold") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(uniform_index(rng, 4));
    const auto x = random_accuracies(rng, 4, k);
    const auto profile = AgentProfile::from_accuracies(x, k);
    // Same quantity written as sigma_K of the peers' summed logits.
    double logit_sum = 0.0;
    for (int j = 1; j < 4; ++j) logit_sum += sigma_k_inverse(x[static_cast<std::size_t>(j)], k);
    CHECK(dominance_threshold(profile, 0, LabelSpace::with_size(k)) ==
          doctest::Approx(sigma_k(logit_sum, k)).epsilon(1e-12));
  }
  // Tiny peers still give a threshold in [0, 1] without underflow trouble.
  const auto weak = AgentProfile::from_accuracies(std::vector<double>(60, 0.51), 2);
  const double t = dominance_threshold(weak, 0, LabelSpace::with_size(2));
  CHECK(t > 0.5);
  CHECK(t <= 1.0);
}
