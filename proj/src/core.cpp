#include "infoagg/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "infoagg/errors.hpp"
#include "infoagg/rng.hpp"

namespace infoagg {

LabelSpace::LabelSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw InputError("a label space needs at least two labels");
  }
  std::unordered_set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty()) throw InputError("labels must be non-empty");
    if (!seen.insert(label).second) throw InputError("duplicate label '" + label + "'");
  }
}

LabelSpace LabelSpace::with_size(int k) {
  if (k < 2) throw InputError("K must be at least 2");
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) labels.push_back("s" + std::to_string(i));
  return LabelSpace(std::move(labels));
}

const std::string& LabelSpace::name(Label label) const {
  if (label < 0 || label >= size()) throw DomainError("label index out of range");
  return labels_[static_cast<std::size_t>(label)];
}

std::optional<Label> LabelSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == name) return static_cast<Label>(i);
  }
  return std::nullopt;
}

PredictionMatrix::PredictionMatrix(LabelSpace space, std::vector<std::string> agents,
                                   std::vector<Label> answers,
                                   std::optional<std::vector<Label>> truth,
                                   std::vector<std::string> question_ids)
    : space_(std::move(space)),
      agents_(std::move(agents)),
      question_ids_(std::move(question_ids)),
      answers_(std::move(answers)),
      truth_(std::move(truth)) {
  if (agents_.empty()) throw InputError("a prediction matrix needs at least one agent");
  if (answers_.size() % agents_.size() != 0) {
    throw DimensionError("answer count is not a multiple of the agent count");
  }
  num_questions_ = static_cast<int>(answers_.size() / agents_.size());
  const int k = space_.size();
  for (Label a : answers_) {
    if (a < 0 || a >= k) throw DomainError("answer index outside [0, K)");
  }
  if (truth_) {
    if (static_cast<int>(truth_->size()) != num_questions_) {
      throw DimensionError("truth length differs from the question count");
    }
    for (Label t : *truth_) {
      if (t < 0 || t >= k) throw DomainError("truth index outside [0, K)");
    }
  }
  if (question_ids_.empty()) {
    question_ids_.reserve(static_cast<std::size_t>(num_questions_));
    for (int q = 0; q < num_questions_; ++q) question_ids_.push_back(std::to_string(q));
  } else if (static_cast<int>(question_ids_.size()) != num_questions_) {
    throw DimensionError("question id count differs from the question count");
  }
}

PredictionMatrix PredictionMatrix::without_truth() const {
  return PredictionMatrix(space_, agents_, answers_, std::nullopt, question_ids_);
}

PredictionMatrix PredictionMatrix::with_truth(std::vector<Label> truth) const {
  return PredictionMatrix(space_, agents_, answers_, std::move(truth), question_ids_);
}

PredictionMatrix PredictionMatrix::select_agents(std::span<const int> agents) const {
  std::vector<std::string> names;
  for (int a : agents) {
    if (a < 0 || a >= num_agents()) throw DimensionError("agent index out of range");
    names.push_back(agents_[static_cast<std::size_t>(a)]);
  }
  std::vector<Label> answers;
  answers.reserve(static_cast<std::size_t>(num_questions_) * agents.size());
  for (int q = 0; q < num_questions_; ++q) {
    for (int a : agents) answers.push_back(answer(q, a));
  }
  return PredictionMatrix(space_, std::move(names), std::move(answers), truth_,
                          question_ids_);
}

PredictionMatrix PredictionMatrix::select_questions(std::span<const int> questions) const {
  std::vector<Label> answers;
  std::vector<std::string> ids;
  std::optional<std::vector<Label>> truth;
  if (truth_) truth.emplace();
  for (int q : questions) {
    if (q < 0 || q >= num_questions_) throw DimensionError("question index out of range");
    auto r = row(q);
    answers.insert(answers.end(), r.begin(), r.end());
    ids.push_back(question_ids_[static_cast<std::size_t>(q)]);
    if (truth_) truth->push_back((*truth_)[static_cast<std::size_t>(q)]);
  }
  return PredictionMatrix(space_, agents_, std::move(answers), std::move(truth),
                          std::move(ids));
}

ShuffleMap ShuffleMap::inverse() const {
  ShuffleMap inv{.perms = perms, .seed = seed};
  for (std::size_t q = 0; q < perms.size(); ++q) {
    for (std::size_t a = 0; a < perms[q].size(); ++a) {
      inv.perms[q][static_cast<std::size_t>(perms[q][a])] = static_cast<Label>(a);
    }
  }
  return inv;
}

ShuffleMap identity_shuffle(int num_questions, int k) {
  std::vector<Label> id(static_cast<std::size_t>(k));
  std::iota(id.begin(), id.end(), 0);
  return ShuffleMap{.perms = std::vector<std::vector<Label>>(
                        static_cast<std::size_t>(num_questions), id),
                    .seed = 0};
}

void validate_shuffle(const ShuffleMap& map, int num_questions, int k) {
  if (static_cast<int>(map.perms.size()) != num_questions) {
    throw DimensionError("shuffle map covers " + std::to_string(map.perms.size()) +
                         " questions, expected " + std::to_string(num_questions));
  }
  std::vector<char> hit(static_cast<std::size_t>(k));
  for (const auto& perm : map.perms) {
    if (static_cast<int>(perm.size()) != k) {
      throw DimensionError("shuffle permutation has the wrong length");
    }
    std::fill(hit.begin(), hit.end(), 0);
    for (Label v : perm) {
      if (v < 0 || v >= k || hit[static_cast<std::size_t>(v)]) {
        throw InputError("shuffle entry is not a permutation");
      }
      hit[static_cast<std::size_t>(v)] = 1;
    }
  }
}

AgentProfile AgentProfile::from_accuracies(std::span<const double> accuracy, int k,
                                           double epsilon) {
  AgentProfile p;
  p.accuracy.assign(accuracy.begin(), accuracy.end());
  p.weight = ow_weights(accuracy, k, epsilon);
  p.ability = p.weight;
  return p;
}

AgentProfile AgentProfile::from_abilities(std::span<const double> ability, int k) {
  AgentProfile p;
  p.ability.assign(ability.begin(), ability.end());
  p.weight = p.ability;
  for (double b : ability) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("abilities must be finite and >= 0");
    p.accuracy.push_back(sigma_k(b, k));
  }
  return p;
}

std::vector<double> AgentProfile::normalized_weights() const {
  double total = 0.0;
  for (double w : weight) total += std::abs(w);
  std::vector<double> out = weight;
  if (total > 0.0) {
    for (double& w : out) w /= total;
  }
  return out;
}

double sigma_k(double x, int k) {
  if (k < 2) throw DomainError("sigma_k needs K >= 2");
  if (!std::isfinite(x)) throw DomainError("sigma_k argument must be finite");
  const double km1 = static_cast<double>(k - 1);
  if (x >= 0.0) return 1.0 / (1.0 + km1 * std::exp(-x));
  const double e = std::exp(x);
  return e / (km1 + e);
}

double sigma_k_inverse(double p, int k) {
  if (k < 2) throw DomainError("sigma_k_inverse needs K >= 2");
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("sigma_k_inverse needs p strictly inside (0, 1)");
  }
  return std::log(static_cast<double>(k - 1)) + std::log(p) - std::log1p(-p);
}

double clamp_accuracy(double x, int k, double epsilon) {
  const double lo = 1.0 / k + epsilon;
  const double hi = 1.0 - epsilon;
  return std::clamp(x, lo, hi);
}

double ow_weight(double x, int k, double epsilon) {
  if (std::isnan(x)) throw DomainError("accuracy is NaN");
  if (x <= 1.0 / k + epsilon) return 0.0;
  return sigma_k_inverse(clamp_accuracy(x, k, epsilon), k);
}

std::vector<double> ow_weights(std::span<const double> accuracy, int k, double epsilon) {
  std::vector<double> out;
  out.reserve(accuracy.size());
  for (double x : accuracy) out.push_back(ow_weight(x, k, epsilon));
  return out;
}

ShuffleResult shuffle_apply(const PredictionMatrix& pm, std::uint64_t seed) {
  const int m = pm.num_questions();
  const int k = pm.num_labels();
  ShuffleMap map{.perms = {}, .seed = seed};
  map.perms.resize(static_cast<std::size_t>(m));
  for (int q = 0; q < m; ++q) {
    SplitMix64 rng(seed, static_cast<std::uint64_t>(q), StreamTag::kShuffle);
    auto& perm = map.perms[static_cast<std::size_t>(q)];
    perm.resize(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = k - 1; i > 0; --i) {
      const auto j = uniform_index(rng, static_cast<std::uint64_t>(i) + 1);
      std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
    }
  }
  auto shuffled = shuffle_apply(pm, map);
  return ShuffleResult{.matrix = std::move(shuffled), .map = std::move(map)};
}

namespace {

PredictionMatrix relabel(const PredictionMatrix& pm, const ShuffleMap& map) {
  validate_shuffle(map, pm.num_questions(), pm.num_labels());
  const int n = pm.num_agents();
  std::vector<Label> answers(pm.answers().size());
  for (int q = 0; q < pm.num_questions(); ++q) {
    const auto& perm = map.perms[static_cast<std::size_t>(q)];
    for (int i = 0; i < n; ++i) {
      answers[static_cast<std::size_t>(q) * static_cast<std::size_t>(n) +
              static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(pm.answer(q, i))];
    }
  }
  std::optional<std::vector<Label>> truth;
  if (pm.has_truth()) {
    truth = *pm.truth();
    for (std::size_t q = 0; q < truth->size(); ++q) {
      (*truth)[q] = map.perms[q][static_cast<std::size_t>((*truth)[q])];
    }
  }
  return PredictionMatrix(pm.space(), pm.agents(), std::move(answers), std::move(truth),
                          pm.question_ids());
}

}  // namespace

PredictionMatrix shuffle_apply(const PredictionMatrix& pm, const ShuffleMap& map) {
  return relabel(pm, map);
}

PredictionMatrix shuffle_invert(const PredictionMatrix& pm, const ShuffleMap& map) {
  validate_shuffle(map, pm.num_questions(), pm.num_labels());
  return relabel(pm, map.inverse());
}

std::vector<Label> shuffle_invert(std::span<const Label> labels, const ShuffleMap& map) {
  if (labels.size() != map.perms.size()) {
    throw DimensionError("label vector length differs from the shuffle map");
  }
  const ShuffleMap inv = map.inverse();
  std::vector<Label> out(labels.size());
  for (std::size_t q = 0; q < labels.size(); ++q) {
    const auto& perm = inv.perms[q];
    if (labels[q] < 0 || labels[q] >= static_cast<Label>(perm.size())) {
      throw DomainError("label index out of range");
    }
    out[q] = perm[static_cast<std::size_t>(labels[q])];
  }
  return out;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, count);
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(count, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&body, &errors, w, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace infoagg
