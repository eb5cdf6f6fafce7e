#include "infoagg/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "infoagg/core.hpp"
#include "infoagg/errors.hpp"
#include "infoagg/estimate.hpp"
#include "infoagg/io.hpp"
#include "infoagg/oracle.hpp"
#include "infoagg/secondorder.hpp"
#include "infoagg/simulate.hpp"

namespace infoagg::cli {

namespace {

using json = nlohmann::ordered_json;

// Bad flag values; reported with the usage exit status.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& flag, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      !std::isfinite(v)) {
    throw UsageError(flag + ": '" + text + "' is not a number");
  }
  return v;
}

std::vector<double> parse_list(const std::string& flag, const std::string& text) {
  if (text.empty()) throw UsageError(flag + ": empty list");
  std::vector<double> values;
  for (const auto& part : split(text, ',')) values.push_back(parse_double(flag, part));
  return values;
}

// "alpha:weight,alpha:weight,...", "log-uniform:lo:hi" or "log-normal:mu:sigma".
DifficultyMixture parse_mixture(const std::string& text) {
  const std::string flag = "--mixture";
  try {
    if (text.starts_with("log-uniform:") || text.starts_with("log-normal:")) {
      const auto parts = split(text, ':');
      if (parts.size() != 3) throw UsageError(flag + ": expected family:a:b");
      const double a = parse_double(flag, parts[1]);
      const double b = parse_double(flag, parts[2]);
      return parts[0] == "log-uniform" ? DifficultyMixture::log_uniform(a, b)
                                       : DifficultyMixture::log_normal(a, b);
    }
    std::vector<DifficultyAtom> atoms;
    for (const auto& item : split(text, ',')) {
      const auto parts = split(item, ':');
      if (parts.size() != 2) throw UsageError(flag + ": expected alpha:weight pairs");
      atoms.push_back({parse_double(flag, parts[0]), parse_double(flag, parts[1])});
    }
    return DifficultyMixture::atoms(std::move(atoms));
  } catch (const DomainError& e) {
    throw UsageError(flag + ": " + e.what());
  } catch (const InputError& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_meta_option(const CLI::Option* opt) {
  const auto name = opt->get_single_name();
  return name == "help" || name == "config";
}

// Every option of the subcommand with its effective value.
json resolved_config(const CLI::App& app) {
  json options = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (is_meta_option(opt)) continue;
    const std::string name = opt->get_single_name();
    if (opt->get_expected_min() == 0) {
      options[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& results = opt->results();
      options[name] = results.size() == 1 ? json(results.front()) : json(results);
    } else if (!opt->get_default_str().empty()) {
      options[name] = opt->get_default_str();
    }
  }
  return json{{"command", app.get_name()}, {"options", options}};
}

// Reads {"command": ..., "options": {...}}, a report that embeds one under
// "config", or a flat object of option names. Values go to the subcommand
// named on the command line.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App& root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
    return resolved_config(*app).dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    const auto subs = root_.get_subcommands();
    if (subs.empty()) throw CLI::ConversionError("--config needs a subcommand");
    const std::string command = subs.front()->get_name();
    json root;
    try {
      root = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (root.is_object() && root.contains("config")) root = root["config"];
    if (root.is_object() && root.contains("options")) {
      if (root.contains("command") && root["command"] != command) {
        throw CLI::ConversionError("config file is for '" + root["command"].get<std::string>() +
                                   "', not '" + command + "'");
      }
      root = root["options"];
    }
    if (!root.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : root.items()) {
      CLI::ConfigItem item;
      item.parents = {command};
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else if (value.is_boolean()) {
        if (!value.get<bool>()) continue;
        item.inputs.push_back("true");
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  const CLI::App& root_;
};

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path == "-") {
    out << content;
  } else {
    atomic_write(path, content);
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split_names(const std::string& text) {
  if (text.empty()) return {};
  auto names = split(text, ',');
  for (const auto& n : names) {
    if (n.empty()) throw UsageError("empty name in list '" + text + "'");
  }
  return names;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string model = "ci";
  std::string accuracies;
  std::string abilities;
  std::string mixture;
  int k = 0;
  int questions = 10'000;
  std::uint64_t seed = 0;
  std::string output = "-";
  unsigned threads = 1;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* sub = app.add_subcommand("simulate", "Simulate a predictions CSV with a truth column");
  sub->option_defaults()->always_capture_default();
  sub->add_option("--model", a.model, "ci or difficulty")
      ->check(CLI::IsMember({"ci", "difficulty"}));
  sub->add_option("--accuracies", a.accuracies, "comma-separated x_i (ci model)");
  sub->add_option("--abilities", a.abilities, "comma-separated beta_i (difficulty model)");
  sub->add_option("--mixture", a.mixture,
                  "alpha:weight,... | log-uniform:lo:hi | log-normal:mu:sigma");
  sub->add_option("--k", a.k, "number of labels")->required();
  sub->add_option("--questions", a.questions, "number of questions");
  sub->add_option("--seed", a.seed, "master seed");
  sub->add_option("--output", a.output, "output CSV path, - for stdout");
  sub->add_option("--threads", a.threads, "worker threads");
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.k < 2) throw UsageError("--k: need at least 2 labels");
  if (a.questions < 1) throw UsageError("--questions: need at least one question");
  PredictionMatrix pm = [&] {
    if (a.model == "ci") {
      if (a.accuracies.empty()) throw UsageError("--accuracies is required for --model ci");
      const auto x = parse_list("--accuracies", a.accuracies);
      for (double v : x) {
        if (!(v >= 1.0 / a.k - 1e-12 && v <= 1.0)) {
          throw UsageError("--accuracies: " + fixed(v, 6) + " is outside [1/K, 1] for K=" +
                           std::to_string(a.k));
        }
      }
      return simulate_ci(CiSimSpec{.accuracies = x, .k = a.k, .m = a.questions, .seed = a.seed},
                         a.threads);
    }
    if (a.abilities.empty()) throw UsageError("--abilities is required for --model difficulty");
    if (a.mixture.empty()) throw UsageError("--mixture is required for --model difficulty");
    const auto beta = parse_list("--abilities", a.abilities);
    for (double b : beta) {
      if (b < 0.0) throw UsageError("--abilities: abilities must be >= 0");
    }
    return simulate_difficulty(DifficultySimSpec{.abilities = beta,
                                                 .mixture = parse_mixture(a.mixture),
                                                 .k = a.k,
                                                 .m = a.questions,
                                                 .seed = a.seed},
                               a.threads);
  }();
  std::ostringstream csv;
  write_predictions(csv, pm);
  emit(a.output, csv.str(), out);
  return kOk;
}

// ---------------------------------------------------------------- ingest flags

struct IngestArgs {
  std::string input;
  std::string labels;
  std::string agents;
  bool drop_incomplete = false;
};

void add_ingest(CLI::App* sub, IngestArgs& a) {
  sub->add_option("--input", a.input, "predictions CSV")->required();
  sub->add_option("--labels", a.labels, "comma-separated label set, in canonical order");
  sub->add_option("--agents", a.agents, "comma-separated agent names to use");
  sub->add_flag("--drop-incomplete", a.drop_incomplete, "skip questions with missing answers");
}

PredictionMatrix ingest(const IngestArgs& a) {
  IngestOptions opts;
  if (!a.labels.empty()) {
    try {
      opts.labels = LabelSpace(split_names(a.labels));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--labels: ") + e.what());
    }
  }
  opts.agents = split_names(a.agents);
  opts.drop_incomplete = a.drop_incomplete;
  return read_predictions_file(a.input, opts);
}

json fit_json(const FitResult& fit, const PredictionMatrix& pm) {
  json acc = json::object();
  for (int i = 0; i < pm.num_agents(); ++i) {
    acc[pm.agents()[static_cast<std::size_t>(i)]] = fit.accuracies[static_cast<std::size_t>(i)];
  }
  return json{{"accuracies", acc},
              {"weights", ow_weights(fit.accuracies, pm.num_labels())},
              {"loss", fit.loss},
              {"restarts_agreeing", fit.restarts_agreeing},
              {"converged", fit.converged},
              {"iterations", fit.iterations}};
}

// ---------------------------------------------------------------- aggregate

struct AggregateArgs {
  IngestArgs in;
  std::string method;
  std::string accuracies;
  std::string abilities;
  std::string tie = "uniform";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> shuffle_seed;
  double smoothing = 0.0;
  int starts = 8;
  std::string emit_second_order;
  std::string output = "-";
  std::string summary;
  unsigned threads = 1;
};

void add_aggregate(CLI::App& app, AggregateArgs& a) {
  auto* sub = app.add_subcommand("aggregate", "Aggregate a predictions CSV into one label per question");
  sub->option_defaults()->always_capture_default();
  sub->add_option("--method", a.method, "mv|sp|isp|ow-l|ow-i|ow-oracle|eow")->required();
  add_ingest(sub, a.in);
  sub->add_option("--accuracies", a.accuracies, "agent accuracies for ow-oracle");
  sub->add_option("--abilities", a.abilities, "agent abilities for eow");
  sub->add_option("--tie", a.tie, "uniform or lowest")
      ->check(CLI::IsMember({"uniform", "lowest"}));
  sub->add_option("--seed", a.seed, "seed for tie-breaking and fit restarts");
  sub->add_option("--shuffle-seed", a.shuffle_seed, "shuffle labels per question before aggregating");
  sub->add_option("--smoothing", a.smoothing, "additive smoothing of the empirical second-order matrix")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--starts", a.starts, "random starts for ow-l")->check(CLI::PositiveNumber);
  sub->add_option("--emit-second-order", a.emit_second_order, "also write the empirical second-order CSV");
  sub->add_option("--output", a.output, "labels CSV path, - for stdout");
  sub->add_option("--summary", a.summary, "summary JSON path, - for stdout (default: stdout when --output is a file)");
  sub->add_option("--threads", a.threads, "worker threads");
}

int cmd_aggregate(const AggregateArgs& a, const CLI::App& sub, std::ostream& out) {
  const PredictionMatrix pm = ingest(a.in);
  std::vector<double> params;
  if (!a.accuracies.empty()) params = parse_list("--accuracies", a.accuracies);
  Method method = Method::parse(a.method);
  if (method.kind == Method::Kind::kOwOracle) {
    if (a.accuracies.empty()) throw UsageError("--method ow-oracle requires --accuracies");
    method.params = params;
  } else if (method.kind == Method::Kind::kEow) {
    if (a.abilities.empty()) throw UsageError("--method eow requires --abilities");
    method.params = parse_list("--abilities", a.abilities);
  }
  if (!method.params.empty() && static_cast<int>(method.params.size()) != pm.num_agents()) {
    throw UsageError("expected " + std::to_string(pm.num_agents()) + " values, one per agent, got " +
                     std::to_string(method.params.size()));
  }

  PipelineConfig cfg;
  cfg.erm.seed = a.seed;
  cfg.erm.starts = a.starts;
  cfg.tie = a.tie == "lowest" ? TiePolicy::lowest_index() : TiePolicy::uniform_random(a.seed);
  cfg.shuffle_seed = a.shuffle_seed;
  cfg.smoothing = a.smoothing;
  cfg.threads = a.threads;
  const PipelineResult result = pipeline_aggregate(pm, method, cfg);

  std::ostringstream labels;
  write_labels(labels, pm.question_ids(), result.labels, pm.space());
  emit(a.output, labels.str(), out);

  if (!a.emit_second_order.empty()) {
    std::ostringstream so;
    write_second_order(so, empirical_second_order(pm.without_truth(), a.smoothing));
    emit(a.emit_second_order, so.str(), out);
  }

  json summary{{"config", resolved_config(sub)},
               {"generated_at", timestamp_utc()},
               {"method", method.name()},
               {"questions", pm.num_questions()},
               {"agents", pm.agents()},
               {"labels", pm.space().labels()}};
  if (result.fit) summary["fit"] = fit_json(*result.fit, pm);
  if (!result.weights.empty()) summary["weights"] = result.weights;
  if (method.kind == Method::Kind::kSp || method.kind == Method::Kind::kIsp) {
    summary["imputed_cells"] = result.imputed_cells;
  }
  if (pm.has_truth()) {
    const auto& truth = *pm.truth();
    int hits = 0, split_questions = 0, split_hits = 0;
    std::vector<int> agent_hits(static_cast<std::size_t>(pm.num_agents()), 0);
    for (int q = 0; q < pm.num_questions(); ++q) {
      const auto row = pm.row(q);
      const bool correct = result.labels[static_cast<std::size_t>(q)] == truth[static_cast<std::size_t>(q)];
      hits += correct;
      const bool unanimous = std::all_of(row.begin(), row.end(), [&](Label l) { return l == row[0]; });
      if (!unanimous) {
        ++split_questions;
        split_hits += correct;
      }
      for (int i = 0; i < pm.num_agents(); ++i) {
        agent_hits[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(q)];
      }
    }
    const double m = pm.num_questions();
    summary["accuracy"] = hits / m;
    summary["disagreement_questions"] = split_questions;
    summary["disagreement_accuracy"] =
        split_questions > 0 ? json(static_cast<double>(split_hits) / split_questions) : json(nullptr);
    json per_agent = json::object();
    for (int i = 0; i < pm.num_agents(); ++i) {
      per_agent[pm.agents()[static_cast<std::size_t>(i)]] = agent_hits[static_cast<std::size_t>(i)] / m;
    }
    summary["agent_accuracy"] = per_agent;
  }
  const std::string text = summary.dump(2) + "\n";
  if (!a.summary.empty()) {
    emit(a.summary, text, out);
  } else if (a.output != "-") {
    out << text;
  }
  return kOk;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  IngestArgs in;
  std::string method = "ow-l";
  std::uint64_t seed = 0;
  int starts = 8;
  double smoothing = 0.0;
  std::string output = "-";
};

void add_fit(CLI::App& app, FitArgs& a) {
  auto* sub = app.add_subcommand("fit", "Estimate agent accuracies without labels");
  sub->option_defaults()->always_capture_default();
  sub->add_option("--method", a.method, "ow-l or ow-i")->check(CLI::IsMember({"ow-l", "ow-i"}));
  add_ingest(sub, a.in);
  sub->add_option("--seed", a.seed, "seed for random restarts");
  sub->add_option("--starts", a.starts, "random starts for ow-l")->check(CLI::PositiveNumber);
  sub->add_option("--smoothing", a.smoothing, "additive smoothing of the empirical second-order matrix")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--output", a.output, "JSON path, - for stdout");
}

int cmd_fit(const FitArgs& a, const CLI::App& sub, std::ostream& out) {
  const PredictionMatrix pm = ingest(a.in).without_truth();
  const auto so = empirical_second_order(pm, a.smoothing);
  FitResult fit;
  if (a.method == "ow-l") {
    ErmConfig cfg;
    cfg.seed = a.seed;
    cfg.starts = a.starts;
    fit = fit_ow_l(so, cfg);
  } else {
    fit = fit_ow_i(pm, so);
  }
  json doc{{"config", resolved_config(sub)}, {"generated_at", timestamp_utc()},
           {"method", a.method}, {"fit", fit_json(fit, pm)},
           {"imputed_cells", so.imputed_count()}};
  emit(a.output, doc.dump(2) + "\n", out);
  return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t budget = kDefaultEnumerationBudget;
  std::uint64_t seed = 0;
};

void add_verify(CLI::App& app, VerifyArgs& a) {
  auto* sub = app.add_subcommand("verify", "Check the aggregation guarantees by exhaustive enumeration");
  sub->option_defaults()->always_capture_default();
  sub->add_option("--suite", a.suite, "all|thm1|thm2|thm4|thm5|props|examples")
      ->check(CLI::IsMember({"all", "thm1", "thm2", "thm4", "thm5", "props", "examples"}));
  sub->add_option("--budget", a.budget, "largest number of answer vectors to enumerate");
  sub->add_option("--seed", a.seed, "seed for the random instances");
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const auto checks = run_verify(VerifyOptions{.suite = a.suite, .budget = a.budget, .seed = a.seed});
  print_checks(out, checks);
  const bool failed = std::any_of(checks.begin(), checks.end(),
                                  [](const CheckResult& c) { return c.status == CheckStatus::kFail; });
  return failed ? kVerificationFailed : kOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  bool table2 = false;
  bool gap_curve = false;
  std::uint64_t seed = 0;
  int replications = 1;
  int questions = 10'000;
  std::string out_dir = ".";
  unsigned threads = 1;
};

void add_report(CLI::App& app, ReportArgs& a) {
  auto* sub = app.add_subcommand("report", "Accuracy grid and ISP/MV gap curve on simulated data");
  sub->option_defaults()->always_capture_default();
  sub->add_flag("--table2", a.table2, "accuracy of MV, SP, Single Best, ISP and OPT for K=2..10");
  sub->add_flag("--gap-curve", a.gap_curve, "ISP-MV and MV-SP accuracy gaps per K");
  sub->add_option("--seed", a.seed, "master seed");
  sub->add_option("--replications", a.replications, "independent repetitions")
      ->check(CLI::PositiveNumber);
  sub->add_option("--questions", a.questions, "questions per K")->check(CLI::PositiveNumber);
  sub->add_option("--out-dir", a.out_dir, "directory for the CSV/JSON outputs");
  sub->add_option("--threads", a.threads, "worker threads");
}

struct CellStats {
  double mean = 0.0;
  double se = 0.0;
};

CellStats stats(const std::vector<double>& v) {
  CellStats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

int cmd_report(const ReportArgs& a, const CLI::App& sub, std::ostream& out) {
  if (!a.table2 && !a.gap_curve) {
    throw UsageError("report needs --table2 and/or --gap-curve");
  }
  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  Table2Options opts;
  opts.m = a.questions;
  opts.threads = a.threads;
  const json config = resolved_config(sub);

  if (a.table2) {
    // cells[c][column] over replications, in percentage points
    const std::size_t nk = opts.ks.size();
    std::vector<std::array<std::vector<double>, 5>> cells(nk);
    for (int r = 0; r < a.replications; ++r) {
      const std::uint64_t seed =
          a.replications == 1 ? a.seed
                              : derive_seed(a.seed, static_cast<std::uint64_t>(r), StreamTag::kReplication);
      const auto rows = run_table2(seed, opts);
      for (std::size_t c = 0; c < nk; ++c) {
        const double v[5] = {rows[c].mv, rows[c].sp, rows[c].single_best, rows[c].isp, rows[c].opt};
        for (int col = 0; col < 5; ++col) cells[c][static_cast<std::size_t>(col)].push_back(100.0 * v[col]);
      }
    }
    const char* names[5] = {"MV", "SP", "SingleBest", "ISP", "OPT"};
    const char* keys[5] = {"mv", "sp", "single_best", "isp", "opt"};
    std::ostringstream text, csv;
    text << "Accuracy (%), M=" << a.questions << ", x=(0.6, 0.7, 0.8, 0.9), seed=" << a.seed;
    if (a.replications > 1) text << ", mean +- s.e. over " << a.replications << " replications";
    text << "\n";
    text << "K  ";
    for (const char* n : names) {
      char buf[32];
      std::snprintf(buf, sizeof buf, a.replications > 1 ? "%16s" : "%11s", n);
      text << buf;
    }
    text << "\n";
    csv << "k";
    for (const char* k : keys) csv << ',' << k;
    if (a.replications > 1) {
      for (const char* k : keys) csv << ',' << k << "_se";
    }
    csv << "\n";
    json rows_json = json::array();
    for (std::size_t c = 0; c < nk; ++c) {
      char kbuf[8];
      std::snprintf(kbuf, sizeof kbuf, "%-3d", opts.ks[c]);
      text << kbuf;
      csv << opts.ks[c];
      json row{{"k", opts.ks[c]}};
      std::array<CellStats, 5> s;
      for (std::size_t col = 0; col < 5; ++col) {
        s[col] = stats(cells[c][col]);
        std::string cell = fixed(s[col].mean, 2);
        if (a.replications > 1) cell += " +- " + fixed(s[col].se, 2);
        char buf[48];
        std::snprintf(buf, sizeof buf, a.replications > 1 ? "%16s" : "%11s", cell.c_str());
        text << buf;
        csv << ',' << fixed(s[col].mean, 4);
        row[keys[col]] = s[col].mean;
        if (a.replications > 1) row[std::string(keys[col]) + "_se"] = s[col].se;
      }
      if (a.replications > 1) {
        for (std::size_t col = 0; col < 5; ++col) csv << ',' << fixed(s[col].se, 4);
      }
      text << "\n";
      csv << "\n";
      rows_json.push_back(row);
    }
    out << text.str();
    atomic_write(dir / "table2.txt", text.str());
    atomic_write(dir / "table2.csv", csv.str());
    json doc{{"config", config}, {"generated_at", timestamp_utc()}, {"unit", "percent"},
             {"rows", rows_json}};
    atomic_write(dir / "table2.json", doc.dump(2) + "\n");
  }

  if (a.gap_curve) {
    const auto curve = run_gap_curve(a.seed, a.replications, opts);
    std::ostringstream text, csv;
    text << "Accuracy gaps (percentage points), " << a.replications << " replication(s), seed="
         << a.seed << "\n";
    text << "K   ISP-MV   MV-SP   s.e.(ISP-MV)\n";
    csv << "k,gap_isp_mv,gap_mv_sp,stderr\n";
    json points = json::array();
    for (const auto& p : curve) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%-3d %7.3f %7.3f %9.3f\n", p.k, 100 * p.gap_isp_mv,
                    100 * p.gap_mv_sp, 100 * p.stderr_isp_mv);
      text << buf;
      csv << p.k << ',' << fixed(100 * p.gap_isp_mv, 4) << ',' << fixed(100 * p.gap_mv_sp, 4) << ','
          << fixed(100 * p.stderr_isp_mv, 4) << "\n";
      points.push_back({{"k", p.k},
                        {"gap_isp_mv", 100 * p.gap_isp_mv},
                        {"gap_mv_sp", 100 * p.gap_mv_sp},
                        {"stderr_isp_mv", 100 * p.stderr_isp_mv},
                        {"stderr_mv_sp", 100 * p.stderr_mv_sp}});
    }
    out << text.str();
    atomic_write(dir / "gap_curve.csv", csv.str());
    json doc{{"config", config}, {"generated_at", timestamp_utc()}, {"unit", "percentage points"},
             {"points", points}};
    atomic_write(dir / "gap_curve.json", doc.dump(2) + "\n");
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label aggregation for multi-agent predictions", "infoagg"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "JSON file with option values; flags on the command line win");
  app.config_formatter(std::make_shared<JsonConfig>(app));

  SimulateArgs simulate_args;
  AggregateArgs aggregate_args;
  FitArgs fit_args;
  VerifyArgs verify_args;
  ReportArgs report_args;
  add_simulate(app, simulate_args);
  add_aggregate(app, aggregate_args);
  add_fit(app, fit_args);
  add_verify(app, verify_args);
  add_report(app, report_args);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kOk : kUsage;
    }
    app.exit(e, err, err);
    return kUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "simulate") return cmd_simulate(simulate_args, out);
    if (name == "aggregate") return cmd_aggregate(aggregate_args, *sub, out);
    if (name == "fit") return cmd_fit(fit_args, *sub, out);
    if (name == "verify") return cmd_verify(verify_args, out);
    if (name == "report") return cmd_report(report_args, *sub, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << "\n";
    return kResource;
  } catch (const std::invalid_argument& e) {
    // InputError, DimensionError and DomainError all derive from it.
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace infoagg::cli
