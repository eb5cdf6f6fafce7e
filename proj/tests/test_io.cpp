#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "infoagg/errors.hpp"
#include "infoagg/io.hpp"
#include "infoagg/secondorder.hpp"
#include "infoagg/simulate.hpp"

using namespace infoagg;

namespace {

PredictionMatrix parse(const std::string& text, const IngestOptions& opts = {}) {
  std::istringstream in(text);
  return read_predictions(in, opts);
}

long error_line(const std::string& text, const IngestOptions& opts = {}) {
  try {
    parse(text, opts);
  } catch (const FormatError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("csv tokenizer") {
  std::istringstream in("\xEF\xBB\xBF" "a,\"b,c\",\"say \"\"hi\"\"\"\r\n\"multi\nline\",x,\n");
  const auto recs = parse_csv(in);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].fields == std::vector<std::string>{"a", "b,c", "say \"hi\""});
  CHECK(recs[1].fields == std::vector<std::string>{"multi\nline", "x", ""});
  CHECK(recs[1].line == 2);
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");

  std::istringstream bad("a,\"open\nstill open");
  CHECK_THROWS_AS(parse_csv(bad), FormatError);
}

TEST_CASE("natural order") {
  CHECK(natural_less("s2", "s10"));
  CHECK_FALSE(natural_less("s10", "s2"));
  CHECK(natural_less("a", "b"));
  CHECK(natural_less("item9x", "item10a"));
}

TEST_CASE("reading predictions") {
  const auto pm = parse(
      "question_id,agent_alice,agent_bob,truth\n"
      "q1,cat,dog,cat\n"
      "q2,dog,dog,dog\n");
  CHECK(pm.num_questions() == 2);
  CHECK(pm.agents() == std::vector<std::string>{"alice", "bob"});
  CHECK(pm.space().labels() == std::vector<std::string>{"cat", "dog"});
  CHECK(pm.answer(0, 1) == 1);
  REQUIRE(pm.has_truth());
  CHECK((*pm.truth())[0] == 0);
  CHECK(pm.question_ids() == std::vector<std::string>{"q1", "q2"});

  const auto no_truth = parse("question_id,agent_1,agent_2\n1,s2,s10\n2,s10,s10\n");
  CHECK_FALSE(no_truth.has_truth());
  CHECK(no_truth.space().labels() == std::vector<std::string>{"s2", "s10"});

  IngestOptions fixed;
  fixed.labels = LabelSpace({"dog", "cat", "bird"});
  const auto with_labels = parse("question_id,agent_a,agent_b\n1,cat,dog\n", fixed);
  CHECK(with_labels.num_labels() == 3);
  CHECK(with_labels.answer(0, 0) == 1);
}

TEST_CASE("format errors carry line numbers") {
  const std::string header = "question_id,agent_a,agent_b\n";
  CHECK(error_line("id,agent_a\n1,x\n") == 1);
  CHECK(error_line("question_id,agent_a,bogus\n1,x,y\n") == 1);
  CHECK(error_line(header + "1,x,y\n2,x\n") == 3);
  CHECK(error_line(header + "1,x,y\n1,y,x\n") == 3);
  CHECK(error_line(header + "1,x,y\n2,,x\n") == 3);
  CHECK(error_line(header + "1,x,\"y\"z\n") == 2);
  IngestOptions fixed;
  fixed.labels = LabelSpace({"x", "y"});
  CHECK(error_line(header + "1,x,y\n2,x,z\n", fixed) == 3);
  // A single label is not a choice problem.
  CHECK_THROWS_AS(parse(header + "1,x,x\n"), InputError);
}

TEST_CASE("incomplete rows and agent selection") {
  const std::string text =
      "question_id,agent_a,agent_b,agent_c\n"
      "1,x,y,x\n"
      "2,,y,y\n"
      "3,y,y,x\n";
  IngestOptions drop;
  drop.drop_incomplete = true;
  const auto pm = parse(text, drop);
  CHECK(pm.num_questions() == 2);
  CHECK(pm.question_ids() == std::vector<std::string>{"1", "3"});

  IngestOptions pick;
  pick.agents = {"c", "b"};
  const auto sel = parse(text, pick);
  CHECK(sel.agents() == std::vector<std::string>{"c", "b"});
  CHECK(sel.num_questions() == 3);
  CHECK(sel.answer(0, 0) == 0);
  pick.agents = {"zed"};
  CHECK_THROWS_AS(parse(text, pick), FormatError);
}

TEST_CASE("prediction round trip with awkward labels") {
  const LabelSpace space({"plain", "with,comma", "with \"quote\""});
  const PredictionMatrix pm(space, {"x", "y"}, {0, 1, 2, 2, 1, 0}, std::vector<Label>{1, 2, 0},
                            {"a", "b", "c"});
  std::ostringstream out;
  write_predictions(out, pm);
  IngestOptions opts;
  opts.labels = space;
  CHECK(parse(out.str(), opts) == pm);

  const auto sim = simulate_ci(CiSimSpec{.accuracies = {0.6, 0.9}, .k = 12, .m = 300, .seed = 1});
  std::ostringstream sim_out;
  write_predictions(sim_out, sim);
  IngestOptions sim_opts;
  sim_opts.labels = sim.space();
  CHECK(parse(sim_out.str(), sim_opts) == sim);

  std::ostringstream labels;
  const std::vector<Label> agg{2, 0};
  write_labels(labels, {"q1", "q2"}, agg, space);
  CHECK(labels.str() == "question_id,label\nq1,\"with \"\"quote\"\"\"\nq2,plain\n");
}

TEST_CASE("second-order round trip is exact") {
  const auto pm = simulate_ci(CiSimSpec{.accuracies = {0.61, 0.73, 0.88}, .k = 3, .m = 97, .seed = 3});
  const auto so = empirical_second_order(pm);
  std::ostringstream out;
  write_second_order(out, so);
  std::istringstream in(out.str());
  const auto back = read_second_order(in);
  CHECK(back.max_abs_diff(so) == 0.0);
  CHECK(back.imputed_count() == so.imputed_count());

  std::istringstream truncated("i,j,k,l,prob,imputed\n0,0,0,0,1,0\n");
  CHECK_THROWS_AS(read_second_order(truncated), FormatError);
  std::istringstream garbage("i,j,k,l,prob,imputed\n0,0,0,0,abc,0\n");
  CHECK_THROWS_AS(read_second_order(garbage), FormatError);
}

TEST_CASE("atomic write") {
  const auto dir = std::filesystem::temp_directory_path() / "infoagg_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  atomic_write(path, "first");
  atomic_write(path, "second");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(atomic_write(dir / "missing" / "x.txt", "y"), ResourceError);
  CHECK_THROWS_AS(read_predictions_file(dir / "nope.csv"), InputError);
}
