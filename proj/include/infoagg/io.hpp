#pragma once

// CSV formats: predictions (question_id,agent_<name>...,[truth]), aggregated
// labels (question_id,label) and second-order matrices (i,j,k,l,prob,imputed).
// Quoting follows RFC 4180. Format errors carry the 1-based line number of
// the offending record.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infoagg/core.hpp"
#include "infoagg/secondorder.hpp"

namespace infoagg {

struct CsvRecord {
  std::vector<std::string> fields;
  int line = 0;  // line on which the record starts
};

std::vector<CsvRecord> parse_csv(std::istream& in);
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// "s2" < "s10": digit runs compare by value, everything else bytewise.
bool natural_less(std::string_view a, std::string_view b);

struct IngestOptions {
  // Fixed label order. Without it the labels found in the file are used in
  // natural order.
  std::optional<LabelSpace> labels;
  // Drop questions with an empty cell instead of rejecting the file.
  bool drop_incomplete = false;
  // Agent names (without the agent_ prefix) to keep, in this order.
  std::vector<std::string> agents;
};

PredictionMatrix read_predictions(std::istream& in, const IngestOptions& opts = {});
PredictionMatrix read_predictions_file(const std::filesystem::path& path,
                                       const IngestOptions& opts = {});
void write_predictions(std::ostream& out, const PredictionMatrix& pm);

void write_labels(std::ostream& out, const std::vector<std::string>& question_ids,
                  std::span<const Label> labels, const LabelSpace& space);

// Agents and labels are written as 0-based indices; probabilities in
// shortest round-trip form.
void write_second_order(std::ostream& out, const SecondOrderMatrix& so);
SecondOrderMatrix read_second_order(std::istream& in,
                                    SecondOrderProvenance provenance = {});

// Writes to a temporary file in the same directory, then renames it over
// `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

}  // namespace infoagg
