#include "infoagg/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "infoagg/errors.hpp"

namespace infoagg {

namespace {

FormatError format_error(long line, const std::string& what) { return FormatError(what, line); }

}  // namespace

std::vector<CsvRecord> parse_csv(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<CsvRecord> records;
  CsvRecord current{.fields = {}, .line = 1};
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  int line = 1;
  std::size_t i = 0;
  // A record has content once any character (including a separator) was seen.
  bool record_started = false;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    if (record_started) {
      end_field();
      records.push_back(std::move(current));
    }
    current = CsvRecord{.fields = {}, .line = line + 1};
    record_started = false;
  };

  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw format_error(line, "unexpected quote inside an unquoted field");
        }
        quoted = true;
        field_was_quoted = true;
        record_started = true;
        break;
      case ',':
        record_started = true;
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (field_was_quoted) throw format_error(line, "text after a closing quote");
        field.push_back(c);
        record_started = true;
    }
  }
  if (quoted) throw format_error(current.line, "unterminated quoted field");
  if (record_started) {
    end_field();
    records.push_back(std::move(current));
  }
  return records;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

bool natural_less(std::string_view a, std::string_view b) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (is_digit(a[i]) && is_digit(b[j])) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && is_digit(a[ie])) ++ie;
      while (je < b.size() && is_digit(b[je])) ++je;
      auto da = a.substr(i, ie - i);
      auto db = b.substr(j, je - j);
      const auto strip = [](std::string_view s) {
        const auto p = s.find_first_not_of('0');
        return p == std::string_view::npos ? std::string_view{} : s.substr(p);
      };
      const auto sa = strip(da), sb = strip(db);
      if (sa.size() != sb.size()) return sa.size() < sb.size();
      if (sa != sb) return sa < sb;
      if (da.size() != db.size()) return da.size() < db.size();
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return static_cast<unsigned char>(a[i]) < static_cast<unsigned char>(b[j]);
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

namespace {

constexpr std::string_view kAgentPrefix = "agent_";

}  // namespace

PredictionMatrix read_predictions(std::istream& in, const IngestOptions& opts) {
  const auto records = parse_csv(in);
  if (records.empty()) throw format_error(1, "empty predictions file");
  const auto& header = records.front().fields;
  if (header.empty() || header[0] != "question_id") {
    throw format_error(records.front().line, "first column must be question_id");
  }
  std::vector<std::string> names;
  std::optional<std::size_t> truth_col;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h == "truth" && c + 1 == header.size()) {
      truth_col = c;
    } else if (h.starts_with(kAgentPrefix) && h.size() > kAgentPrefix.size()) {
      names.push_back(h.substr(kAgentPrefix.size()));
    } else {
      throw format_error(records.front().line, "unexpected column '" + h + "'");
    }
  }
  if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
    throw format_error(records.front().line, "duplicate agent column");
  }

  // Columns to keep, in output order.
  std::vector<std::size_t> keep;
  if (opts.agents.empty()) {
    for (std::size_t a = 0; a < names.size(); ++a) keep.push_back(a);
  } else {
    for (const auto& want : opts.agents) {
      const auto it = std::find(names.begin(), names.end(), want);
      if (it == names.end()) {
        throw format_error(records.front().line, "no column for agent '" + want + "'");
      }
      keep.push_back(static_cast<std::size_t>(it - names.begin()));
    }
  }
  if (keep.empty()) throw format_error(records.front().line, "no agent columns");

  struct Row {
    int line;
    std::string id;
    std::vector<std::string> answers;
    std::optional<std::string> truth;
  };
  std::vector<Row> rows;
  std::set<std::string> ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
    if (rec.fields.size() != header.size()) {
      throw format_error(rec.line, "expected " + std::to_string(header.size()) + " fields, got " +
                                      std::to_string(rec.fields.size()));
    }
    Row row{.line = rec.line, .id = rec.fields[0], .answers = {}, .truth = std::nullopt};
    if (row.id.empty()) throw format_error(rec.line, "empty question_id");
    if (!ids.insert(row.id).second) {
      throw format_error(rec.line, "duplicate question_id '" + row.id + "'");
    }
    bool incomplete = false;
    for (std::size_t a : keep) {
      row.answers.push_back(rec.fields[a + 1]);
      incomplete |= row.answers.back().empty();
    }
    if (truth_col) {
      row.truth = rec.fields[*truth_col];
      incomplete |= row.truth->empty();
    }
    if (incomplete) {
      if (opts.drop_incomplete) continue;
      throw format_error(rec.line, "missing answer (use --drop-incomplete to skip such questions)");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw format_error(records.back().line, "no complete questions");

  std::optional<LabelSpace> space = opts.labels;
  if (!space) {
    std::set<std::string> seen;
    for (const auto& row : rows) {
      seen.insert(row.answers.begin(), row.answers.end());
      if (row.truth) seen.insert(*row.truth);
    }
    std::vector<std::string> labels(seen.begin(), seen.end());
    std::sort(labels.begin(), labels.end(),
              [](const std::string& a, const std::string& b) { return natural_less(a, b); });
    if (labels.size() < 2) {
      throw InputError("the file uses a single label; pass the full label set explicitly");
    }
    space = LabelSpace(std::move(labels));
  }

  auto lookup = [&](const std::string& name, int line) {
    const auto label = space->find(name);
    if (!label) throw format_error(line, "label '" + name + "' is not in the label set");
    return *label;
  };
  std::vector<Label> answers;
  std::vector<Label> truth;
  std::vector<std::string> question_ids;
  for (const auto& row : rows) {
    question_ids.push_back(row.id);
    for (const auto& a : row.answers) answers.push_back(lookup(a, row.line));
    if (row.truth) truth.push_back(lookup(*row.truth, row.line));
  }
  std::vector<std::string> agents;
  for (std::size_t a : keep) agents.push_back(names[a]);
  std::optional<std::vector<Label>> truth_opt;
  if (truth_col) truth_opt = std::move(truth);
  return PredictionMatrix(std::move(*space), std::move(agents), std::move(answers),
                          std::move(truth_opt), std::move(question_ids));
}

PredictionMatrix read_predictions_file(const std::filesystem::path& path,
                                       const IngestOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_predictions(in, opts);
}

void write_predictions(std::ostream& out, const PredictionMatrix& pm) {
  std::vector<std::string> header{"question_id"};
  for (const auto& a : pm.agents()) header.push_back(std::string(kAgentPrefix) + a);
  if (pm.has_truth()) header.push_back("truth");
  write_csv_row(out, header);
  const auto& space = pm.space();
  std::vector<std::string> fields;
  for (int q = 0; q < pm.num_questions(); ++q) {
    fields.clear();
    fields.push_back(pm.question_ids()[static_cast<std::size_t>(q)]);
    for (Label a : pm.row(q)) fields.push_back(space.name(a));
    if (pm.has_truth()) fields.push_back(space.name((*pm.truth())[static_cast<std::size_t>(q)]));
    write_csv_row(out, fields);
  }
}

void write_labels(std::ostream& out, const std::vector<std::string>& question_ids,
                  std::span<const Label> labels, const LabelSpace& space) {
  if (question_ids.size() != labels.size()) {
    throw DimensionError("question ids and labels differ in length");
  }
  write_csv_row(out, {"question_id", "label"});
  for (std::size_t q = 0; q < labels.size(); ++q) {
    write_csv_row(out, {question_ids[q], space.name(labels[q])});
  }
}

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(const std::string& s, int line, const char* what) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw format_error(line, std::string("invalid ") + what + " '" + s + "'");
  }
  return value;
}

}  // namespace

void write_second_order(std::ostream& out, const SecondOrderMatrix& so) {
  write_csv_row(out, {"i", "j", "k", "l", "prob", "imputed"});
  const int n = so.num_agents(), k = so.num_labels();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
          write_csv_row(out, {std::to_string(i), std::to_string(j), std::to_string(a),
                              std::to_string(b), shortest(so(i, j, a, b)),
                              so.imputed(i, j, a, b) ? "1" : "0"});
        }
}

SecondOrderMatrix read_second_order(std::istream& in, SecondOrderProvenance provenance) {
  const auto records = parse_csv(in);
  if (records.empty() ||
      records.front().fields != std::vector<std::string>{"i", "j", "k", "l", "prob", "imputed"}) {
    throw format_error(1, "expected header i,j,k,l,prob,imputed");
  }
  struct Entry {
    int i, j, k, l;
    double p;
    bool imputed;
  };
  std::vector<Entry> entries;
  int n = 0, k = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != 6) throw format_error(rec.line, "expected 6 fields");
    Entry e{parse_number<int>(rec.fields[0], rec.line, "agent index"),
            parse_number<int>(rec.fields[1], rec.line, "agent index"),
            parse_number<int>(rec.fields[2], rec.line, "label index"),
            parse_number<int>(rec.fields[3], rec.line, "label index"),
            parse_number<double>(rec.fields[4], rec.line, "probability"), false};
    if (rec.fields[5] == "1") e.imputed = true;
    else if (rec.fields[5] != "0") throw format_error(rec.line, "imputed must be 0 or 1");
    if (e.i < 0 || e.j < 0 || e.k < 0 || e.l < 0) throw format_error(rec.line, "negative index");
    n = std::max({n, e.i + 1, e.j + 1});
    k = std::max({k, e.k + 1, e.l + 1});
    entries.push_back(e);
  }
  if (k < 2) throw format_error(records.back().line, "need at least two labels");
  const auto cells = static_cast<std::size_t>(n) * n * k * k;
  if (entries.size() != cells) {
    throw format_error(records.back().line, "expected " + std::to_string(cells) + " entries, got " +
                                               std::to_string(entries.size()));
  }
  std::vector<double> probs(cells, -1.0);
  std::vector<std::uint8_t> imputed(cells, 0);
  for (std::size_t r = 0; r < entries.size(); ++r) {
    const auto& e = entries[r];
    const auto idx = static_cast<std::size_t>(((e.i * n + e.j) * k + e.k) * k + e.l);
    if (probs[idx] >= 0.0) throw format_error(records[r + 1].line, "duplicate entry");
    probs[idx] = e.p;
    imputed[idx] = e.imputed ? 1 : 0;
  }
  return SecondOrderMatrix(n, k, std::move(probs), std::move(imputed), provenance);
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw ResourceError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ResourceError("cannot move output into place at " + path.string());
  }
}

}  // namespace infoagg
