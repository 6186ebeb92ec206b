#include "difflab/persistence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace difflab {

namespace {

constexpr const char* kNoisePredictorTag = "noise_predictor";
constexpr const char* kClassifierTag = "classifier";

struct Header {
  std::string model;
  Architecture arch;
  int num_classes = 0;
  ScheduleSpec schedule;
  Provenance provenance;
  Vec params;
};

std::string join_ints(const std::vector<int>& v) {
  if (v.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string format_common(const std::string& model_tag, const Architecture& arch, int num_classes,
                          const Schedule& sched, const Provenance& prov, ConstSpan params) {
  std::ostringstream out;
  write_metadata(out, prov.comments);
  const ScheduleSpec& spec = sched.spec();
  out << "format " << kCheckpointFormat << '\n'
      << "model " << model_tag << '\n'
      << "data_dim " << std::to_string(arch.data_dim) << '\n'
      << "hidden " << join_ints(arch.hidden) << '\n'
      << "num_classes " << std::to_string(num_classes) << '\n'
      << "schedule " << to_string(spec.kind) << '\n'
      << "steps " << std::to_string(spec.steps) << '\n'
      << "beta_start " << format_double(spec.beta_start) << '\n'
      << "beta_end " << format_double(spec.beta_end) << '\n'
      << "cosine_offset " << format_double(spec.cosine_offset) << '\n'
      << "seed " << std::to_string(prov.seed) << '\n'
      << "params " << std::to_string(params.size()) << '\n';
  for (double v : params) out << format_double(v) << '\n';
  out << "end\n";
  return out.str();
}

long parse_long(const std::string& text, std::size_t line) {
  long value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ParseError(line, "expected an integer, got '" + text + "'");
  return value;
}

std::uint64_t parse_u64(const std::string& text, std::size_t line) {
  std::uint64_t value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ParseError(line, "expected an unsigned integer, got '" + text + "'");
  return value;
}

std::vector<int> parse_widths(const std::string& text, std::size_t line) {
  std::vector<int> out;
  if (text == "-") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_long(item, line)));
  return out;
}

Header parse_header(std::istream& in) {
  static const char* const kKeys[] = {"format", "model", "data_dim", "hidden", "num_classes",
                                      "schedule", "steps", "beta_start", "beta_end",
                                      "cosine_offset", "seed", "params"};
  Header h;
  std::string line;
  std::size_t line_no = 0;
  std::size_t key_index = 0;
  long n_params = -1;
  while (key_index < std::size(kKeys)) {
    if (!std::getline(in, line)) {
      throw ParseError(line_no + 1, std::string("unexpected end of file, expected '") +
                                        kKeys[key_index] + "'");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') {
      h.provenance.comments.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos) throw ParseError(line_no, "expected 'key value', got '" + line + "'");
    const std::string key = line.substr(0, space);
    const std::string value = line.substr(space + 1);
    if (key != kKeys[key_index]) {
      throw ParseError(line_no, "expected key '" + std::string(kKeys[key_index]) + "', got '" + key + "'");
    }
    try {
      switch (key_index) {
        case 0:
          if (value != kCheckpointFormat) throw ParseError(line_no, "unsupported format version '" + value + "'");
          break;
        case 1:
          h.model = value;
          break;
        case 2:
          h.arch.data_dim = static_cast<int>(parse_long(value, line_no));
          break;
        case 3:
          h.arch.hidden = parse_widths(value, line_no);
          break;
        case 4:
          h.num_classes = static_cast<int>(parse_long(value, line_no));
          break;
        case 5:
          h.schedule.kind = schedule_kind_from_string(value);
          break;
        case 6:
          h.schedule.steps = static_cast<int>(parse_long(value, line_no));
          break;
        case 7:
          h.schedule.beta_start = parse_double(value, line_no);
          break;
        case 8:
          h.schedule.beta_end = parse_double(value, line_no);
          break;
        case 9:
          h.schedule.cosine_offset = parse_double(value, line_no);
          break;
        case 10:
          h.provenance.seed = parse_u64(value, line_no);
          break;
        case 11:
          n_params = parse_long(value, line_no);
          if (n_params < 0) throw ParseError(line_no, "negative parameter count");
          break;
      }
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
    ++key_index;
  }
  h.params.reserve(static_cast<std::size_t>(std::min(n_params, 1L << 20)));
  for (long i = 0; i < n_params; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError(line_no + 1, "truncated parameter block: expected " + std::to_string(n_params) +
                                        " values, got " + std::to_string(i));
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const double v = parse_double(line, line_no);
    if (!std::isfinite(v)) throw ParseError(line_no, "nonfinite parameter");
    h.params.push_back(v);
  }
  if (!std::getline(in, line) || (line != "end" && line != "end\r")) {
    throw ParseError(line_no + 1, "missing 'end' marker");
  }
  return h;
}

Schedule schedule_from(const Header& h) {
  try {
    return make_schedule(h.schedule);
  } catch (const ValidationError& e) {
    throw ParseError(0, std::string("invalid schedule in checkpoint: ") + e.what());
  }
}

void load_params(Mlp& net, const Vec& params) {
  if (params.size() != net.param_count()) {
    throw ParseError(0, "parameter count " + std::to_string(params.size()) +
                            " does not match architecture (" + std::to_string(net.param_count()) + ")");
  }
  std::copy(params.begin(), params.end(), net.params().begin());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, std::size_t line) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ParseError(line, "expected a number, got '" + text + "'");
  }
  return value;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_double(item));
    } catch (const ParseError&) {
      throw ValidationError("list", "expected comma-separated numbers, got '" + text + "'");
    }
  }
  if (out.empty()) throw ValidationError("list", "expected at least one number");
  return out;
}

void write_metadata(std::ostream& out, const std::vector<std::string>& lines) {
  for (const std::string& line : lines) out << "# " << line << '\n';
}

std::string format_checkpoint(const NoisePredictor& m, const Schedule& sched, const Provenance& prov) {
  return format_common(kNoisePredictorTag, m.arch(), m.num_classes(), sched, prov, m.net().params());
}

std::string format_checkpoint(const Classifier& c, const Schedule& sched, const Provenance& prov) {
  return format_common(kClassifierTag, c.arch(), c.num_classes(), sched, prov, c.net().params());
}

ModelCheckpoint parse_model_checkpoint(std::istream& in) {
  Header h = parse_header(in);
  if (h.model != kNoisePredictorTag) throw ParseError(0, "checkpoint holds a '" + h.model + "', not a noise predictor");
  NoisePredictor m;
  try {
    m = NoisePredictor(h.arch, h.num_classes);
  } catch (const ValidationError& e) {
    throw ParseError(0, e.what());
  }
  load_params(m.net(), h.params);
  return {std::move(m), schedule_from(h), std::move(h.provenance)};
}

ClassifierCheckpoint parse_classifier_checkpoint(std::istream& in) {
  Header h = parse_header(in);
  if (h.model != kClassifierTag) throw ParseError(0, "checkpoint holds a '" + h.model + "', not a classifier");
  Classifier c;
  try {
    c = Classifier(h.arch, h.num_classes);
  } catch (const ValidationError& e) {
    throw ParseError(0, e.what());
  }
  load_params(c.net(), h.params);
  return {std::move(c), schedule_from(h), std::move(h.provenance)};
}

void save_checkpoint(const NoisePredictor& m, const Schedule& sched, const std::filesystem::path& path,
                     const Provenance& prov) {
  write_file(path, format_checkpoint(m, sched, prov));
}

void save_checkpoint(const Classifier& c, const Schedule& sched, const std::filesystem::path& path,
                     const Provenance& prov) {
  write_file(path, format_checkpoint(c, sched, prov));
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  return parse_model_checkpoint(in);
}

ClassifierCheckpoint load_classifier_checkpoint(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  return parse_classifier_checkpoint(in);
}

void write_sample_table(std::ostream& out, const std::vector<Trajectory>& chains,
                        const SampleTableOptions& opts) {
  const std::size_t d = chains.empty() || chains.front().states.empty() ? 0 : chains.front().states.front().x.size();
  out << "chain,t";
  for (std::size_t i = 0; i < d; ++i) out << ",x" << std::to_string(i);
  if (opts.label) out << ",label";
  if (opts.guidance_mode) out << ",guidance,scale";
  out << '\n';
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (const TrajectoryState& s : chains[c].states) {
      out << std::to_string(c) << ',' << std::to_string(s.t);
      for (double v : s.x) out << ',' << format_double(v);
      if (opts.label) out << ',' << std::to_string(*opts.label);
      if (opts.guidance_mode) {
        out << ',' << *opts.guidance_mode << ',' << format_double(opts.guidance_scale.value_or(0.0));
      }
      out << '\n';
    }
  }
}

std::vector<SampleRow> read_sample_table(std::istream& in) {
  std::vector<SampleRow> rows;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::size_t dims = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> cells = split_csv(line);
    if (header.empty()) {
      header = cells;
      if (header.size() < 3 || header[0] != "chain" || header[1] != "t") {
        throw ParseError(line_no, "sample table header must start with 'chain,t,x0'");
      }
      while (2 + dims < header.size() && header[2 + dims] == "x" + std::to_string(dims)) ++dims;
      if (dims == 0) throw ParseError(line_no, "sample table has no coordinate columns");
      continue;
    }
    if (cells.size() != header.size()) throw ParseError(line_no, "row width does not match header");
    SampleRow row;
    row.chain = static_cast<int>(parse_long(cells[0], line_no));
    row.t = static_cast<int>(parse_long(cells[1], line_no));
    row.x.reserve(dims);
    for (std::size_t i = 0; i < dims; ++i) row.x.push_back(parse_double(cells[2 + i], line_no));
    rows.push_back(std::move(row));
  }
  if (header.empty()) throw ParseError(line_no, "sample table has no header");
  return rows;
}

void write_vlb_report(std::ostream& out, const VlbReport& report) {
  out << "term,t,nats\n";
  out << "L0,1," << format_double(report.l0) << '\n';
  for (std::size_t i = 0; i < report.lt.size(); ++i) {
    out << "Lt," << std::to_string(i + 2) << ',' << format_double(report.lt[i]) << '\n';
  }
  out << "LT," << std::to_string(report.lt.size() + 1) << ',' << format_double(report.l_final) << '\n';
  out << "total,," << format_double(report.total) << '\n';
}

void write_loss_curve(std::ostream& out, const TrainReport& report) {
  out << "step,loss\n";
  for (const auto& [step, loss] : report.loss_curve) {
    out << std::to_string(step) << ',' << format_double(loss) << '\n';
  }
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& chains) {
  write_sample_table(out, chains, {});
}

}  // namespace difflab
