#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "difflab/evaluation.hpp"
#include "difflab/forward.hpp"
#include "difflab/losses.hpp"
#include "difflab/model.hpp"
#include "difflab/schedule.hpp"
#include "difflab/training.hpp"

namespace difflab {

inline constexpr const char* kCheckpointFormat = "difflab-checkpoint-1";
inline constexpr const char* kCsvFormat = "difflab-csv-1";

/// Free-form provenance carried in `#` comment lines plus the seed.
struct Provenance {
  std::uint64_t seed = 0;
  std::vector<std::string> comments;
};

struct ModelCheckpoint {
  NoisePredictor model;
  Schedule schedule;
  Provenance provenance;
};

struct ClassifierCheckpoint {
  Classifier classifier;
  Schedule schedule;
  Provenance provenance;
};

/// Text checkpoint: `key value` header lines, then one parameter per line
/// written with 17 significant digits, so load(save(m)) is bit-exact.
std::string format_checkpoint(const NoisePredictor& m, const Schedule& sched, const Provenance& prov = {});
std::string format_checkpoint(const Classifier& c, const Schedule& sched, const Provenance& prov = {});

ModelCheckpoint parse_model_checkpoint(std::istream& in);
ClassifierCheckpoint parse_classifier_checkpoint(std::istream& in);

void save_checkpoint(const NoisePredictor& m, const Schedule& sched, const std::filesystem::path& path,
                     const Provenance& prov = {});
void save_checkpoint(const Classifier& c, const Schedule& sched, const std::filesystem::path& path,
                     const Provenance& prov = {});
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);
ClassifierCheckpoint load_classifier_checkpoint(const std::filesystem::path& path);

/// Locale-independent shortest-safe decimal: 17 significant digits.
std::string format_double(double v);
/// Parses a full decimal string; throws ParseError(line) on failure.
double parse_double(const std::string& text, std::size_t line = 0);

/// Parses "a,b,c" into doubles.
std::vector<double> parse_double_list(const std::string& text);

/// Writes a `#`-comment metadata block.
void write_metadata(std::ostream& out, const std::vector<std::string>& lines);

/// One row of a sample table.
struct SampleRow {
  int chain = 0;
  int t = 0;
  Vec x;
};

struct SampleTableOptions {
  std::optional<int> label;
  std::optional<std::string> guidance_mode;
  std::optional<double> guidance_scale;
};

/// CSV with header `chain,t,x0..x{d-1}[,label][,guidance,scale]`.
void write_sample_table(std::ostream& out, const std::vector<Trajectory>& chains,
                        const SampleTableOptions& opts);

/// Reads the rows of a sample table written by write_sample_table.
std::vector<SampleRow> read_sample_table(std::istream& in);

/// CSV with header `term,t,nats`: rows L0, Lt for t = 2..T, LT, total.
void write_vlb_report(std::ostream& out, const VlbReport& report);

/// CSV with header `step,loss`.
void write_loss_curve(std::ostream& out, const TrainReport& report);

/// CSV with header `chain,t,x0..x{d-1}` for forward trajectories.
void write_trajectories(std::ostream& out, const std::vector<Trajectory>& chains);

}  // namespace difflab
