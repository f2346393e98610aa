#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "corridorflow/corridor.hpp"
#include "corridorflow/synthdata.hpp"

namespace corridorflow::data {

/// One chunk as persisted: raw extended actions plus its anchor ground truth.
struct Record {
  synth::TaskContext context;
  Matrix chunk;  // T x 7
  std::vector<std::size_t> anchor_indices;
  Matrix delta_targets;  // K x 3
  Matrix pos_targets;    // K x 3
  double delta_width = 0.0;
  std::uint64_t seed = 0;  // episode seed; chunks of one episode share it
  bool generated = false;

  friend bool operator==(const Record&, const Record&) = default;
};

struct DataConfig {
  std::string path;
  std::optional<std::uint64_t> seed;
  std::size_t num_chunks = 4000;
  std::size_t chunk_length = 16;  // T
  std::size_t chunk_stride = 4;
  double noise_std = 0.002;       // m, actuation noise on commanded deltas
  std::vector<synth::Family> families{synth::Family::line, synth::Family::arc,
                                      synth::Family::min_jerk_pick_place};
  synth::GeneratorConfig generator;
  double heldout_fraction = 0.1;

  void validate() const;
};

/// Rounds to 9 significant digits, the precision stored on disk.
double quantize(double x);

/// Builds a record from a chunk; all reals are quantized.
Record make_record(const synth::Chunk& chunk, const corridor::CorridorConfig& cfg,
                   std::uint64_t episode_seed);

/// Pure function of (config, master seed). Episode e uses family
/// families[e % F] and seed derive_seed(master, e).
std::vector<Record> generate_dataset(const DataConfig& cfg, const corridor::CorridorConfig& corr,
                                     std::uint64_t master_seed);

/// Held-out membership by episode: the j-th distinct episode (in record
/// order) is held out when floor((j+1) f) > floor(j f).
std::vector<bool> heldout_mask(const std::vector<Record>& records, double fraction);

std::string to_json_line(const Record& r);
Record from_json_line(const std::string& line, std::size_t line_number);

void write_dataset(std::ostream& os, const std::vector<Record>& records);
void write_dataset(const std::filesystem::path& path, const std::vector<Record>& records);
std::vector<Record> read_dataset(std::istream& is);
std::vector<Record> read_dataset(const std::filesystem::path& path);

}  // namespace corridorflow::data
