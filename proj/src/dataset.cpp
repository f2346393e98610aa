#include "corridorflow/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include "json.hpp"
#include <set>
#include <string>

#include "corridorflow/errors.hpp"
#include "corridorflow/rng.hpp"

namespace corridorflow::data {

using nlohmann::json;

void DataConfig::validate() const {
  generator.validate();
  if (num_chunks == 0) throw InvalidArgument("data: num_chunks must be >= 1");
  if (chunk_length < 2 || chunk_length > generator.steps)
    throw InvalidArgument("data: chunk_length must lie in [2, T_full]");
  if (chunk_stride == 0) throw InvalidArgument("data: chunk_stride must be >= 1");
  if (!(noise_std >= 0.0)) throw InvalidArgument("data: noise_std must be >= 0");
  if (families.empty()) throw InvalidArgument("data: at least one family required");
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0))
    throw InvalidArgument("data: heldout_fraction must lie in [0, 1)");
}

double quantize(double x) {
  if (!std::isfinite(x)) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

namespace {

Matrix quantized(Matrix m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = quantize(m.data()[i]);
  return m;
}

geometry::Vec3 quantized(geometry::Vec3 v) {
  for (double& x : v) x = quantize(x);
  return v;
}

}  // namespace

Record make_record(const synth::Chunk& chunk, const corridor::CorridorConfig& cfg,
                   std::uint64_t episode_seed) {
  const corridor::AnchorSpec spec = synth::build_anchor_spec(chunk.actions, chunk.segment, cfg);
  Record r;
  r.context = chunk.context;
  r.context.start_pos = quantized(r.context.start_pos);
  r.context.goal_pos = quantized(r.context.goal_pos);
  if (r.context.via_pos) r.context.via_pos = quantized(*r.context.via_pos);
  r.context.progress = quantize(r.context.progress);
  r.chunk = quantized(chunk.actions);
  r.anchor_indices = spec.indices.indices;
  r.delta_targets = quantized(spec.delta_targets);
  r.pos_targets = quantized(spec.pos_targets);
  r.delta_width = quantize(spec.width);
  r.seed = episode_seed;
  return r;
}

std::vector<Record> generate_dataset(const DataConfig& cfg, const corridor::CorridorConfig& corr,
                                     std::uint64_t master_seed) {
  cfg.validate();
  corr.validate();
  std::vector<Record> out;
  out.reserve(cfg.num_chunks);
  for (std::uint64_t e = 0; out.size() < cfg.num_chunks; ++e) {
    const synth::Family family = cfg.families[e % cfg.families.size()];
    const std::uint64_t seed = derive_seed(master_seed, e);
    const synth::Episode ep = synth::gen_episode(family, seed, cfg.generator);
    const auto chunks =
        synth::chunk_episode(ep, cfg.chunk_length, cfg.noise_std, cfg.chunk_stride, derive_seed(seed, 1));
    for (const auto& c : chunks) {
      if (out.size() == cfg.num_chunks) break;
      out.push_back(make_record(c, corr, seed));
    }
  }
  return out;
}

std::vector<bool> heldout_mask(const std::vector<Record>& records, double fraction) {
  std::vector<bool> mask(records.size(), false);
  std::size_t ordinal = 0;
  bool held = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i == 0 || records[i].seed != records[i - 1].seed) {
      const double j = static_cast<double>(ordinal++);
      held = std::floor((j + 1.0) * fraction) > std::floor(j * fraction);
    }
    mask[i] = held;
  }
  return mask;
}

namespace {

json vec3_json(const geometry::Vec3& v) { return json::array({v[0], v[1], v[2]}); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(quantize(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

const json& field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw SchemaError(std::string("missing field '") + name + "'");
  return *it;
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw SchemaError(std::string("field '") + what + "' must be a number");
  return j.get<double>();
}

geometry::Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw SchemaError(std::string("field '") + what + "' must be a 3-vector");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

Matrix matrix_from(const json& j, const char* what, Eigen::Index expect_cols) {
  if (!j.is_array()) throw SchemaError(std::string("field '") + what + "' must be an array of rows");
  Matrix m(static_cast<Eigen::Index>(j.size()), expect_cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != expect_cols)
      throw SchemaError(std::string("field '") + what + "' has a row of the wrong width");
    for (std::size_t c = 0; c < row.size(); ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = number(row[c], what);
  }
  return m;
}

}  // namespace

std::string to_json_line(const Record& r) {
  json ctx = {
      {"start_pos", vec3_json(r.context.start_pos)},
      {"goal_pos", vec3_json(r.context.goal_pos)},
      {"via_pos", r.context.via_pos ? vec3_json(*r.context.via_pos) : json(nullptr)},
      {"family", synth::to_string(r.context.family)},
      {"progress", r.context.progress},
      {"vector", r.context.vector()},
  };
  json j = {
      {"context", std::move(ctx)},
      {"chunk", matrix_json(r.chunk)},
      {"anchor_indices", r.anchor_indices},
      {"delta_targets", matrix_json(r.delta_targets)},
      {"pos_targets", matrix_json(r.pos_targets)},
      {"delta_width", quantize(r.delta_width)},
      {"seed", r.seed},
  };
  if (r.generated) j["generated"] = true;
  return j.dump();
}

Record from_json_line(const std::string& line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_number, e.what());
  }
  try {
    if (!j.is_object()) throw SchemaError("record must be a JSON object");
    Record r;
    const json& ctx = field(j, "context");
    r.context.start_pos = vec3_from(field(ctx, "start_pos"), "start_pos");
    r.context.goal_pos = vec3_from(field(ctx, "goal_pos"), "goal_pos");
    const json& via = field(ctx, "via_pos");
    if (!via.is_null()) r.context.via_pos = vec3_from(via, "via_pos");
    const json& fam = field(ctx, "family");
    if (!fam.is_string()) throw SchemaError("field 'family' must be a string");
    r.context.family = synth::family_from_string(fam.get<std::string>());
    r.context.progress = number(field(ctx, "progress"), "progress");

    r.chunk = matrix_from(field(j, "chunk"), "chunk", synth::kExtendedDim);
    const json& idx = field(j, "anchor_indices");
    if (!idx.is_array()) throw SchemaError("field 'anchor_indices' must be an array");
    for (const auto& v : idx) {
      if (!v.is_number_unsigned()) throw SchemaError("anchor indices must be non-negative integers");
      r.anchor_indices.push_back(v.get<std::size_t>());
    }
    r.delta_targets = matrix_from(field(j, "delta_targets"), "delta_targets", 3);
    r.pos_targets = matrix_from(field(j, "pos_targets"), "pos_targets", 3);
    r.delta_width = number(field(j, "delta_width"), "delta_width");
    const json& seed = field(j, "seed");
    if (!seed.is_number_unsigned()) throw SchemaError("field 'seed' must be a non-negative integer");
    r.seed = seed.get<std::uint64_t>();
    if (auto g = j.find("generated"); g != j.end()) r.generated = g->is_boolean() && g->get<bool>();
    return r;
  } catch (const SchemaError& e) {
    throw SchemaError("line " + std::to_string(line_number) + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw SchemaError("line " + std::to_string(line_number) + ": " + e.what());
  }
}

void write_dataset(std::ostream& os, const std::vector<Record>& records) {
  for (const auto& r : records) os << to_json_line(r) << '\n';
  if (!os) throw IoError("dataset write failed");
}

void write_dataset(const std::filesystem::path& path, const std::vector<Record>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  write_dataset(os, records);
}

std::vector<Record> read_dataset(std::istream& is) {
  std::vector<Record> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (line.empty()) continue;
    out.push_back(from_json_line(line, number));
  }
  return out;
}

std::vector<Record> read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_dataset(is);
}

}  // namespace corridorflow::data
