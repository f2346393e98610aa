#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "corridorflow/dataset.hpp"
#include "corridorflow/errors.hpp"

using namespace corridorflow;
using namespace corridorflow::data;

namespace {

DataConfig small_config() {
  DataConfig c;
  c.num_chunks = 60;
  return c;
}

}  // namespace

TEST_CASE("quantize keeps nine significant digits") {
  CHECK(quantize(0.123456789123) == 0.123456789);
  CHECK(quantize(-1234.56789012) == -1234.56789);
  CHECK(quantize(0.0) == 0.0);
  CHECK(quantize(quantize(3.14159265358979)) == quantize(3.14159265358979));
}

TEST_CASE("generation is a pure function of config and seed") {
  const auto cfg = small_config();
  const auto a = generate_dataset(cfg, {}, 7);
  const auto b = generate_dataset(cfg, {}, 7);
  const auto c = generate_dataset(cfg, {}, 8);
  REQUIRE(a.size() == 60);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a[0].context.family == synth::Family::line);
}

TEST_CASE("records carry consistent anchor ground truth") {
  for (const auto& r : generate_dataset(small_config(), {}, 3)) {
    REQUIRE(r.chunk.rows() == 16);
    REQUIRE(r.chunk.cols() == synth::kExtendedDim);
    REQUIRE(r.anchor_indices.size() == 3);
    const RowVector sum = r.delta_targets.colwise().sum();
    CHECK((sum - r.pos_targets.row(2)).norm() < 1e-8);
    const RowVector upto =
        r.chunk.middleRows(0, static_cast<Eigen::Index>(r.anchor_indices.back()))
            .rightCols(3)
            .colwise()
            .sum();
    CHECK((upto - r.pos_targets.row(2)).norm() < 1e-8);
    CHECK(r.delta_width >= 0.0);
  }
}

TEST_CASE("write then read round-trips exactly") {
  const auto records = generate_dataset(small_config(), {}, 11);
  std::stringstream ss;
  write_dataset(ss, records);
  const auto back = read_dataset(ss);
  CHECK(back == records);

  auto gen = records.front();
  gen.generated = true;
  const auto line = to_json_line(gen);
  CHECK(line.find("\"generated\":true") != std::string::npos);
  CHECK(from_json_line(line, 1) == gen);
  CHECK(to_json_line(records.front()).find("generated") == std::string::npos);
}

TEST_CASE("file round trip and empty files") {
  const auto dir = std::filesystem::temp_directory_path() / "corridorflow_dataset_test";
  std::filesystem::create_directories(dir);
  const auto records = generate_dataset(small_config(), {}, 12);
  write_dataset(dir / "d.jsonl", records);
  CHECK(read_dataset(dir / "d.jsonl") == records);
  std::ofstream(dir / "empty.jsonl").close();
  CHECK(read_dataset(dir / "empty.jsonl").empty());
  CHECK_THROWS_AS(read_dataset(dir / "missing.jsonl"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed input names the line") {
  const auto records = generate_dataset(small_config(), {}, 13);
  std::stringstream ss;
  write_dataset(ss, std::vector<Record>(records.begin(), records.begin() + 3));
  std::string text = ss.str();
  text.resize(text.size() - 40);
  std::stringstream truncated(text);
  try {
    read_dataset(truncated);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  auto j = nlohmann::json::parse(to_json_line(records[0]));
  j.erase("delta_width");
  std::stringstream missing(to_json_line(records[0]) + "\n" + j.dump() + "\n");
  try {
    read_dataset(missing);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("delta_width") != std::string::npos);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("held-out split is by episode") {
  auto cfg = small_config();
  cfg.num_chunks = 400;
  const auto records = generate_dataset(cfg, {}, 5);
  const auto mask = heldout_mask(records, 0.1);
  std::map<std::uint64_t, std::set<bool>> by_episode;
  std::size_t held = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_episode[records[i].seed].insert(mask[i]);
    held += mask[i] ? 1 : 0;
  }
  std::size_t held_episodes = 0;
  for (const auto& [_, s] : by_episode) {
    CHECK(s.size() == 1);
    held_episodes += *s.begin() ? 1 : 0;
  }
  CHECK(held_episodes == by_episode.size() / 10);
  CHECK(held > 0);
  for (bool m : heldout_mask(records, 0.0)) CHECK_FALSE(m);
}

TEST_CASE("data config validation") {
  DataConfig c = small_config();
  c.chunk_length = 100;
  CHECK_THROWS(c.validate());
  c = small_config();
  c.families.clear();
  CHECK_THROWS(c.validate());
  c = small_config();
  c.heldout_fraction = 1.5;
  CHECK_THROWS(c.validate());
}
