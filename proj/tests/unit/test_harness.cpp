#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "corridorflow/checkpoint.hpp"
#include "corridorflow/dataset.hpp"
#include "corridorflow/errors.hpp"
#include "corridorflow/harness.hpp"

using namespace corridorflow;
namespace fs = std::filesystem;

namespace {

config::RunConfig small_run() {
  config::RunConfig c;
  c.data.num_chunks = 300;
  c.data.chunk_length = 8;
  c.model.cond_dim = 8;
  c.model.hidden = 24;
  c.model.anchor_hidden = 8;
  c.train.seed = 5;
  c.train.steps = 30;
  c.train.eval_every = 10;
  c.train.batch_size = 8;
  c.eval.max_records = 12;
  return c;
}

std::vector<data::Record> small_records(const config::RunConfig& c) {
  return data::generate_dataset(c.data, c.corridor, 21);
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("corridorflow_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string dump(const std::vector<nlohmann::json>& log) {
  std::string s;
  for (const auto& l : log) s += l.dump() + "\n";
  return s;
}

}  // namespace

TEST_CASE("prepare_data") {
  auto c = small_run();
  const auto d = harness::prepare_data(small_records(c), c);
  CHECK(d.x_raw.rows() == 300);
  CHECK(d.x_raw.cols() == 8 * 7);
  CHECK(d.contexts.cols() == static_cast<Eigen::Index>(synth::kContextDim));
  CHECK(d.specs.size() == 300);
  CHECK(d.train_rows.size() + d.eval_rows.size() == 300);
  CHECK_FALSE(d.eval_rows.empty());
  CHECK(d.x_raw(0, 7 + 5) == d.records[0].chunk(1, 5));
  c.corridor.enable_extra_a = false;
  const auto d4 = harness::prepare_data(small_records(c), c);
  CHECK(d4.x_raw.cols() == 8 * 4);
  CHECK_THROWS_AS(harness::prepare_data({}, c), ConfigError);
}

TEST_CASE("oracle samples give a perfect report") {
  auto c = small_run();
  const auto d = harness::prepare_data(small_records(c), c);
  std::vector<Matrix> gen, anchors;
  for (auto r : d.eval_rows) {
    gen.push_back(d.records[r].chunk);
    anchors.push_back(d.specs[r].delta_targets);
  }
  const auto rep = harness::evaluate_samples(gen, anchors, d, d.eval_rows, c.corridor);
  CHECK(rep.records == d.eval_rows.size());
  CHECK(rep.corridor_violation_rate == 0.0);
  CHECK(rep.endpoint_error == 0.0);
  CHECK(rep.anchor_mae == 0.0);
  std::size_t total = 0;
  for (const auto& [_, f] : rep.per_family) total += f.count;
  CHECK(total == rep.records);

  std::vector<Matrix> shifted = gen;
  for (auto& m : shifted) m.col(4).array() += 1.0;
  const auto bad = harness::evaluate_samples(shifted, anchors, d, d.eval_rows, c.corridor);
  CHECK(bad.corridor_violation_rate == 1.0);
  CHECK(bad.endpoint_error == doctest::Approx(8.0));
}

TEST_CASE("zero-step training returns the initialization") {
  auto c = small_run();
  c.train.steps = 0;
  const auto dir = scratch("zero");
  const auto d = harness::prepare_data(small_records(c), c);
  const auto res = harness::train(c, d, {.out_dir = dir});
  REQUIRE(res.log.size() == 1);
  CHECK(res.log[0]["step"] == 0);
  CHECK(res.log[0]["train_loss"].is_null());
  const auto ck = checkpoint::load(dir / "checkpoint.json");
  CHECK(ck.step == 0);
  CHECK(ck.optimizer.step == 0);
  for (std::size_t i = 0; i < res.model.params().size(); ++i) {
    CHECK(ck.model.params()[i].value == res.model.params()[i].value);
    CHECK(ck.optimizer.first_moment[i].isZero(0.0));
  }
  auto again = harness::train(c, d);
  for (std::size_t i = 0; i < res.model.params().size(); ++i)
    CHECK(again.model.params()[i].value == res.model.params()[i].value);
  const auto rep = res.final_report;
  CHECK(std::isfinite(rep.endpoint_error));
  CHECK(std::isfinite(rep.fm_val_loss));
  CHECK(rep.corridor_violation_rate >= 0.0);
  CHECK(rep.corridor_violation_rate <= 1.0);
}

TEST_CASE("training is deterministic and logs monotone JSON lines") {
  auto c = small_run();
  const auto dir = scratch("det");
  const auto d = harness::prepare_data(small_records(c), c);
  const auto a = harness::train(c, d, {.out_dir = dir});
  const auto b = harness::train(c, d);
  CHECK(dump(a.log) == dump(b.log));
  CHECK(a.loss_curve == b.loss_curve);
  REQUIRE(a.log.size() == 4);
  std::ifstream f(dir / "metrics.jsonl");
  std::string line;
  long prev = -1;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["step"].get<long>() > prev);
    prev = j["step"].get<long>();
    CHECK(j == a.log[n++]);
  }
  CHECK(n == 4);
  CHECK(prev == 30);
  CHECK(a.log[3]["train_loss"]["total"].get<double>() > 0.0);
  CHECK(a.loss_curve.size() == 30);

  auto other = c;
  other.train.seed = 6;
  CHECK(dump(harness::train(other, d).log) != dump(a.log));
}

TEST_CASE("checkpoint round trip preserves evaluation bit for bit") {
  auto c = small_run();
  const auto dir = scratch("ckpt");
  const auto d = harness::prepare_data(small_records(c), c);
  auto res = harness::train(c, d, {.out_dir = dir});
  auto ck = checkpoint::load(dir / "checkpoint.json");
  CHECK(ck.step == 30);
  CHECK(ck.optimizer.step == 30);
  CHECK(ck.model.arch() == res.model.arch());
  for (std::size_t i = 0; i < res.model.params().size(); ++i) {
    CHECK(ck.model.params()[i].value == res.model.params()[i].value);
    CHECK(ck.optimizer.second_moment[i] == res.optimizer.second_moment[i]);
  }
  CHECK(ck.model.normalizer().mean == res.model.normalizer().mean);
  const auto r1 = harness::to_json(harness::evaluate(res.model, d, c.eval, c.corridor));
  const auto r2 = harness::to_json(harness::evaluate(ck.model, d, c.eval, c.corridor));
  CHECK(r1.dump() == r2.dump());
  CHECK(r1 == res.log.back()["eval"]);

  std::ofstream(dir / "bad.json") << R"({"format": "other"})";
  CHECK_THROWS_AS(checkpoint::load(dir / "bad.json"), SchemaError);
  CHECK_THROWS_AS(checkpoint::load(dir / "missing.json"), IoError);
}

TEST_CASE("evaluation rejects mismatched architectures") {
  auto c = small_run();
  c.train.steps = 0;
  const auto d7 = harness::prepare_data(small_records(c), c);
  auto res = harness::train(c, d7);
  auto c4 = c;
  c4.corridor.enable_extra_a = false;
  const auto d4 = harness::prepare_data(small_records(c4), c4);
  CHECK_THROWS_AS(harness::evaluate(res.model, d4, c4.eval, c4.corridor), ConfigError);
}

TEST_CASE("numerical blow-up aborts with the last checkpoint kept") {
  auto c = small_run();
  c.train.optimizer.lr = 1e200;
  const auto dir = scratch("nan");
  const auto d = harness::prepare_data(small_records(c), c);
  CHECK_THROWS_AS(harness::train(c, d, {.out_dir = dir}), NumericalError);
  const auto ck = checkpoint::load(dir / "checkpoint.json");
  CHECK(ck.step == 0);
}

TEST_CASE("missing seed is a config error") {
  auto c = small_run();
  c.train.seed.reset();
  const auto d = harness::prepare_data(small_records(c), c);
  CHECK_THROWS_AS(harness::train(c, d), ConfigError);
}

TEST_CASE("plain flow matching detection") {
  corridor::CorridorConfig cc;
  CHECK_FALSE(harness::plain_flow_matching(cc));
  cc.enable_buf = cc.enable_cons = false;
  CHECK_FALSE(harness::plain_flow_matching(cc));
  cc.lambda_dp = 0.0;
  CHECK(harness::plain_flow_matching(cc));
}

TEST_CASE("ablation variants") {
  const auto base = small_run();
  const auto v = harness::ablation_variants(base);
  REQUIRE(v.size() == 9);
  const char* names[] = {"baseline-FM", "pos", "delta-pos", "extra-A", "merge",
                         "merge+buf",   "merge+cons", "full", "full-RDP"};
  for (std::size_t i = 0; i < 9; ++i) CHECK(v[i].first == names[i]);
  CHECK(harness::plain_flow_matching(v[0].second.corridor));
  CHECK_FALSE(v[0].second.corridor.enable_extra_a);
  CHECK(v[1].second.corridor.target_mode == corridor::TargetMode::pos);
  CHECK(v[3].second.corridor.enable_extra_a);
  CHECK(v[3].second.corridor.lambda_dp == 0.0);
  CHECK(v[5].second.corridor.enable_buf);
  CHECK_FALSE(v[5].second.corridor.enable_cons);

  auto full = config::to_json(v[7].second);
  auto no_rdp = config::to_json(v[8].second);
  CHECK(full["corridor"]["anchor_method"] == "rdp_dp");
  CHECK(no_rdp["corridor"]["anchor_method"] == "uniform");
  const auto patch = nlohmann::json::diff(full, no_rdp);
  REQUIRE(patch.size() == 1);
  CHECK(patch[0]["path"] == "/corridor/anchor_method");
}

TEST_CASE("ablation suite mechanics") {
  auto c = small_run();
  c.train.steps = 0;
  const auto dir = scratch("ablate");
  const auto records = small_records(c);
  const auto rows = harness::run_ablation_suite(c, records, dir);
  REQUIRE(rows.size() == 9);
  for (const auto& r : rows) {
    CHECK(r.ok);
    CHECK(r.log.size() == 1);
    CHECK(fs::exists(dir / r.variant / "metrics.jsonl"));
  }
  std::ifstream csv(dir / "ablation.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == harness::kAblationCsvHeader);
  std::size_t lines = 0;
  for (std::string l; std::getline(csv, l);) ++lines;
  CHECK(lines == 9);
  CHECK(fs::exists(dir / "ablation.json"));

  c.train.steps = 12;
  const auto trained = harness::run_ablation_suite(c, records);
  const auto fm_cfg = harness::ablation_variants(c)[0].second;
  const auto standalone = harness::train(fm_cfg, harness::prepare_data(records, fm_cfg));
  CHECK(dump(trained[0].log) == dump(standalone.log));

  auto broken = c;
  broken.train.optimizer.lr = 1e200;
  const auto failed = harness::run_ablation_suite(broken, records);
  REQUIRE(failed.size() == 9);
  for (const auto& r : failed) {
    CHECK_FALSE(r.ok);
    CHECK_FALSE(r.error.empty());
  }
  CHECK(harness::ablation_csv(failed).find("nan") != std::string::npos);
}

TEST_CASE("line family: training lowers the violation rate") {
  config::RunConfig c;
  c.data.families = {synth::Family::line};
  c.data.seed = 3;
  c.train.seed = 3;
  c.validate();
  const auto records = data::generate_dataset(c.data, c.corridor, 3);
  const auto r = harness::train(c, harness::prepare_data(records, c));
  const auto& first = r.log.front()["eval"];
  const auto& last = r.log.back()["eval"];
  CHECK(r.log.back()["step"] == 2000);
  CHECK(last["corridor_violation_rate"].get<double>() < first["corridor_violation_rate"].get<double>());
  CHECK(last["endpoint_error"].get<double>() < first["endpoint_error"].get<double>());
}
