#include "corridorflow/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "corridorflow/checkpoint.hpp"
#include "corridorflow/config.hpp"
#include "corridorflow/dataset.hpp"
#include "corridorflow/errors.hpp"
#include "corridorflow/flowmatch.hpp"
#include "corridorflow/geometry.hpp"
#include "corridorflow/harness.hpp"

namespace corridorflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string out_dir;
  std::string in;
  std::string checkpoint;
  std::string method = "rdp_dp";
  std::optional<std::uint64_t> seed;
  std::size_t k = 0;
  std::size_t coords = 200;
  std::size_t batch = 8;
  double tol = 1e-4;
};

config::RunConfig load_config(const Options& o) {
  if (o.config.empty()) return {};
  return config::load_run_config(o.config);
}

void echo_config(const config::RunConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream f(dir / "config.json", std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + (dir / "config.json").string() + "'");
  f << config::to_json(cfg).dump(2) << '\n';
}

std::vector<data::Record> load_records(const config::RunConfig& cfg) {
  if (!cfg.data.path.empty()) return data::read_dataset(fs::path(cfg.data.path));
  if (!cfg.data.seed) throw ConfigError("missing field: data.path (or data.seed to generate in memory)");
  return data::generate_dataset(cfg.data, cfg.corridor, *cfg.data.seed);
}

fs::path require_out_dir(const Options& o) {
  if (o.out_dir.empty()) throw ConfigError("missing option: --out-dir");
  return o.out_dir;
}

fs::path checkpoint_path(const Options& o) {
  if (!o.checkpoint.empty()) return o.checkpoint;
  if (!o.out_dir.empty()) return fs::path(o.out_dir) / "checkpoint.json";
  throw ConfigError("missing option: --checkpoint");
}

int cmd_gen_data(const Options& o, std::ostream& out) {
  config::RunConfig cfg = load_config(o);
  const auto seed = o.seed ? o.seed : cfg.data.seed;
  if (!seed) throw ConfigError("missing field: seed (pass --seed)");
  cfg.data.seed = seed;
  cfg.validate();
  const fs::path path = o.out.empty() ? fs::path(cfg.data.path) : fs::path(o.out);
  if (path.empty()) throw ConfigError("missing option: --out");
  const auto records = data::generate_dataset(cfg.data, cfg.corridor, *seed);
  data::write_dataset(path, records);
  out << records.size() << " records written to " << path.string() << '\n';
  return kExitOk;
}

int cmd_select_anchors(const Options& o, std::ostream& out) {
  std::ifstream f(o.in);
  if (!f) throw IoError("cannot open '" + o.in + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw IoError("'" + o.in + "' is not valid JSON: " + e.what());
  }
  std::vector<geometry::Vec3> points;
  try {
    points = j.get<std::vector<geometry::Vec3>>();
  } catch (const json::exception&) {
    throw ConfigError("polyline must be a JSON array of [x, y, z] triples");
  }
  const geometry::AnchorMethod method = geometry::anchor_method_from_string(o.method);
  const geometry::Polyline poly(points);
  std::vector<std::size_t> indices;
  double objective = 0.0;
  if (method == geometry::AnchorMethod::uniform) {
    if (poly.size() < 3 || o.k + 2 > poly.size())
      throw InvalidArgument("K=" + std::to_string(o.k) + " infeasible for " +
                            std::to_string(poly.size()) + " points");
    indices = geometry::uniform_select(poly.size() - 1, o.k).indices;
    std::vector<std::size_t> retained{0};
    retained.insert(retained.end(), indices.begin(), indices.end());
    retained.push_back(poly.size() - 1);
    objective = geometry::approximation_error(poly, retained);
  } else {
    const auto sel = geometry::select_anchors_rdp_dp(poly, o.k);
    indices = sel.anchors.indices;
    objective = sel.objective;
  }
  out << "indices:";
  for (auto i : indices) out << ' ' << i;
  std::ostringstream obj;
  obj.precision(17);
  obj << objective;
  out << "\nobjective: " << obj.str() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  config::RunConfig cfg = load_config(o);
  if (o.seed) cfg.train.seed = o.seed;
  if (!cfg.train.seed) throw ConfigError("missing field: train.seed");
  cfg.validate();
  const fs::path dir = require_out_dir(o);
  echo_config(cfg, dir);
  const auto data = harness::prepare_data(load_records(cfg), cfg);
  const auto res = harness::train(cfg, data, {.out_dir = dir});
  out << harness::to_json(res.final_report).dump(2) << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const config::RunConfig cfg = load_config(o);
  cfg.validate();
  auto ckpt = checkpoint::load(checkpoint_path(o));
  const auto data = harness::prepare_data(load_records(cfg), cfg);
  const auto report = harness::evaluate(ckpt.model, data, cfg.eval, cfg.corridor);
  const std::string text = harness::to_json(report).dump(2);
  if (!o.out_dir.empty()) {
    echo_config(cfg, o.out_dir);
    std::ofstream(fs::path(o.out_dir) / "eval.json") << text << '\n';
  }
  out << text << '\n';
  return kExitOk;
}

int cmd_sample(const Options& o, std::ostream& out) {
  const config::RunConfig cfg = load_config(o);
  cfg.validate();
  auto ckpt = checkpoint::load(checkpoint_path(o));
  const auto data = harness::prepare_data(load_records(cfg), cfg);
  if (ckpt.model.arch() != harness::arch_for(cfg, data))
    throw ConfigError("checkpoint architecture does not match the dataset/config dimensions");
  std::vector<std::size_t> rows = data.eval_rows;
  if (cfg.eval.max_records > 0 && rows.size() > cfg.eval.max_records) rows.resize(cfg.eval.max_records);
  Matrix contexts(static_cast<Eigen::Index>(rows.size()), data.contexts.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    contexts.row(static_cast<Eigen::Index>(i)) = data.contexts.row(static_cast<Eigen::Index>(rows[i]));
  Rng rng(cfg.eval.seed);
  const auto chunks = flow::euler_sample(ckpt.model, contexts, cfg.eval.sampler_steps, rng);

  std::vector<data::Record> generated;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data::Record r = data.records[rows[i]];
    const Matrix& c = chunks[i];
    r.chunk.leftCols(c.cols()) = c;
    if (c.cols() == synth::kActionDim) r.chunk.rightCols(3) = c.leftCols(3);
    r.chunk = r.chunk.unaryExpr([](double x) { return data::quantize(x); });
    r.generated = true;
    generated.push_back(std::move(r));
  }
  fs::path path = o.out;
  if (path.empty()) path = fs::path(require_out_dir(o)) / "samples.jsonl";
  if (!o.out_dir.empty()) echo_config(cfg, o.out_dir);
  data::write_dataset(path, generated);
  out << generated.size() << " generated chunks written to " << path.string() << '\n';
  return kExitOk;
}

int cmd_grad_check(const Options& o, std::ostream& out) {
  config::RunConfig cfg = load_config(o);
  const std::uint64_t seed = o.seed.value_or(cfg.train.seed.value_or(0));
  if (cfg.data.path.empty() && !cfg.data.seed) {
    cfg.data.seed = seed;
    cfg.data.num_chunks = std::min<std::size_t>(cfg.data.num_chunks, 64);
  }
  cfg.validate();
  const auto data = harness::prepare_data(load_records(cfg), cfg);
  diff::GradCheckOptions opt;
  opt.min_coords = o.coords;
  opt.tol = o.tol;
  opt.seed = seed;
  const auto rep = harness::grad_check_total_loss(cfg, data, seed, o.batch, opt);
  json j = {{"max_rel_err", rep.max_rel_err}, {"worst_param", rep.worst_param},
            {"checked", rep.checked},         {"excluded_kinks", rep.excluded_kinks},
            {"tol", opt.tol},                 {"passed", rep.passed}};
  out << j.dump(2) << '\n';
  return rep.passed ? kExitOk : kExitGradCheck;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  config::RunConfig cfg = load_config(o);
  if (o.seed) cfg.train.seed = o.seed;
  if (!cfg.train.seed) throw ConfigError("missing field: train.seed");
  cfg.validate();
  const fs::path dir = require_out_dir(o);
  echo_config(cfg, dir);
  const auto rows = harness::run_ablation_suite(cfg, load_records(cfg), dir);
  out << harness::ablation_csv(rows);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Corridor-regularized flow matching for action chunks", "corridorflow"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--config", o.config, "Run config (JSON)");
    if (required) opt->required();
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic chunk dataset");
  add_config(gen, false);
  gen->add_option("--out", o.out, "Output dataset (JSON lines)");
  gen->add_option("--seed", o.seed, "Master seed");

  auto* sel = app.add_subcommand("select-anchors", "Select anchor indices on a polyline");
  sel->add_option("--in", o.in, "Polyline file: JSON array of [x, y, z]")->required();
  sel->add_option("--k", o.k, "Number of anchors")->required();
  sel->add_option("--method", o.method, "rdp_dp or uniform");

  auto* tr = app.add_subcommand("train", "Train a model");
  add_config(tr, true);
  tr->add_option("--out-dir", o.out_dir, "Run directory")->required();
  tr->add_option("--seed", o.seed, "Overrides train.seed");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on held-out chunks");
  add_config(ev, true);
  ev->add_option("--out-dir", o.out_dir, "Run directory");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint file");

  auto* sm = app.add_subcommand("sample", "Write sampled chunks as dataset lines");
  add_config(sm, true);
  sm->add_option("--out-dir", o.out_dir, "Run directory");
  sm->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
  sm->add_option("--out", o.out, "Output file (default <out-dir>/samples.jsonl)");

  auto* gc = app.add_subcommand("grad-check", "Finite-difference check of the training objective");
  add_config(gc, false);
  gc->add_option("--seed", o.seed, "Seed for init, batch and coordinate subset");
  gc->add_option("--coords", o.coords, "Coordinates to check");
  gc->add_option("--batch", o.batch, "Batch rows");
  gc->add_option("--tol", o.tol, "Relative error tolerance");

  auto* ab = app.add_subcommand("ablate", "Run the ablation suite");
  add_config(ab, true);
  ab->add_option("--out-dir", o.out_dir, "Suite directory")->required();
  ab->add_option("--seed", o.seed, "Overrides train.seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o, out);
    if (sel->parsed()) return cmd_select_anchors(o, out);
    if (tr->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_eval(o, out);
    if (sm->parsed()) return cmd_sample(o, out);
    if (gc->parsed()) return cmd_grad_check(o, out);
    if (ab->parsed()) return cmd_ablate(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical error in " << e.component() << ": " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const SchemaError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace corridorflow::cli
