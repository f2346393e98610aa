#include "corridorflow/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "corridorflow/checkpoint.hpp"
#include "corridorflow/errors.hpp"
#include "corridorflow/flowmatch.hpp"
#include "corridorflow/rng.hpp"

namespace corridorflow::harness {

using nlohmann::json;

namespace {

// Stream ids for seeds derived from train.seed.
constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kTrainStream = 12;
constexpr std::uint64_t kValLossStream = 1;

Eigen::Index delta_offset(const corridor::CorridorConfig& cfg) {
  return cfg.enable_extra_a ? synth::kDeltaOffset : 0;
}

Matrix rows_of(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

PreparedData prepare_data(std::vector<data::Record> records, const config::RunConfig& cfg) {
  cfg.corridor.validate();
  if (records.empty()) throw ConfigError("dataset is empty");
  PreparedData d;
  d.chunk_length = records.front().chunk.rows();
  d.action_dim = cfg.corridor.enable_extra_a ? synth::kExtendedDim : synth::kActionDim;
  const auto n = static_cast<Eigen::Index>(records.size());
  d.x_raw.resize(n, d.chunk_length * d.action_dim);
  d.contexts.resize(n, static_cast<Eigen::Index>(synth::kContextDim));
  d.specs.reserve(records.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    if (r.chunk.rows() != d.chunk_length || r.chunk.cols() != synth::kExtendedDim)
      throw ConfigError("dataset mixes chunk shapes");
    const Matrix head = r.chunk.leftCols(d.action_dim);
    d.x_raw.row(i) = Eigen::Map<const RowVector>(head.data(), head.size());
    const auto ctx = r.context.vector();
    d.contexts.row(i) = Eigen::Map<const RowVector>(ctx.data(), static_cast<Eigen::Index>(ctx.size()));
    try {
      d.specs.push_back(synth::build_anchor_spec(r.chunk, synth::segment_from_chunk(r.chunk), cfg.corridor));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("cannot build anchors: ") + e.what());
    }
  }
  const auto held = data::heldout_mask(records, cfg.data.heldout_fraction);
  for (std::size_t i = 0; i < records.size(); ++i) (held[i] ? d.eval_rows : d.train_rows).push_back(i);
  if (d.train_rows.empty()) throw ConfigError("no training records after the held-out split");
  d.records = std::move(records);
  return d;
}

model::ModelArch arch_for(const config::RunConfig& cfg, const PreparedData& data) {
  model::ModelArch a;
  a.chunk_length = data.chunk_length;
  a.action_dim = data.action_dim;
  a.context_dim = static_cast<Eigen::Index>(synth::kContextDim);
  a.cond_dim = static_cast<Eigen::Index>(cfg.model.cond_dim);
  a.hidden = static_cast<Eigen::Index>(cfg.model.hidden);
  a.layers = cfg.model.layers;
  a.anchor_hidden = static_cast<Eigen::Index>(cfg.model.anchor_hidden);
  a.anchors = static_cast<Eigen::Index>(cfg.corridor.anchors);
  return a;
}

json to_json(const EvalReport& r) {
  json fam = json::object();
  for (const auto& [name, f] : r.per_family)
    fam[name] = {{"count", f.count},
                 {"endpoint_error", f.endpoint_error},
                 {"corridor_violation_rate", f.corridor_violation_rate},
                 {"anchor_mae", f.anchor_mae}};
  return {{"records", r.records},
          {"endpoint_error", r.endpoint_error},
          {"corridor_violation_rate", r.corridor_violation_rate},
          {"anchor_mae", r.anchor_mae},
          {"fm_val_loss", r.fm_val_loss},
          {"per_family", fam}};
}

EvalReport evaluate_samples(const std::vector<Matrix>& generated,
                            const std::vector<Matrix>& predicted_anchors, const PreparedData& data,
                            const std::vector<std::size_t>& rows,
                            const corridor::CorridorConfig& cfg) {
  if (generated.size() != rows.size() || predicted_anchors.size() != rows.size())
    throw InvalidArgument("evaluate: one sample and one anchor prediction per record");
  const Eigen::Index off = delta_offset(cfg);
  EvalReport rep;
  rep.records = rows.size();
  std::size_t violations = 0;
  std::map<std::string, std::size_t> fam_violations;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& rec = data.records[rows[i]];
    const auto& spec = data.specs[rows[i]];
    const Matrix& gen = generated[i];
    if (gen.rows() != data.chunk_length || gen.cols() < off + 3)
      throw ConfigError("evaluate: generated chunk shape does not match the dataset");

    const RowVector implied = gen.middleCols(off, 3).colwise().sum();
    const RowVector truth = rec.chunk.middleCols(synth::kDeltaOffset, 3).colwise().sum();
    const double endpoint = (implied - truth).norm();

    const Matrix g = corridor::extract_anchors_g(gen, spec.indices, off);
    const auto residuals = corridor::residual_norms(g, spec.targets(cfg.target_mode));
    bool outside = false;
    for (double r : residuals) outside = outside || r > spec.width;

    const auto pred_res = corridor::residual_norms(predicted_anchors[i], spec.targets(cfg.target_mode));
    double mae = 0.0;
    for (double r : pred_res) mae += r;
    mae /= static_cast<double>(pred_res.size());

    rep.endpoint_error += endpoint;
    rep.anchor_mae += mae;
    violations += outside ? 1 : 0;
    auto& f = rep.per_family[std::string(synth::to_string(rec.context.family))];
    ++f.count;
    f.endpoint_error += endpoint;
    f.anchor_mae += mae;
    fam_violations[std::string(synth::to_string(rec.context.family))] += outside ? 1 : 0;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    rep.endpoint_error /= n;
    rep.anchor_mae /= n;
    rep.corridor_violation_rate = static_cast<double>(violations) / n;
  }
  for (auto& [name, f] : rep.per_family) {
    const double n = static_cast<double>(f.count);
    f.endpoint_error /= n;
    f.anchor_mae /= n;
    f.corridor_violation_rate = static_cast<double>(fam_violations[name]) / n;
  }
  return rep;
}

EvalReport evaluate(model::VelocityFieldModel& m, const PreparedData& data,
                    const config::EvalConfig& eval, const corridor::CorridorConfig& cfg) {
  if (m.arch().action_dim != data.action_dim || m.arch().chunk_length != data.chunk_length ||
      m.arch().anchors != static_cast<Eigen::Index>(cfg.anchors))
    throw ConfigError("checkpoint architecture does not match the dataset/config dimensions");
  std::vector<std::size_t> rows = data.eval_rows;
  if (eval.max_records > 0 && rows.size() > eval.max_records) rows.resize(eval.max_records);
  if (rows.empty()) return {};

  const Matrix contexts = rows_of(data.contexts, rows);
  Rng rng(eval.seed);
  const auto generated = flow::euler_sample(m, contexts, eval.sampler_steps, rng);

  const Matrix anchors = m.anchors_eval(contexts);
  std::vector<Matrix> predicted;
  for (Eigen::Index i = 0; i < anchors.rows(); ++i)
    predicted.emplace_back(Eigen::Map<const Matrix>(anchors.row(i).data(), m.arch().anchors, 3));

  EvalReport rep = evaluate_samples(generated, predicted, data, rows, cfg);

  const Matrix x_norm = m.normalizer().normalize(rows_of(data.x_raw, rows));
  std::vector<std::size_t> local(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) local[i] = i;
  Rng val_rng(derive_seed(eval.seed, kValLossStream));
  const flow::FlowBatch batch = flow::draw_flow_noise(val_rng, x_norm, contexts, local);
  const Matrix z = flow::interpolate(batch.x, batch.xi, batch.t);
  const Matrix h = m.encode_eval(batch.contexts);
  rep.fm_val_loss = flow::fm_loss_value(m.velocity_eval(z, batch.t, h), batch);
  return rep;
}

bool plain_flow_matching(const corridor::CorridorConfig& cfg) {
  return !cfg.enable_buf && !cfg.enable_cons && cfg.lambda_dp == 0.0;
}

namespace {

struct RunningLoss {
  objective::LossBreakdown sum;
  std::size_t n = 0;

  void add(const objective::LossBreakdown& l) {
    sum.total += l.total;
    sum.fm += l.fm;
    sum.delta_p += l.delta_p;
    sum.buffer += l.buffer;
    sum.consistency += l.consistency;
    sum.corridor += l.corridor;
    ++n;
  }
  json take() {
    const double k = static_cast<double>(n);
    json j = {{"total", sum.total / k},       {"fm", sum.fm / k},
              {"delta_p", sum.delta_p / k},   {"buffer", sum.buffer / k},
              {"consistency", sum.consistency / k}, {"corridor", sum.corridor / k}};
    *this = {};
    return j;
  }
};

}  // namespace

TrainResult train(const config::RunConfig& cfg, const PreparedData& data, const TrainOptions& opts) {
  cfg.validate();
  if (!cfg.train.seed) throw ConfigError("missing field: train.seed");
  const std::uint64_t seed = *cfg.train.seed;

  TrainResult res{model::VelocityFieldModel(arch_for(cfg, data)), {}, {}, {}, {}};
  model::VelocityFieldModel& m = res.model;
  Rng init_rng(derive_seed(seed, kInitStream));
  m.init(init_rng);
  m.normalizer() = model::Normalizer::fit(rows_of(data.x_raw, data.train_rows));
  res.optimizer = diff::OptimizerState::for_params(m.params(), cfg.train.optimizer);

  Rng rng(derive_seed(seed, kTrainStream));
  const Matrix x_norm = m.normalizer().normalize(data.x_raw);
  const bool plain = plain_flow_matching(cfg.corridor);

  std::ofstream metrics;
  std::filesystem::path ckpt_path;
  if (opts.out_dir) {
    std::filesystem::create_directories(*opts.out_dir);
    metrics.open(*opts.out_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!metrics) throw IoError("cannot open metrics log in '" + opts.out_dir->string() + "'");
    ckpt_path = cfg.train.checkpoint.empty() ? *opts.out_dir / "checkpoint.json"
                                             : std::filesystem::path(cfg.train.checkpoint);
  }

  RunningLoss running;
  auto log_point = [&](std::uint64_t step) {
    json line = {{"step", step},
                 {"train_loss", running.n ? running.take() : json(nullptr)},
                 {"eval", to_json(res.final_report = evaluate(m, data, cfg.eval, cfg.corridor))}};
    if (metrics.is_open()) {
      metrics << line.dump() << '\n' << std::flush;
      checkpoint::save(ckpt_path, m, res.optimizer, step, rng);
    }
    res.log.push_back(std::move(line));
  };

  log_point(0);
  for (std::uint64_t step = 1; step <= cfg.train.steps; ++step) {
    const flow::FlowBatch batch =
        flow::draw_flow_batch(rng, x_norm, data.contexts, data.train_rows, cfg.train.batch_size);
    diff::Tape tape;
    objective::LossBreakdown l;
    if (plain) {
      const flow::FmNodes fm = flow::fm_loss(m, batch, tape);
      l.fm = l.total = tape.scalar(fm.loss);
      if (!std::isfinite(l.total)) throw NumericalError("fm", "non-finite flow-matching loss");
      tape.backward(fm.loss);
    } else {
      std::vector<const corridor::AnchorSpec*> specs;
      specs.reserve(batch.rows.size());
      for (std::size_t r : batch.rows) specs.push_back(&data.specs[r]);
      const auto nodes = objective::total_loss(m, batch, specs, cfg.corridor, tape);
      l = nodes.values;
      tape.backward(nodes.total);
    }
    diff::opt_step(res.optimizer, m.params());
    running.add(l);
    res.loss_curve.push_back(l.total);
    if (step % cfg.train.eval_every == 0 || step == cfg.train.steps) log_point(step);
  }
  return res;
}

diff::GradCheckReport grad_check_total_loss(const config::RunConfig& cfg, const PreparedData& data,
                                            std::uint64_t seed, std::size_t batch_size,
                                            const diff::GradCheckOptions& opt) {
  model::VelocityFieldModel m(arch_for(cfg, data));
  Rng init_rng(derive_seed(seed, kInitStream));
  m.init(init_rng);
  m.normalizer() = model::Normalizer::fit(rows_of(data.x_raw, data.train_rows));
  Rng rng(derive_seed(seed, kTrainStream));
  const flow::FlowBatch batch = flow::draw_flow_batch(rng, m.normalizer().normalize(data.x_raw),
                                                      data.contexts, data.train_rows, batch_size);
  std::vector<const corridor::AnchorSpec*> specs;
  for (std::size_t r : batch.rows) specs.push_back(&data.specs[r]);

  const diff::LossFn loss = [&](diff::ParamStore&, bool with_grad) {
    diff::Tape tape;
    const auto nodes = objective::total_loss(m, batch, specs, cfg.corridor, tape);
    diff::LossEval out{nodes.values.total, tape.kink_signature()};
    if (with_grad) tape.backward(nodes.total);
    return out;
  };
  return diff::grad_check(m.params(), loss, opt);
}

std::vector<std::pair<std::string, config::RunConfig>> ablation_variants(const config::RunConfig& base) {
  using corridor::TargetMode;
  auto make = [&](bool extra_a, bool anchors, TargetMode mode, bool buf, bool cons) {
    config::RunConfig c = base;
    c.corridor.enable_extra_a = extra_a;
    c.corridor.lambda_dp = anchors ? base.corridor.lambda_dp : 0.0;
    c.corridor.target_mode = mode;
    c.corridor.enable_buf = buf;
    c.corridor.enable_cons = cons;
    c.corridor.anchor_method = geometry::AnchorMethod::rdp_dp;
    return c;
  };
  std::vector<std::pair<std::string, config::RunConfig>> v;
  v.emplace_back("baseline-FM", make(false, false, TargetMode::delta, false, false));
  v.emplace_back("pos", make(false, true, TargetMode::pos, false, false));
  v.emplace_back("delta-pos", make(false, true, TargetMode::delta, false, false));
  v.emplace_back("extra-A", make(true, false, TargetMode::delta, false, false));
  v.emplace_back("merge", make(true, true, TargetMode::delta, false, false));
  v.emplace_back("merge+buf", make(true, true, TargetMode::delta, true, false));
  v.emplace_back("merge+cons", make(true, true, TargetMode::delta, false, true));
  v.emplace_back("full", make(true, true, TargetMode::delta, true, true));
  auto no_rdp = make(true, true, TargetMode::delta, true, true);
  no_rdp.corridor.anchor_method = geometry::AnchorMethod::uniform;
  v.emplace_back("full-RDP", std::move(no_rdp));
  return v;
}

std::vector<AblationRow> run_ablation_suite(const config::RunConfig& base,
                                            const std::vector<data::Record>& records,
                                            const std::optional<std::filesystem::path>& out_dir) {
  std::vector<AblationRow> rows;
  for (auto& [name, cfg] : ablation_variants(base)) {
    AblationRow row{name, cfg, false, {}, {}, {}};
    try {
      TrainOptions opts;
      if (out_dir) {
        opts.out_dir = *out_dir / name;
        std::filesystem::create_directories(*opts.out_dir);
        std::ofstream(*opts.out_dir / "config.json") << config::to_json(cfg).dump(2) << '\n';
      }
      const PreparedData data = prepare_data(records, cfg);
      TrainResult res = train(cfg, data, opts);
      row.report = res.final_report;
      row.log = std::move(res.log);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  if (out_dir) {
    std::ofstream(*out_dir / "ablation.csv") << ablation_csv(rows);
    std::ofstream(*out_dir / "ablation.json") << ablation_json(rows).dump(2) << '\n';
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << kAblationCsvHeader << '\n';
  os.precision(10);
  for (const auto& r : rows) {
    os << r.variant;
    if (r.ok)
      os << ',' << r.report.endpoint_error << ',' << r.report.corridor_violation_rate << ','
         << r.report.anchor_mae << ',' << r.report.fm_val_loss;
    else
      os << ",nan,nan,nan,nan";
    os << '\n';
  }
  return os.str();
}

json ablation_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json j = {{"variant", r.variant}, {"status", r.ok ? "ok" : "failed"}, {"config", config::to_json(r.config)}};
    if (r.ok)
      j["report"] = to_json(r.report);
    else
      j["error"] = r.error;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace corridorflow::harness
