#include "corridorflow/config.hpp"

#include <fstream>
#include <set>

#include "corridorflow/errors.hpp"

namespace corridorflow::config {

using nlohmann::json;

namespace {

// Reads a section, tracking which keys were consumed so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (auto it = root.find(name); it != root.end()) {
      if (!it->is_object()) throw ConfigError("section '" + name + "' must be an object");
      obj_ = &*it;
    }
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_) return;
    auto it = obj_->find(key);
    if (it == obj_->end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type");
    }
  }

  template <class T>
  void read_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!obj_) return;
    auto it = obj_->find(key);
    if (it == obj_->end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type");
    }
  }

  template <class Enum, class Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    std::string s;
    read(key, s);
    if (s.empty()) return;
    try {
      out = parse(s);
    } catch (const InvalidArgument& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    if (!obj_) return nullptr;
    auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [k, _] : obj_->items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + name_ + "." + k + "'");
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

geometry::Vec3 vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + ": expected [x, y, z]");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const json::exception&) {
    throw ConfigError(what + ": expected numbers");
  }
}

}  // namespace

void RunConfig::validate() const {
  try {
    data.validate();
    corridor.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (model.cond_dim == 0 || model.hidden == 0 || model.layers == 0 || model.anchor_hidden == 0)
    throw ConfigError("model: widths and layer count must be positive");
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (train.eval_every == 0) throw ConfigError("train.eval_every must be positive");
  if (!(train.optimizer.lr > 0.0) || !(train.optimizer.eps > 0.0) ||
      !(train.optimizer.beta1 >= 0.0 && train.optimizer.beta1 < 1.0) ||
      !(train.optimizer.beta2 >= 0.0 && train.optimizer.beta2 < 1.0))
    throw ConfigError("train.optimizer: invalid hyperparameters");
  if (eval.sampler_steps == 0) throw ConfigError("eval.sampler_steps must be positive");
  if (corridor.anchors + 1 > data.chunk_length)
    throw ConfigError("corridor.anchors must be <= data.chunk_length - 1");
}

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::set<std::string> sections{"data", "model", "corridor", "train", "eval"};
  for (const auto& [k, _] : j.items())
    if (!sections.count(k)) throw ConfigError("unknown section '" + k + "'");

  RunConfig cfg;
  {
    Section s(j, "data");
    auto& d = cfg.data;
    s.read("path", d.path);
    s.read_optional("seed", d.seed);
    s.read("num_chunks", d.num_chunks);
    s.read("chunk_length", d.chunk_length);
    s.read("chunk_stride", d.chunk_stride);
    s.read("noise_std", d.noise_std);
    s.read("heldout_fraction", d.heldout_fraction);
    if (const json* fams = s.raw("families")) {
      if (!fams->is_array()) throw ConfigError("data.families must be an array");
      d.families.clear();
      for (const auto& f : *fams) {
        if (!f.is_string()) throw ConfigError("data.families entries must be strings");
        try {
          d.families.push_back(synth::family_from_string(f.get<std::string>()));
        } catch (const InvalidArgument& e) {
          throw ConfigError(std::string("data.families: ") + e.what());
        }
      }
    }
    s.read("steps", d.generator.steps);
    s.read("dt", d.generator.dt);
    s.read("v_max", d.generator.v_max);
    s.read("min_travel", d.generator.min_travel);
    if (const json* w = s.raw("workspace_min")) d.generator.workspace_min = vec3(*w, "data.workspace_min");
    if (const json* w = s.raw("workspace_max")) d.generator.workspace_max = vec3(*w, "data.workspace_max");
    s.finish();
  }
  {
    Section s(j, "model");
    s.read("cond_dim", cfg.model.cond_dim);
    s.read("hidden", cfg.model.hidden);
    s.read("layers", cfg.model.layers);
    s.read("anchor_hidden", cfg.model.anchor_hidden);
    s.finish();
  }
  {
    Section s(j, "corridor");
    auto& c = cfg.corridor;
    s.read("anchors", c.anchors);
    s.read("alpha", c.alpha);
    s.read("lambda_dp", c.lambda_dp);
    s.read("lambda_corr", c.lambda_corr);
    s.read_enum("penalty", c.penalty, corridor::penalty_from_string);
    s.read("huber_beta", c.huber_beta);
    s.read("enable_buf", c.enable_buf);
    s.read("enable_cons", c.enable_cons);
    s.read("enable_extra_a", c.enable_extra_a);
    s.read_enum("target_mode", c.target_mode, corridor::target_mode_from_string);
    s.read_enum("anchor_method", c.anchor_method, geometry::anchor_method_from_string);
    s.read_enum("anchor_target", c.anchor_target, corridor::anchor_target_from_string);
    s.finish();
  }
  {
    Section s(j, "train");
    auto& t = cfg.train;
    s.read_optional("seed", t.seed);
    s.read("batch_size", t.batch_size);
    s.read("steps", t.steps);
    s.read("lr", t.optimizer.lr);
    s.read("beta1", t.optimizer.beta1);
    s.read("beta2", t.optimizer.beta2);
    s.read("eps", t.optimizer.eps);
    s.read("eval_every", t.eval_every);
    s.read("checkpoint", t.checkpoint);
    s.finish();
  }
  {
    Section s(j, "eval");
    s.read("sampler_steps", cfg.eval.sampler_steps);
    s.read("seed", cfg.eval.seed);
    s.read("max_records", cfg.eval.max_records);
    s.finish();
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& cfg) {
  const auto& d = cfg.data;
  json families = json::array();
  for (auto f : d.families) families.push_back(synth::to_string(f));
  const auto& g = d.generator;
  const auto& c = cfg.corridor;
  const auto& t = cfg.train;
  return {
      {"data",
       {{"path", d.path},
        {"seed", d.seed ? json(*d.seed) : json(nullptr)},
        {"num_chunks", d.num_chunks},
        {"chunk_length", d.chunk_length},
        {"chunk_stride", d.chunk_stride},
        {"noise_std", d.noise_std},
        {"heldout_fraction", d.heldout_fraction},
        {"families", families},
        {"steps", g.steps},
        {"dt", g.dt},
        {"v_max", g.v_max},
        {"min_travel", g.min_travel},
        {"workspace_min", g.workspace_min},
        {"workspace_max", g.workspace_max}}},
      {"model",
       {{"cond_dim", cfg.model.cond_dim},
        {"hidden", cfg.model.hidden},
        {"layers", cfg.model.layers},
        {"anchor_hidden", cfg.model.anchor_hidden}}},
      {"corridor",
       {{"anchors", c.anchors},
        {"alpha", c.alpha},
        {"lambda_dp", c.lambda_dp},
        {"lambda_corr", c.lambda_corr},
        {"penalty", corridor::to_string(c.penalty)},
        {"huber_beta", c.huber_beta},
        {"enable_buf", c.enable_buf},
        {"enable_cons", c.enable_cons},
        {"enable_extra_a", c.enable_extra_a},
        {"target_mode", corridor::to_string(c.target_mode)},
        {"anchor_method", geometry::to_string(c.anchor_method)},
        {"anchor_target", corridor::to_string(c.anchor_target)}}},
      {"train",
       {{"seed", t.seed ? json(*t.seed) : json(nullptr)},
        {"batch_size", t.batch_size},
        {"steps", t.steps},
        {"lr", t.optimizer.lr},
        {"beta1", t.optimizer.beta1},
        {"beta2", t.optimizer.beta2},
        {"eps", t.optimizer.eps},
        {"eval_every", t.eval_every},
        {"checkpoint", t.checkpoint}}},
      {"eval",
       {{"sampler_steps", cfg.eval.sampler_steps},
        {"seed", cfg.eval.seed},
        {"max_records", cfg.eval.max_records}}},
  };
}

}  // namespace corridorflow::config
