#include "corridorflow/checkpoint.hpp"

#include <fstream>

#include "corridorflow/errors.hpp"

namespace corridorflow::checkpoint {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols)
    throw SchemaError("checkpoint: '" + what + "' has the wrong shape");
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw SchemaError("checkpoint: '" + what + "' has the wrong length");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

RowVector row_from(const json& j, Eigen::Index n, const std::string& what) {
  const auto data = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != n)
    throw SchemaError("checkpoint: '" + what + "' has the wrong length");
  return Eigen::Map<const RowVector>(data.data(), n);
}

}  // namespace

json to_json(const model::VelocityFieldModel& m, const diff::OptimizerState& opt,
             std::uint64_t step, const Rng& rng) {
  const auto& a = m.arch();
  json params = json::object();
  json first = json::object();
  json second = json::object();
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    const auto& p = m.params()[i];
    params[p.name] = matrix_json(p.value);
    if (i < opt.first_moment.size()) {
      first[p.name] = matrix_json(opt.first_moment[i]);
      second[p.name] = matrix_json(opt.second_moment[i]);
    }
  }
  const auto& n = m.normalizer();
  return {
      {"format", kFormatTag},
      {"arch",
       {{"chunk_length", a.chunk_length},
        {"action_dim", a.action_dim},
        {"context_dim", a.context_dim},
        {"cond_dim", a.cond_dim},
        {"hidden", a.hidden},
        {"layers", a.layers},
        {"anchor_hidden", a.anchor_hidden},
        {"anchors", a.anchors}}},
      {"params", params},
      {"normalization",
       {{"mean", std::vector<double>(n.mean.data(), n.mean.data() + n.mean.size())},
        {"std", std::vector<double>(n.std.data(), n.std.data() + n.std.size())}}},
      {"optimizer",
       {{"lr", opt.hyper.lr},
        {"beta1", opt.hyper.beta1},
        {"beta2", opt.hyper.beta2},
        {"eps", opt.hyper.eps},
        {"step", opt.step},
        {"first_moment", first},
        {"second_moment", second}}},
      {"step", step},
      {"rng_state", rng.state()},
  };
}

Checkpoint from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormatTag)
      throw SchemaError("checkpoint: unsupported format tag");
    const json& a = j.at("arch");
    model::ModelArch arch;
    arch.chunk_length = a.at("chunk_length").get<Eigen::Index>();
    arch.action_dim = a.at("action_dim").get<Eigen::Index>();
    arch.context_dim = a.at("context_dim").get<Eigen::Index>();
    arch.cond_dim = a.at("cond_dim").get<Eigen::Index>();
    arch.hidden = a.at("hidden").get<Eigen::Index>();
    arch.layers = a.at("layers").get<std::size_t>();
    arch.anchor_hidden = a.at("anchor_hidden").get<Eigen::Index>();
    arch.anchors = a.at("anchors").get<Eigen::Index>();

    Checkpoint ck{model::VelocityFieldModel(arch), {}, 0, {}};
    auto& params = ck.model.params();
    const json& o = j.at("optimizer");
    ck.optimizer.hyper = {o.at("lr").get<double>(), o.at("beta1").get<double>(),
                          o.at("beta2").get<double>(), o.at("eps").get<double>()};
    ck.optimizer.step = o.at("step").get<std::uint64_t>();
    for (auto& p : params) {
      const auto r = p.value.rows();
      const auto c = p.value.cols();
      p.value = matrix_from(j.at("params").at(p.name), r, c, p.name);
      ck.optimizer.first_moment.push_back(matrix_from(o.at("first_moment").at(p.name), r, c, p.name));
      ck.optimizer.second_moment.push_back(matrix_from(o.at("second_moment").at(p.name), r, c, p.name));
    }
    if (j.at("params").size() != params.size())
      throw SchemaError("checkpoint: parameter set does not match the architecture");
    const Eigen::Index d = arch.flat_dim();
    ck.model.normalizer().mean = row_from(j.at("normalization").at("mean"), d, "mean");
    ck.model.normalizer().std = row_from(j.at("normalization").at("std"), d, "std");
    ck.step = j.at("step").get<std::uint64_t>();
    ck.rng_state = j.at("rng_state").get<std::string>();
    return ck;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
}

void save(const std::filesystem::path& path, const model::VelocityFieldModel& m,
          const diff::OptimizerState& opt, std::uint64_t step, const Rng& rng) {
  // The previous checkpoint stays in place until the new one is complete.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw IoError("cannot write checkpoint '" + tmp + "'");
    os << to_json(m, opt, step, rng).dump() << '\n';
    if (!os) throw IoError("checkpoint write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open checkpoint '" + path.string() + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace corridorflow::checkpoint
