#include "corridorflow/params.hpp"

#include "corridorflow/errors.hpp"

namespace corridorflow::diff {

std::size_t ParamStore::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  for (const auto& p : params_)
    if (p.name == name) throw InvalidArgument("duplicate parameter '" + name + "'");
  params_.push_back(Parameter{std::move(name), Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)});
  return params_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw InvalidArgument("no parameter named '" + name + "'");
}

std::size_t ParamStore::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

namespace {

template <class Store>
auto locate(Store& params, std::size_t flat) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = static_cast<std::size_t>(params[i].value.size());
    if (flat < n) return std::pair{i, flat};
    flat -= n;
  }
  throw InvalidArgument("flat parameter coordinate out of range");
}

}  // namespace

double& ParamStore::coord(std::size_t flat) {
  auto [i, off] = locate(params_, flat);
  return params_[i].value.data()[off];
}

double ParamStore::grad_coord(std::size_t flat) const {
  auto [i, off] = locate(params_, flat);
  return params_[i].grad.data()[off];
}

std::string ParamStore::coord_name(std::size_t flat) const {
  auto [i, off] = locate(params_, flat);
  return params_[i].name + "[" + std::to_string(off) + "]";
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

}  // namespace corridorflow::diff
