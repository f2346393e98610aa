#include "corridorflow/rng.hpp"

#include <sstream>

#include "corridorflow/errors.hpp"

namespace corridorflow {

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_ << ' ' << normal_;
  return os.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream is(state);
  is >> engine_ >> normal_;
  if (!is) throw SchemaError("unreadable rng state");
  uniform_.reset();
}

}  // namespace corridorflow
