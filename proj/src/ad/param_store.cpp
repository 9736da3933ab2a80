#include "hirpcn/ad/param_store.hpp"

#include "hirpcn/error.hpp"

namespace hirpcn::ad {

Parameter& ParamStore::create_uniform(const std::string& name, std::size_t rows, std::size_t cols,
                                      double bound) {
  if (params_.contains(name)) throw Error(ErrorCode::ConfigInvalid, "parameter '" + name + "' exists");
  Parameter p{name, Matrix(rows, cols), Matrix(rows, cols)};
  if (bound > 0.0) {
    for (auto& v : p.value.values()) {
      const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      v = (2.0 * u - 1.0) * bound;
    }
  }
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::create_constant(const std::string& name, std::size_t rows, std::size_t cols,
                                       double value) {
  auto& p = create_uniform(name, rows, cols, 0.0);
  p.value.fill(value);
  return p;
}

Parameter& ParamStore::get(const std::string& name) {
  const auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::MissingGrad, "no parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::get(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::MissingGrad, "no parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() noexcept {
  for (auto& [_, p] : params_) p.zero_grad();
}

std::size_t ParamStore::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

std::map<std::string, Matrix> ParamStore::snapshot() const {
  std::map<std::string, Matrix> out;
  for (const auto& [name, p] : params_) out.emplace(name, p.value);
  return out;
}

void ParamStore::restore(const std::map<std::string, Matrix>& values) {
  if (values.size() != params_.size()) {
    throw Error(ErrorCode::CheckpointFormat, "expected " + std::to_string(params_.size()) +
                                                 " parameters, got " + std::to_string(values.size()));
  }
  for (auto& [name, p] : params_) {
    const auto it = values.find(name);
    if (it == values.end()) throw Error(ErrorCode::CheckpointFormat, "missing parameter '" + name + "'");
    if (!it->second.same_shape(p.value)) {
      throw Error(ErrorCode::CheckpointFormat, "parameter '" + name + "' has shape " +
                                                   shape_string(it->second) + ", expected " +
                                                   shape_string(p.value));
    }
    p.value = it->second;
  }
}

}  // namespace hirpcn::ad
