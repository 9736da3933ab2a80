#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "hirpcn/ad/matrix.hpp"

namespace hirpcn::ad {

/// A named trainable tensor with its gradient buffer (same shape).
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() noexcept { grad.fill(0.0); }
};

/// Named parameters in sorted order. References returned by create() and
/// get() stay valid for the lifetime of the store.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : rng_(seed) {}

  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  /// uniform(-bound, bound) entries; bound 0 gives zeros.
  Parameter& create_uniform(const std::string& name, std::size_t rows, std::size_t cols, double bound);
  Parameter& create_constant(const std::string& name, std::size_t rows, std::size_t cols, double value);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }

  void zero_grad() noexcept;
  std::size_t parameter_count() const noexcept;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const noexcept { return params_.size(); }

  /// Values only, keyed by name; gradients are not part of a snapshot.
  std::map<std::string, Matrix> snapshot() const;
  /// Overwrites values. Names and shapes must match exactly.
  void restore(const std::map<std::string, Matrix>& values);

 private:
  std::map<std::string, Parameter> params_;
  std::mt19937_64 rng_;
};

}  // namespace hirpcn::ad
