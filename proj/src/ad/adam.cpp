#include "hirpcn/ad/adam.hpp"

#include <cmath>

#include "hirpcn/error.hpp"

namespace hirpcn::ad {

void Adam::step(ParamStore& params, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double decay = 1.0 - lr * cfg_.weight_decay;
  for (auto& [name, p] : params) {
    if (!p.grad.same_shape(p.value)) {
      throw Error(ErrorCode::MissingGrad, "parameter '" + name + "' has no gradient buffer");
    }
    double plr = lr;
    for (const auto& [prefix, s] : cfg_.lr_scale) {
      if (name.starts_with(prefix)) plr *= s;
    }
    auto& st = state_[name];
    if (st.m.empty()) {
      st.m = Matrix(p.value.rows(), p.value.cols());
      st.v = Matrix(p.value.rows(), p.value.cols());
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
      st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = st.m[i] / bc1;
      const double vhat = st.v[i] / bc2;
      p.value[i] = p.value[i] * decay - plr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p.zero_grad();
  }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, p] : params) {
    for (double g : p.grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& [_, p] : params) {
      for (auto& g : p.grad.values()) g *= s;
    }
  }
  return norm;
}

}  // namespace hirpcn::ad
