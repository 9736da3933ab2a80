#pragma once

#include <map>
#include <string>

#include "hirpcn/ad/param_store.hpp"

namespace hirpcn::ad {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  /// Learning-rate multiplier for parameters whose name starts with the key.
  std::map<std::string, double> lr_scale;
};

/// Bias-corrected Adam with decoupled weight decay: each parameter is first
/// scaled by (1 - lr * wd), then moved by lr * m_hat / (sqrt(v_hat) + eps).
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Applies one update with learning rate `lr` and zeroes all gradients.
  /// Throws MissingGrad when a gradient buffer does not match its value.
  void step(ParamStore& params, double lr);

  long long steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  struct Moments {
    Matrix m, v;
  };
  AdamConfig cfg_;
  long long t_ = 0;
  std::map<std::string, Moments> state_;
};

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(ParamStore& params, double max_norm);

}  // namespace hirpcn::ad
