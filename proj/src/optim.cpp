#include "optim.hpp"

#include <cmath>

#include "util.hpp"

namespace flsim {

OptimizerKind optimizer_kind_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSGD;
  if (name == "momentum") return OptimizerKind::kMomentum;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd, momentum or adam)");
}

const char* optimizer_kind_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSGD: return "sgd";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdam: return "adam";
  }
  return "?";
}

OptimizerState OptimizerState::make(OptimizerKind kind, OptimizerHyper hyper,
                                    std::size_t n_params) {
  if (hyper.lr < 0.0) throw ConfigError("learning rate must be >= 0");
  if (hyper.momentum < 0.0 || hyper.momentum >= 1.0) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  OptimizerState st;
  st.kind = kind;
  st.hyper = hyper;
  if (kind != OptimizerKind::kSGD) {
    st.first_moment.assign(n_params, 0.0);
  }
  if (kind == OptimizerKind::kAdam) {
    st.second_moment.assign(n_params, 0.0);
  }
  return st;
}

void OptimizerState::step(ParamVector& params, const ParamVector& grad) {
  if (params.size() != grad.size()) {
    throw ConfigError("optimizer step: parameter/gradient length mismatch");
  }
  if (kind != OptimizerKind::kSGD && first_moment.size() != params.size()) {
    throw ConfigError("optimizer step: moment vector length mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw NumericalError("optimizer step: non-finite gradient");
    }
  }
  const std::size_t n = params.size();
  ++step_count;
  switch (kind) {
    case OptimizerKind::kSGD:
      for (std::size_t i = 0; i < n; ++i) params[i] -= hyper.lr * grad[i];
      break;
    case OptimizerKind::kMomentum:
      for (std::size_t i = 0; i < n; ++i) {
        first_moment[i] = hyper.momentum * first_moment[i] + grad[i];
        params[i] -= hyper.lr * first_moment[i];
      }
      break;
    case OptimizerKind::kAdam: {
      const double t = static_cast<double>(step_count);
      const double c1 = 1.0 - std::pow(hyper.beta1, t);
      const double c2 = 1.0 - std::pow(hyper.beta2, t);
      for (std::size_t i = 0; i < n; ++i) {
        first_moment[i] = hyper.beta1 * first_moment[i] + (1.0 - hyper.beta1) * grad[i];
        second_moment[i] = hyper.beta2 * second_moment[i] +
                           (1.0 - hyper.beta2) * grad[i] * grad[i];
        const double m_hat = first_moment[i] / c1;
        const double v_hat = second_moment[i] / c2;
        params[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
      }
      break;
    }
  }
}

void OptimizerState::reset() {
  step_count = 0;
  for (auto& m : first_moment) m = 0.0;
  for (auto& v : second_moment) v = 0.0;
}

}  // namespace flsim
