#pragma once

#include <cstdint>
#include <string>

#include "nn.hpp"

namespace flsim {

enum class OptimizerKind { kSGD, kMomentum, kAdam };

OptimizerKind optimizer_kind_from_string(const std::string& name);
const char* optimizer_kind_name(OptimizerKind kind);

struct OptimizerHyper {
  double lr = 0.01;
  double momentum = 0.9;      // Momentum only
  double beta1 = 0.9;         // Adam only
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Value type; cloning the state (e.g. to build two candidate models from the
// same moments) is a plain copy.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSGD;
  OptimizerHyper hyper;
  std::uint64_t step_count = 0;
  ParamVector first_moment;   // Momentum velocity / Adam m
  ParamVector second_moment;  // Adam v

  static OptimizerState make(OptimizerKind kind, OptimizerHyper hyper,
                             std::size_t n_params);

  // One update in place. Throws ConfigError on length mismatch and
  // NumericalError on non-finite gradients.
  void step(ParamVector& params, const ParamVector& grad);

  // Zeroes moments and step count, keeps hyperparameters. Client optimizers
  // are reset at the start of every round (stateless-per-round contract).
  void reset();
};

}  // namespace flsim
