#pragma once

#include "nn.hpp"

namespace flsim {

struct EvalResult {
  double loss = 0.0;
  double error = 0.0;  // fraction misclassified, in [0, 1]
};

EvalResult evaluate(const MlpSpec& spec, const ParamVector& params,
                    const Batch& eval_set);

}  // namespace flsim
