#include "eval.hpp"

#include "util.hpp"

namespace flsim {

EvalResult evaluate(const MlpSpec& spec, const ParamVector& params,
                    const Batch& eval_set) {
  if (eval_set.n < 1) throw ConfigError("evaluate: empty evaluation set");
  const ForwardResult fwd = forward_loss(spec, params, eval_set);
  int wrong = 0;
  for (int i = 0; i < eval_set.n; ++i) {
    if (fwd.predictions[i] != eval_set.targets[i]) ++wrong;
  }
  return {fwd.loss, static_cast<double>(wrong) / eval_set.n};
}

}  // namespace flsim
