#pragma once

#include <string>

#include "nn.hpp"

namespace flsim {

// Shared container for model snapshots: magic, then the MlpSpec header
// (u32 layer count, u32 sizes, u8 activation per hidden layer, u8 head),
// then u64 parameter count and the raw float64 parameters.
// Magics: "FLCK1\n" for task-model checkpoints, "FLRL1\n" for policy nets.

void save_mlp_container(const char* magic, const MlpSpec& spec,
                        const ParamVector& params, const std::string& path);

struct MlpSnapshot {
  MlpSpec spec;
  ParamVector params;
};

MlpSnapshot load_mlp_container(const char* magic, const std::string& path);

}  // namespace flsim
