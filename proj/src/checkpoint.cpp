#include "checkpoint.hpp"

#include "io.hpp"
#include "util.hpp"

namespace flsim {

void save_mlp_container(const char* magic, const MlpSpec& spec,
                        const ParamVector& params, const std::string& path) {
  spec.validate();
  if (params.size() != spec.param_count()) {
    throw ConfigError("checkpoint: parameter length does not match the spec");
  }
  BinWriter w(path);
  w.magic(magic);
  w.u32(static_cast<std::uint32_t>(spec.layer_sizes.size()));
  for (int s : spec.layer_sizes) w.u32(static_cast<std::uint32_t>(s));
  for (Activation a : spec.activations) {
    w.u32(static_cast<std::uint32_t>(a));
  }
  w.u32(static_cast<std::uint32_t>(spec.head));
  w.u64(params.size());
  for (double p : params) w.f64(p);
  w.close();
}

MlpSnapshot load_mlp_container(const char* magic, const std::string& path) {
  BinReader r(path);
  r.expect_magic(magic);
  MlpSnapshot snap;
  const std::uint32_t n_sizes = r.u32();
  if (n_sizes < 2 || n_sizes > 64) {
    throw FormatError(path + ": malformed layer count at offset " +
                      std::to_string(r.offset()));
  }
  snap.spec.layer_sizes.resize(n_sizes);
  for (auto& s : snap.spec.layer_sizes) s = static_cast<int>(r.u32());
  snap.spec.activations.resize(n_sizes - 2);
  for (auto& a : snap.spec.activations) {
    const std::uint32_t code = r.u32();
    if (code > 2) {
      throw FormatError(path + ": bad activation code at offset " +
                        std::to_string(r.offset()));
    }
    a = static_cast<Activation>(code);
  }
  const std::uint32_t head = r.u32();
  if (head > 1) {
    throw FormatError(path + ": bad output-head code at offset " +
                      std::to_string(r.offset()));
  }
  snap.spec.head = static_cast<OutputHead>(head);
  snap.spec.validate();
  const std::uint64_t p = r.u64();
  if (p != snap.spec.param_count()) {
    throw FormatError(path + ": parameter count mismatch at offset " +
                      std::to_string(r.offset()));
  }
  snap.params.resize(p);
  for (auto& x : snap.params) x = r.f64();
  return snap;
}

}  // namespace flsim
