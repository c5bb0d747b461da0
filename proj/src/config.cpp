#include "config.hpp"

#include <json.hpp>

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "rng.hpp"
#include "util.hpp"

namespace flsim {

using nlohmann::json;

MlpSpec Experiment::task_spec() const {
  std::vector<int> sizes;
  sizes.push_back(dim);
  sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
  sizes.push_back(classes);
  return MlpSpec::dense(std::move(sizes), Activation::kReLU,
                        OutputHead::kSoftmaxCrossEntropy);
}

std::string Experiment::resolve(const std::string& path) const {
  if (path.empty() || path.front() == '/') return path;
  if (out_dir.empty() || out_dir == ".") return path;
  return out_dir + "/" + path;
}

void Experiment::validate() const {
  if (classes < 2) throw ConfigError("config: classes must be >= 2");
  if (dim < 2) throw ConfigError("config: dim must be >= 2");
  if (n_per_class < 1) throw ConfigError("config: n_per_class must be >= 1");
  if (separation <= 0) throw ConfigError("config: separation must be > 0");
  if (corrupt_fraction < 0 || corrupt_fraction > 1 || corrupt_noise < 0 ||
      corrupt_noise > 1) {
    throw ConfigError("config: corruption knobs must lie in [0, 1]");
  }
  if (eval_fraction <= 0 || eval_fraction + rehearsal_fraction >= 1) {
    throw ConfigError("config: need 0 < eval_fraction and "
                      "eval_fraction + rehearsal_fraction < 1");
  }
  for (int h : hidden_layers) {
    if (h < 1) throw ConfigError("config: hidden layer widths must be >= 1");
  }
  fl.validate();
}

namespace {

struct Parser {
  const json& j;
  const std::string& origin;
  std::set<std::string> seen;
  std::vector<std::string> defaulted;

  bool has(const char* key) {
    seen.insert(key);
    return j.contains(key);
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!has(key)) {
      defaulted.push_back(key);
      return;
    }
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(origin + ": bad value for key '" + std::string(key) +
                        "': " + e.what());
    }
  }

  void get_str(const char* key, std::string& out) { get<std::string>(key, out); }

  template <typename T, typename Fn>
  void get_mapped(const char* key, T& out, Fn from_string) {
    std::string s;
    if (!has(key)) {
      defaulted.push_back(key);
      return;
    }
    get_str(key, s);
    out = from_string(s);
  }
};

}  // namespace

Experiment parse_experiment(const std::string& json_text,
                            const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");

  Experiment exp;
  Parser p{j, origin, {}, {}};

  for (const char* key : {"classes", "dim"}) {
    p.seen.insert(key);
    if (!j.contains(key)) {
      throw ConfigError(origin + ": missing required key '" + std::string(key) + "'");
    }
  }
  exp.classes = j.at("classes").get<int>();
  exp.dim = j.at("dim").get<int>();

  p.get("n_per_class", exp.n_per_class);
  p.get("separation", exp.separation);
  p.get_mapped("partition", exp.partition, partition_kind_from_string);
  p.get("dirichlet_alpha", exp.dirichlet_alpha);
  p.get("corrupt_fraction", exp.corrupt_fraction);
  p.get("corrupt_noise", exp.corrupt_noise);
  p.get("eval_fraction", exp.eval_fraction);
  p.get("rehearsal_fraction", exp.rehearsal_fraction);

  p.get("clients", exp.fl.pool_size);
  p.get("clients_per_round", exp.fl.clients_per_round);
  p.get("max_rounds", exp.fl.max_rounds);
  p.get("target_error", exp.fl.target_error);
  p.get_mapped("aggregator", exp.fl.aggregator, aggregator_from_string);
  p.get("beta", exp.fl.beta);
  p.get("local_steps", exp.fl.local_steps);
  p.get("batch_size", exp.fl.batch_size);
  p.get_mapped("client_optimizer", exp.fl.client_optimizer,
               optimizer_kind_from_string);
  p.get_mapped("server_optimizer", exp.fl.server_optimizer,
               optimizer_kind_from_string);
  p.get("client_lr", exp.fl.client_lr);
  p.get("server_lr", exp.fl.server_lr);
  p.get("rehearsal_lr", exp.fl.rehearsal_lr);
  p.get("rl_lr", exp.fl.rl_lr);
  p.get("rehearsal_steps", exp.fl.rehearsal_steps);
  p.get("rehearsal_batch", exp.fl.rehearsal_batch);
  p.get_mapped("rehearsal_source", exp.fl.rehearsal_source,
               [&](const std::string& s) {
                 if (s == "held_out") return RehearsalSource::kHeldOut;
                 if (s == "replay_seen") return RehearsalSource::kReplaySeen;
                 throw ConfigError(origin + ": unknown rehearsal_source '" + s +
                                   "' (expected held_out or replay_seen)");
               });
  p.get("theta", exp.fl.theta);
  p.get("reward", exp.fl.reward_magnitude);
  p.get("sigma", exp.fl.noise_sigma);
  p.get("seed", exp.fl.master_seed);
  p.get("threads", exp.fl.threads);

  p.get("hidden_layers", exp.hidden_layers);
  p.get_str("dataset", exp.dataset_path);
  p.get_str("shards", exp.shards_path);
  p.get_str("out_dir", exp.out_dir);
  p.get("emit_timing", exp.emit_timing);

  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!p.seen.count(key)) {
      throw ConfigError(origin + ": unknown key '" + key + "'");
    }
  }
  if (!p.defaulted.empty()) {
    std::ostringstream msg;
    msg << origin << ": using defaults for";
    for (const auto& k : p.defaulted) msg << ' ' << k;
    log_notice(msg.str());
  }
  exp.validate();
  return exp;
}

Experiment load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment(buf.str(), path);
}

std::vector<double> corruption_rates(const Experiment& exp) {
  const int k = exp.fl.pool_size;
  std::vector<double> rates(k, 0.0);
  const int n_bad = static_cast<int>(exp.corrupt_fraction * k);
  if (n_bad == 0 || exp.corrupt_noise == 0.0) return rates;
  std::vector<int> ids(k);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(derive_seed(exp.fl.master_seed, 0, 0, /*corrupt-selection*/ 9));
  rng.shuffle(ids);
  for (int i = 0; i < n_bad; ++i) rates[ids[i]] = exp.corrupt_noise;
  return rates;
}

}  // namespace flsim
