#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "io.hpp"
#include "rng.hpp"
#include "util.hpp"

namespace flsim {

void Dataset::validate() const {
  if (n < 1 || dim < 1 || classes < 1 ||
      inputs.size() != static_cast<std::size_t>(n) * dim ||
      labels.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("dataset: inconsistent shape");
  }
  for (double x : inputs) {
    if (!std::isfinite(x)) throw ConfigError("dataset: non-finite feature");
  }
  for (int l : labels) {
    if (l < 0 || l >= classes) throw ConfigError("dataset: label out of range");
  }
}

Dataset gen_gaussian_task(int n_classes, int dim, int n_per_class,
                          double separation, std::uint64_t seed) {
  if (n_classes < 2 || dim < 2 || n_per_class < 1 || separation <= 0.0) {
    throw ConfigError("gen_gaussian_task: need n_classes >= 2, dim >= 2, "
                      "n_per_class >= 1, separation > 0");
  }
  Rng rng(seed);
  Dataset d;
  d.n = n_classes * n_per_class;
  d.dim = dim;
  d.classes = n_classes;
  d.seed = seed;
  d.inputs.reserve(static_cast<std::size_t>(d.n) * dim);
  d.labels.reserve(d.n);

  // Class centers: random unit directions scaled by the separation.
  std::vector<double> centers(static_cast<std::size_t>(n_classes) * dim);
  for (int c = 0; c < n_classes; ++c) {
    double norm2 = 0.0;
    double* ctr = centers.data() + static_cast<std::size_t>(c) * dim;
    do {
      norm2 = 0.0;
      for (int k = 0; k < dim; ++k) {
        ctr[k] = rng.gaussian();
        norm2 += ctr[k] * ctr[k];
      }
    } while (norm2 == 0.0);
    const double scale = separation / std::sqrt(norm2);
    for (int k = 0; k < dim; ++k) ctr[k] *= scale;
  }

  for (int c = 0; c < n_classes; ++c) {
    const double* ctr = centers.data() + static_cast<std::size_t>(c) * dim;
    for (int i = 0; i < n_per_class; ++i) {
      for (int k = 0; k < dim; ++k) d.inputs.push_back(ctr[k] + rng.gaussian());
      d.labels.push_back(c);
    }
  }
  return d;
}

PartitionKind partition_kind_from_string(const std::string& name) {
  if (name == "iid") return PartitionKind::kIid;
  if (name == "by_label") return PartitionKind::kByLabel;
  if (name == "dirichlet") return PartitionKind::kDirichlet;
  throw ConfigError("unknown partition kind '" + name +
                    "' (expected iid, by_label or dirichlet)");
}

const char* partition_kind_name(PartitionKind kind) {
  switch (kind) {
    case PartitionKind::kIid: return "iid";
    case PartitionKind::kByLabel: return "by_label";
    case PartitionKind::kDirichlet: return "dirichlet";
  }
  return "?";
}

namespace {

// Splits `count` items into `parts` chunk sizes proportional to `weights`,
// preserving the total exactly (largest-remainder rounding).
std::vector<int> proportional_counts(int count, std::span<const double> weights) {
  const int parts = static_cast<int>(weights.size());
  std::vector<int> out(parts, 0);
  std::vector<std::pair<double, int>> remainders;
  remainders.reserve(parts);
  int assigned = 0;
  for (int i = 0; i < parts; ++i) {
    const double exact = count * weights[i];
    out[i] = static_cast<int>(exact);
    assigned += out[i];
    remainders.emplace_back(exact - out[i], i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int k = 0; k < count - assigned; ++k) out[remainders[k].second] += 1;
  return out;
}

}  // namespace

ShardAssignment partition_rows(const Dataset& data, std::span<const int> rows,
                               PartitionKind kind, int n_clients,
                               double dirichlet_alpha, std::uint64_t seed) {
  if (n_clients < 1) throw ConfigError("partition: n_clients must be >= 1");
  ShardAssignment out;
  out.kind = kind;
  out.shards.assign(n_clients, {});
  Rng rng(seed);

  switch (kind) {
    case PartitionKind::kIid: {
      std::vector<int> shuffled(rows.begin(), rows.end());
      rng.shuffle(shuffled);
      const int base = static_cast<int>(shuffled.size()) / n_clients;
      const int extra = static_cast<int>(shuffled.size()) % n_clients;
      int pos = 0;
      for (int c = 0; c < n_clients; ++c) {
        const int take = base + (c < extra ? 1 : 0);
        out.shards[c].assign(shuffled.begin() + pos, shuffled.begin() + pos + take);
        pos += take;
      }
      break;
    }
    case PartitionKind::kByLabel: {
      if (n_clients < data.classes) {
        throw ConfigError("by_label partition: covering all labels needs "
                          "n_clients >= classes");
      }
      std::vector<std::vector<int>> by_label(data.classes);
      for (int r : rows) by_label[data.labels[r]].push_back(r);
      for (auto& group : by_label) rng.shuffle(group);
      // Client k serves label k mod C; a label's rows are chunked over the
      // clients assigned to it.
      std::vector<int> clients_per_label(data.classes, 0);
      for (int c = 0; c < n_clients; ++c) clients_per_label[c % data.classes] += 1;
      std::vector<int> cursor(data.classes, 0);   // next chunk index per label
      std::vector<int> consumed(data.classes, 0); // rows handed out per label
      for (int c = 0; c < n_clients; ++c) {
        const int label = c % data.classes;
        const auto& group = by_label[label];
        const int parts = clients_per_label[label];
        const int idx = cursor[label]++;
        const int total = static_cast<int>(group.size());
        const int base = total / parts;
        const int extra = total % parts;
        const int take = base + (idx < extra ? 1 : 0);
        out.shards[c].assign(group.begin() + consumed[label],
                             group.begin() + consumed[label] + take);
        consumed[label] += take;
      }
      break;
    }
    case PartitionKind::kDirichlet: {
      if (dirichlet_alpha <= 0.0) {
        throw ConfigError("dirichlet partition: alpha must be > 0");
      }
      std::vector<std::vector<int>> by_label(data.classes);
      for (int r : rows) by_label[data.labels[r]].push_back(r);
      for (auto& group : by_label) rng.shuffle(group);
      for (int label = 0; label < data.classes; ++label) {
        const auto& group = by_label[label];
        if (group.empty()) continue;
        const auto props = rng.dirichlet(dirichlet_alpha, n_clients);
        const auto counts = proportional_counts(static_cast<int>(group.size()), props);
        int pos = 0;
        for (int c = 0; c < n_clients; ++c) {
          out.shards[c].insert(out.shards[c].end(), group.begin() + pos,
                               group.begin() + pos + counts[c]);
          pos += counts[c];
        }
      }
      break;
    }
  }
  return out;
}

ShardAssignment partition(const Dataset& data, PartitionKind kind, int n_clients,
                          double dirichlet_alpha, std::uint64_t seed) {
  data.validate();
  std::vector<int> all(data.n);
  std::iota(all.begin(), all.end(), 0);
  return partition_rows(data, all, kind, n_clients, dirichlet_alpha, seed);
}

Batch ShardView::gather(std::span<const int> order, int first, int count) const {
  Batch b;
  b.n = count;
  b.dim = data->dim;
  b.inputs.reserve(static_cast<std::size_t>(count) * b.dim);
  b.targets.reserve(count);
  for (int k = first; k < first + count; ++k) {
    const int pos = order[k];
    const auto row = data->row(rows[pos]);
    b.inputs.insert(b.inputs.end(), row.begin(), row.end());
    b.targets.push_back(labels[pos]);
  }
  return b;
}

Batch ShardView::full_batch() const {
  std::vector<int> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  return gather(order, 0, static_cast<int>(order.size()));
}

ShardView make_view(const Dataset& data, std::span<const int> rows) {
  ShardView v;
  v.data = &data;
  v.rows.assign(rows.begin(), rows.end());
  v.labels.reserve(rows.size());
  for (int r : rows) v.labels.push_back(data.labels[r]);
  return v;
}

ShardView corrupt(const Dataset& data, std::span<const int> rows,
                  double noise_rate, std::uint64_t seed) {
  if (noise_rate < 0.0 || noise_rate > 1.0) {
    throw ConfigError("corrupt: noise_rate must lie in [0, 1]");
  }
  ShardView v = make_view(data, rows);
  const int n_flip = static_cast<int>(noise_rate * v.size());
  if (n_flip == 0 || data.classes < 2) return v;
  Rng rng(seed);
  // Partial Fisher-Yates picks the flipped positions.
  std::vector<int> pos(v.rows.size());
  std::iota(pos.begin(), pos.end(), 0);
  for (int i = 0; i < n_flip; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(pos.size() - i));
    std::swap(pos[i], pos[j]);
    const int old_label = v.labels[pos[i]];
    const int shift = 1 + static_cast<int>(rng.uniform_int(data.classes - 1));
    v.labels[pos[i]] = (old_label + shift) % data.classes;
  }
  return v;
}

DataSplit split_dataset(const Dataset& data, double eval_fraction,
                        double rehearsal_fraction, RehearsalSource source,
                        std::uint64_t seed) {
  if (eval_fraction < 0.0 || rehearsal_fraction < 0.0 ||
      eval_fraction + rehearsal_fraction >= 1.0) {
    throw ConfigError("split: eval and rehearsal fractions must be >= 0 and "
                      "sum below 1");
  }
  data.validate();
  Rng rng(seed);
  std::vector<std::vector<int>> by_label(data.classes);
  for (int r = 0; r < data.n; ++r) by_label[data.labels[r]].push_back(r);
  DataSplit split;
  for (auto& group : by_label) {
    rng.shuffle(group);
    const int n = static_cast<int>(group.size());
    const int n_eval = static_cast<int>(eval_fraction * n);
    const int n_reh = source == RehearsalSource::kHeldOut
                          ? static_cast<int>(rehearsal_fraction * n)
                          : 0;
    split.eval.insert(split.eval.end(), group.begin(), group.begin() + n_eval);
    split.rehearsal.insert(split.rehearsal.end(), group.begin() + n_eval,
                           group.begin() + n_eval + n_reh);
    split.train.insert(split.train.end(), group.begin() + n_eval + n_reh,
                       group.end());
  }
  if (source == RehearsalSource::kReplaySeen) {
    // Rehearsal replays already-seen rows: a fixed sample of the training set.
    std::vector<int> pool = split.train;
    rng.shuffle(pool);
    const int n_reh = static_cast<int>(rehearsal_fraction * pool.size());
    split.rehearsal.assign(pool.begin(), pool.begin() + n_reh);
  }
  return split;
}

void save_dataset(const Dataset& data, const std::string& path) {
  data.validate();
  BinWriter w(path);
  w.magic("FLDS1\n");
  w.u32(static_cast<std::uint32_t>(data.n));
  w.u32(static_cast<std::uint32_t>(data.dim));
  w.u32(static_cast<std::uint32_t>(data.classes));
  w.u64(data.seed);
  for (double x : data.inputs) w.f64(x);
  for (int l : data.labels) w.i32(l);
  w.close();
}

Dataset load_dataset(const std::string& path) {
  BinReader r(path);
  r.expect_magic("FLDS1\n");
  Dataset d;
  d.n = static_cast<int>(r.u32());
  d.dim = static_cast<int>(r.u32());
  d.classes = static_cast<int>(r.u32());
  d.seed = r.u64();
  if (d.n < 1 || d.dim < 1 || d.classes < 1) {
    throw FormatError(path + ": malformed header at offset " +
                      std::to_string(r.offset()));
  }
  d.inputs.resize(static_cast<std::size_t>(d.n) * d.dim);
  for (auto& x : d.inputs) x = r.f64();
  d.labels.resize(d.n);
  for (auto& l : d.labels) l = r.i32();
  d.validate();
  return d;
}

void save_shards(const ShardAssignment& shards, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (std::size_t c = 0; c < shards.shards.size(); ++c) {
    out << c << '\t';
    const auto& rows = shards.shards[c];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) out << ',';
      out << rows[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<std::vector<int>> load_shards(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::vector<int>> shards;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": missing tab");
    }
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(0, tab));
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": bad client id");
    }
    if (id != shards.size()) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": client ids must be consecutive from 0");
    }
    std::vector<int> rows;
    std::stringstream ss(line.substr(tab + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      try {
        rows.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": bad row index");
      }
    }
    shards.push_back(std::move(rows));
  }
  return shards;
}

}  // namespace flsim
