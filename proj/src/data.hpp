#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nn.hpp"

namespace flsim {

struct Dataset {
  int n = 0;
  int dim = 0;
  int classes = 0;
  std::uint64_t seed = 0;          // generation seed (metadata)
  std::vector<double> inputs;      // n x dim, row-major
  std::vector<int> labels;         // in [0, classes)

  std::span<const double> row(int i) const {
    return {inputs.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  void validate() const;
};

// Isotropic Gaussian blobs: class c is centered on a pseudo-random unit
// direction scaled by `separation`. Rows are class-major; the label histogram
// is exactly n_per_class per class.
Dataset gen_gaussian_task(int n_classes, int dim, int n_per_class,
                          double separation, std::uint64_t seed);

enum class PartitionKind { kIid, kByLabel, kDirichlet };

PartitionKind partition_kind_from_string(const std::string& name);
const char* partition_kind_name(PartitionKind kind);

struct ShardAssignment {
  PartitionKind kind = PartitionKind::kIid;
  std::vector<std::vector<int>> shards;  // client -> dataset row indices
  std::vector<double> corruption;        // per-client label-noise rate (empty = none)
};

// Partitions `rows` (indices into the dataset) into n_clients disjoint shards
// that cover `rows` exactly.
//   IID        random equal-size split (remainder spread over the first shards)
//   ByLabel    each client holds rows of exactly one label; labels are cycled
//              over clients, so coverage requires n_clients >= classes
//   Dirichlet  per-class rows split across clients by Dirichlet(alpha) draws
ShardAssignment partition_rows(const Dataset& data, std::span<const int> rows,
                               PartitionKind kind, int n_clients,
                               double dirichlet_alpha, std::uint64_t seed);

// Whole-dataset convenience wrapper.
ShardAssignment partition(const Dataset& data, PartitionKind kind, int n_clients,
                          double dirichlet_alpha, std::uint64_t seed);

// A client's working view of its shard: row indices plus effective labels
// (after label corruption). Does not copy features.
struct ShardView {
  const Dataset* data = nullptr;
  std::vector<int> rows;
  std::vector<int> labels;  // parallel to rows

  int size() const { return static_cast<int>(rows.size()); }
  // Minibatch from positions [first, first+count) of `order` (positions into
  // rows/labels).
  Batch gather(std::span<const int> order, int first, int count) const;
  Batch full_batch() const;
};

ShardView make_view(const Dataset& data, std::span<const int> rows);

// floor(noise_rate * |rows|) rows get labels resampled uniformly from the
// other classes; deterministic in seed.
ShardView corrupt(const Dataset& data, std::span<const int> rows,
                  double noise_rate, std::uint64_t seed);

enum class RehearsalSource { kHeldOut, kReplaySeen };

struct DataSplit {
  std::vector<int> train;
  std::vector<int> rehearsal;
  std::vector<int> eval;
};

// Stratified per class so every class keeps training rows. With kHeldOut the
// rehearsal rows are carved out of the dataset alongside the eval rows; with
// kReplaySeen they are sampled from the training rows instead (already-seen
// data, nothing extra held out).
DataSplit split_dataset(const Dataset& data, double eval_fraction,
                        double rehearsal_fraction, RehearsalSource source,
                        std::uint64_t seed);

// FLDS1 container: magic, little-endian header (u32 n, u32 d, u32 C, u64 seed),
// n*d float64 row-major, n int32 labels.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

// Line-oriented text: `client_id<TAB>comma-separated-indices`.
void save_shards(const ShardAssignment& shards, const std::string& path);
std::vector<std::vector<int>> load_shards(const std::string& path);

}  // namespace flsim
