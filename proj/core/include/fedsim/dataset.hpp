#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace fedsim {

/// Labeled samples with dense real features. Feature rows are stored flat
/// (n x feature_dim, row-major).
struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t n_classes = 0;
  std::vector<double> features;  // size n * feature_dim
  std::vector<int> labels;       // size n, each in [0, n_classes)

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }

  void validate() const;
};

/// Disjoint cover of a dataset's indices: one index list ("shard") per
/// client. Shards are non-empty; their multiset union is exactly {0..n-1}.
struct Partition {
  std::vector<std::vector<std::size_t>> shards;

  std::size_t n_clients() const { return shards.size(); }
  /// Throws if the shards are not a disjoint, complete, non-empty cover.
  void validate(std::size_t n_samples) const;
};

/// Isotropic Gaussian mixture with one unit-variance component per class.
/// Class means are drawn once from the seed, uniform in [-1,1]^dim, and
/// redrawn until every pair is at least spread/2 apart (at most 1000
/// attempts per mean -- fails when spread is too large for the dimension).
/// Samples are grouped by class: indices [c*per_class, (c+1)*per_class).
Dataset gen_gaussian_mixture(std::size_t classes, std::size_t dim, std::size_t per_class,
                             double spread, std::uint64_t seed);

/// Label-skewed split: for each class, sample indices are allocated to
/// clients proportionally to a Dirichlet(beta) weight vector (largest
/// remainder rounding, ties toward the lower client id). Empty shards are
/// repaired by moving the lowest index out of the largest shard.
Partition partition_dirichlet(const Dataset& ds, std::size_t n_clients, double beta,
                              std::uint64_t seed);

/// Pathological split: each client holds samples from exactly gamma
/// distinct classes. Class-to-client assignment round-robins over a seeded
/// shuffle of the classes; each class's samples are split evenly among the
/// clients assigned to it.
Partition partition_pathological(const Dataset& ds, std::size_t n_clients, std::size_t gamma,
                                 std::uint64_t seed);

/// Line-oriented text formats for reproducibility archives:
/// dataset: header line "n feature_dim n_classes", then per sample
/// "label f0 f1 ...". Partition: one shard per line of indices.
void save_dataset(const Dataset& ds, std::ostream& out);
Dataset load_dataset(std::istream& in);
void save_partition(const Partition& p, std::ostream& out);
Partition load_partition(std::istream& in);

/// Mean over shards of the Shannon entropy (nats) of the shard's label
/// histogram. Diagnostic for partition skew.
double mean_label_entropy(const Dataset& ds, const Partition& p);

}  // namespace fedsim
