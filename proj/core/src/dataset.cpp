#include "fedsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim {

void Dataset::validate() const {
  if (labels.empty()) {
    throw std::invalid_argument("Dataset: empty");
  }
  if (features.size() != labels.size() * feature_dim) {
    throw std::invalid_argument("Dataset: feature/label size mismatch");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw std::invalid_argument("Dataset: label out of range");
    }
  }
}

void Partition::validate(std::size_t n_samples) const {
  std::vector<char> seen(n_samples, 0);
  std::size_t total = 0;
  for (const auto& shard : shards) {
    if (shard.empty()) {
      throw std::invalid_argument("Partition: empty shard");
    }
    for (std::size_t idx : shard) {
      if (idx >= n_samples) {
        throw std::invalid_argument("Partition: index out of range");
      }
      if (seen[idx]) {
        throw std::invalid_argument("Partition: duplicated index");
      }
      seen[idx] = 1;
      ++total;
    }
  }
  if (total != n_samples) {
    throw std::invalid_argument("Partition: cover is incomplete");
  }
}

Dataset gen_gaussian_mixture(std::size_t classes, std::size_t dim, std::size_t per_class,
                             double spread, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("gen_gaussian_mixture: classes must be >= 2");
  if (dim < 1) throw std::invalid_argument("gen_gaussian_mixture: dim must be >= 1");
  if (per_class < 1) throw std::invalid_argument("gen_gaussian_mixture: per_class must be >= 1");
  if (!(spread > 0.0)) throw std::invalid_argument("gen_gaussian_mixture: spread must be > 0");

  Rng rng(derive_stream(seed, stream_purpose::kDataGeneration, 0, 0));

  // Draw per-class means, each rejected until far enough from all earlier
  // means. Failure after 1000 attempts means the requested separation does
  // not fit in [-1,1]^dim.
  const double min_dist = 0.5 * spread;
  std::vector<std::vector<double>> means(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      std::vector<double> m(dim);
      for (auto& v : m) v = rng.uniform(-1.0, 1.0);
      bool ok = true;
      for (std::size_t prev = 0; prev < c && ok; ++prev) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          double diff = m[j] - means[prev][j];
          d2 += diff * diff;
        }
        ok = d2 >= min_dist * min_dist;
      }
      if (ok) {
        means[c] = std::move(m);
        placed = true;
      }
    }
    if (!placed) {
      throw std::runtime_error(
          "gen_gaussian_mixture: could not place class means after 1000 attempts "
          "(spread too large for dim)");
    }
  }

  Dataset ds;
  ds.feature_dim = dim;
  ds.n_classes = classes;
  ds.features.reserve(classes * per_class * dim);
  ds.labels.reserve(classes * per_class);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        ds.features.push_back(means[c][j] + rng.normal());
      }
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

namespace {

/// Split `count` items among weights by largest remainder; ties toward the
/// lower index. Returns per-weight integer counts summing to count.
std::vector<std::size_t> largest_remainder_counts(const std::vector<double>& weights,
                                                  std::size_t count) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n, 0);
  std::vector<double> remainder(n, 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double exact = weights[i] * static_cast<double>(count);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - std::floor(exact);
    assigned += out[i];
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < count; ++k) {
    out[order[k % n]] += 1;
    ++assigned;
  }
  return out;
}

/// Move single samples out of the largest shards until no shard is empty.
/// Deterministic: the donor is the shard holding the globally smallest index
/// among the largest shards, and it donates that index.
void repair_empty_shards(Partition& p) {
  for (;;) {
    std::size_t empty_at = p.shards.size();
    for (std::size_t i = 0; i < p.shards.size(); ++i) {
      if (p.shards[i].empty()) {
        empty_at = i;
        break;
      }
    }
    if (empty_at == p.shards.size()) return;

    std::size_t largest = 0;
    for (const auto& s : p.shards) largest = std::max(largest, s.size());
    if (largest <= 1) {
      throw std::invalid_argument("partition: fewer samples than clients");
    }
    std::size_t donor = p.shards.size();
    std::size_t donor_min = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < p.shards.size(); ++i) {
      if (p.shards[i].size() != largest) continue;
      std::size_t mn = *std::min_element(p.shards[i].begin(), p.shards[i].end());
      if (mn < donor_min) {
        donor_min = mn;
        donor = i;
      }
    }
    auto& d = p.shards[donor];
    d.erase(std::find(d.begin(), d.end(), donor_min));
    p.shards[empty_at].push_back(donor_min);
  }
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.n_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  return by_class;
}

}  // namespace

Partition partition_dirichlet(const Dataset& ds, std::size_t n_clients, double beta,
                              std::uint64_t seed) {
  ds.validate();
  if (!(beta > 0.0)) throw std::invalid_argument("partition_dirichlet: beta must be > 0");
  if (n_clients < 1) throw std::invalid_argument("partition_dirichlet: n_clients must be >= 1");
  if (n_clients > ds.size()) {
    throw std::invalid_argument("partition_dirichlet: more clients than samples");
  }

  Rng rng(derive_stream(seed, stream_purpose::kPartition, 0, 0));
  Partition p;
  p.shards.resize(n_clients);

  for (const auto& class_indices : indices_by_class(ds)) {
    if (class_indices.empty()) continue;
    std::vector<double> w = rng.dirichlet_symmetric(beta, n_clients);
    std::vector<std::size_t> counts = largest_remainder_counts(w, class_indices.size());
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < n_clients; ++k) {
      for (std::size_t t = 0; t < counts[k]; ++t) {
        p.shards[k].push_back(class_indices[cursor++]);
      }
    }
  }

  repair_empty_shards(p);
  for (auto& shard : p.shards) std::sort(shard.begin(), shard.end());
  p.validate(ds.size());
  return p;
}

Partition partition_pathological(const Dataset& ds, std::size_t n_clients, std::size_t gamma,
                                 std::uint64_t seed) {
  ds.validate();
  const std::size_t C = ds.n_classes;
  if (gamma < 1 || gamma > C) {
    throw std::invalid_argument("partition_pathological: gamma must be in [1, n_classes]");
  }
  if (n_clients * gamma < C) {
    throw std::invalid_argument(
        "partition_pathological: infeasible, n_clients * gamma < n_classes");
  }

  Rng rng(derive_stream(seed, stream_purpose::kPartition, 0, 1));
  std::vector<std::size_t> class_order(C);
  for (std::size_t c = 0; c < C; ++c) class_order[c] = c;
  rng.shuffle(class_order);

  // Slot i of the round-robin belongs to client i / gamma and carries class
  // class_order[i mod C]; gamma <= C keeps a client's classes distinct.
  std::vector<std::vector<std::size_t>> clients_of_class(C);
  for (std::size_t slot = 0; slot < n_clients * gamma; ++slot) {
    clients_of_class[class_order[slot % C]].push_back(slot / gamma);
  }

  auto by_class = indices_by_class(ds);
  for (std::size_t c = 0; c < C; ++c) {
    if (by_class[c].size() < clients_of_class[c].size()) {
      throw std::invalid_argument(
          "partition_pathological: class " + std::to_string(c) +
          " has fewer samples than assigned clients; every assigned client needs at least one");
    }
  }

  Partition p;
  p.shards.resize(n_clients);
  for (std::size_t c = 0; c < C; ++c) {
    const auto& assignees = clients_of_class[c];
    const auto& idx = by_class[c];
    // Even split with the first shards taking the remainder.
    std::size_t base = idx.size() / assignees.size();
    std::size_t extra = idx.size() % assignees.size();
    std::size_t cursor = 0;
    for (std::size_t a = 0; a < assignees.size(); ++a) {
      std::size_t take = base + (a < extra ? 1 : 0);
      for (std::size_t t = 0; t < take; ++t) {
        p.shards[assignees[a]].push_back(idx[cursor++]);
      }
    }
  }

  for (auto& shard : p.shards) std::sort(shard.begin(), shard.end());
  p.validate(ds.size());
  return p;
}

void save_dataset(const Dataset& ds, std::ostream& out) {
  out << ds.size() << ' ' << ds.feature_dim << ' ' << ds.n_classes << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (double v : ds.row(i)) out << ' ' << v;
    out << '\n';
  }
}

Dataset load_dataset(std::istream& in) {
  Dataset ds;
  std::size_t n = 0;
  if (!(in >> n >> ds.feature_dim >> ds.n_classes)) {
    throw std::runtime_error("load_dataset: bad header");
  }
  ds.labels.resize(n);
  ds.features.resize(n * ds.feature_dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> ds.labels[i])) throw std::runtime_error("load_dataset: truncated labels");
    for (std::size_t j = 0; j < ds.feature_dim; ++j) {
      if (!(in >> ds.features[i * ds.feature_dim + j])) {
        throw std::runtime_error("load_dataset: truncated features");
      }
    }
  }
  ds.validate();
  return ds;
}

void save_partition(const Partition& p, std::ostream& out) {
  for (const auto& shard : p.shards) {
    for (std::size_t i = 0; i < shard.size(); ++i) {
      if (i) out << ' ';
      out << shard[i];
    }
    out << '\n';
  }
}

Partition load_partition(std::istream& in) {
  Partition p;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::size_t> shard;
    std::size_t idx;
    while (ls >> idx) shard.push_back(idx);
    p.shards.push_back(std::move(shard));
  }
  return p;
}

double mean_label_entropy(const Dataset& ds, const Partition& p) {
  double total = 0.0;
  for (const auto& shard : p.shards) {
    std::vector<std::size_t> hist(ds.n_classes, 0);
    for (std::size_t idx : shard) hist[static_cast<std::size_t>(ds.labels[idx])]++;
    double h = 0.0;
    for (std::size_t c : hist) {
      if (c == 0) continue;
      double q = static_cast<double>(c) / static_cast<double>(shard.size());
      h -= q * std::log(q);
    }
    total += h;
  }
  return total / static_cast<double>(p.n_clients());
}

}  // namespace fedsim
