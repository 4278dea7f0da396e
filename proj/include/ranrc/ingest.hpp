#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace ranrc {

/// Immutable training set. Labels are always remapped to {-1, +1}.
struct Dataset {
  Eigen::MatrixXd features;  // |E| x (n-1) selected word-frequency columns
  Eigen::VectorXd labels;    // |E|, entries in {-1, +1}
};

/// Loads a UCI spambase style CSV: comma-separated numeric rows, last column a
/// {0,1} label (0 -> -1, 1 -> +1). feature_columns are 0-based attribute
/// indices extracted in the given order. Throws std::runtime_error naming the
/// offending row on malformed input.
Dataset load_spambase(const std::string& path, const std::vector<int>& feature_columns);

enum class PartitionMode {
  IidUniform,  // each row assigned to a uniformly random node; sizes vary
  Balanced,    // seeded shuffle then round-robin; sizes differ by at most one
};

/// Splits row indices [0, |E|) across n_nodes. Disjoint, covering, and a pure
/// function of (row count, n_nodes, seed, mode).
std::vector<std::vector<int>> partition_dataset(const Dataset& d, int n_nodes, std::uint64_t seed,
                                                PartitionMode mode = PartitionMode::IidUniform);

/// In-place z-score of each feature column (constant columns left untouched).
/// Off by default everywhere; exists for experimentation only.
void standardize_features(Dataset& d);

}  // namespace ranrc
