#include "ranrc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ranrc/rng.hpp"

namespace ranrc {

namespace {

std::vector<double> parse_csv_row(const std::string& line, long row_index) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    const char* first = line.data() + start;
    const char* last = line.data() + end;
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
      throw std::runtime_error("load_spambase: malformed row " + std::to_string(row_index) +
                               ": bad cell '" + std::string(first, last) + "'");
    values.push_back(v);
    start = end + 1;
  }
  return values;
}

}  // namespace

Dataset load_spambase(const std::string& path, const std::vector<int>& feature_columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_spambase: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  long row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      ++row_index;
      continue;
    }
    rows.push_back(parse_csv_row(line, row_index));
    if (rows.back().size() < 2)
      throw std::runtime_error("load_spambase: malformed row " + std::to_string(row_index) +
                               ": need at least one feature and a label");
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw std::runtime_error("load_spambase: malformed row " + std::to_string(row_index) +
                               ": column count differs from first row");
    ++row_index;
  }
  if (rows.empty()) throw std::runtime_error("load_spambase: " + path + " has no data rows");

  const long n_cols = static_cast<long>(rows.front().size());
  for (int c : feature_columns)
    if (c < 0 || c >= n_cols - 1)
      throw std::runtime_error("load_spambase: feature column " + std::to_string(c) +
                               " out of range (file has " + std::to_string(n_cols - 1) +
                               " feature columns)");

  Dataset d;
  d.features.resize(static_cast<long>(rows.size()), static_cast<long>(feature_columns.size()));
  d.labels.resize(static_cast<long>(rows.size()));
  for (long r = 0; r < d.features.rows(); ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    const double raw_label = row.back();
    if (raw_label != 0.0 && raw_label != 1.0)
      throw std::runtime_error("load_spambase: row " + std::to_string(r) + " label " +
                               std::to_string(raw_label) + " is not in {0,1}");
    d.labels[r] = raw_label == 1.0 ? 1.0 : -1.0;
    for (std::size_t c = 0; c < feature_columns.size(); ++c)
      d.features(r, static_cast<long>(c)) = row[static_cast<std::size_t>(feature_columns[c])];
  }
  return d;
}

std::vector<std::vector<int>> partition_dataset(const Dataset& d, int n_nodes, std::uint64_t seed,
                                                PartitionMode mode) {
  if (n_nodes < 1) throw std::invalid_argument("partition_dataset: n_nodes must be >= 1");
  const int rows = static_cast<int>(d.labels.size());
  std::vector<std::vector<int>> parts(n_nodes);
  Rng rng(seed);
  if (mode == PartitionMode::IidUniform) {
    for (int r = 0; r < rows; ++r) parts[rng.below(n_nodes)].push_back(r);
  } else {
    std::vector<int> order(rows);
    for (int r = 0; r < rows; ++r) order[r] = r;
    // Fisher-Yates with the portable engine, then round-robin.
    for (int r = rows - 1; r > 0; --r) std::swap(order[r], order[rng.below(r + 1)]);
    for (int r = 0; r < rows; ++r) parts[r % n_nodes].push_back(order[r]);
    for (auto& p : parts) std::sort(p.begin(), p.end());
  }
  return parts;
}

void standardize_features(Dataset& d) {
  for (long c = 0; c < d.features.cols(); ++c) {
    auto col = d.features.col(c);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() /
                                std::max<long>(1, col.size() - 1));
    if (sd > 0.0) col = (col.array() - mean) / sd;
  }
}

}  // namespace ranrc
