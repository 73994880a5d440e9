#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace swa {

/// A batch of examples: row-major inputs [n x dim] and integer class labels.
struct Batch {
  std::vector<double> x;
  std::vector<int> y;
  int n = 0;
  int dim = 0;

  const double* row(int i) const { return x.data() + static_cast<std::size_t>(i) * dim; }
};

/// In-memory dataset. Minibatches are gathered views copied into a reusable
/// Batch buffer by the trainer.
struct Dataset {
  std::vector<double> x;  // [n x dim] row-major
  std::vector<int> y;
  int n = 0;
  int dim = 0;
  int classes = 0;

  Batch as_batch() const;
  /// Copies rows `idx[first..first+count)` into `out` (resized as needed).
  void gather(const std::vector<int>& idx, int first, int count, Batch& out) const;
};

enum class Generator { blobs, spirals, xor_quads };

struct DataConfig {
  Generator generator = Generator::spirals;
  int n_train = 1000;
  int n_test = 1000;
  double noise = 0.05;
  std::uint64_t seed = 1;
  int classes = 3;          // blobs only
  double spiral_turns = 1.75;
  std::string csv_path;     // when set, overrides the generator
  int label_column = -1;    // -1 = last column
  double csv_test_fraction = 0.5;

  bool operator==(const DataConfig&) const = default;
};

/// Gaussian blobs: `classes` clusters spaced on a circle of radius 2,
/// isotropic noise. noise = 0 degenerates to the class centers.
Dataset make_blobs(int n, int classes, double noise, std::uint64_t seed);

/// Two interleaved spirals, equal class counts (first class gets the extra
/// sample when n is odd).
Dataset make_spirals(int n, double noise, std::uint64_t seed, double turns = 1.75);

/// Four Gaussian clusters at (+-1, +-1); label = XOR of the quadrant signs.
Dataset make_xor(int n, double noise, std::uint64_t seed);

/// Numeric CSV with an integer label column (default: last). Header rows
/// with non-numeric cells are skipped; malformed data rows raise IoError
/// with the offending row number.
Dataset load_csv(const std::string& path, int label_column = -1);

/// (train, test) pair per the config; deterministic given cfg.seed.
std::pair<Dataset, Dataset> make_dataset(const DataConfig& cfg);

}  // namespace swa
