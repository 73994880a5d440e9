#include "swa/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "swa/errors.hpp"

namespace swa {

Batch Dataset::as_batch() const {
  Batch b;
  b.x = x;
  b.y = y;
  b.n = n;
  b.dim = dim;
  return b;
}

void Dataset::gather(const std::vector<int>& idx, int first, int count,
                     Batch& out) const {
  out.n = count;
  out.dim = dim;
  out.x.resize(static_cast<std::size_t>(count) * dim);
  out.y.resize(count);
  for (int i = 0; i < count; ++i) {
    const int src = idx[first + i];
    std::copy_n(x.data() + static_cast<std::size_t>(src) * dim, dim,
                out.x.data() + static_cast<std::size_t>(i) * dim);
    out.y[i] = y[src];
  }
}

Dataset make_blobs(int n, int classes, double noise, std::uint64_t seed) {
  if (n < 1 || classes < 2) throw DomainError("make_blobs: need n >= 1 and classes >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.n = n;
  d.dim = 2;
  d.classes = classes;
  d.x.resize(static_cast<std::size_t>(n) * 2);
  d.y.resize(n);
  const double radius = 2.0;
  for (int i = 0; i < n; ++i) {
    const int c = i % classes;
    const double ang = 2.0 * std::numbers::pi * c / classes;
    d.x[2 * static_cast<std::size_t>(i)] = radius * std::cos(ang) + noise * gauss(rng);
    d.x[2 * static_cast<std::size_t>(i) + 1] = radius * std::sin(ang) + noise * gauss(rng);
    d.y[i] = c;
  }
  return d;
}

Dataset make_spirals(int n, double noise, std::uint64_t seed, double turns) {
  if (n < 1) throw DomainError("make_spirals: need n >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.n = n;
  d.dim = 2;
  d.classes = 2;
  d.x.resize(static_cast<std::size_t>(n) * 2);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const int c = i % 2;
    const double u = unif(rng);
    const double r = 0.2 + 0.8 * u;
    const double ang = turns * 2.0 * std::numbers::pi * u + c * std::numbers::pi;
    d.x[2 * static_cast<std::size_t>(i)] = r * std::cos(ang) + noise * gauss(rng);
    d.x[2 * static_cast<std::size_t>(i) + 1] = r * std::sin(ang) + noise * gauss(rng);
    d.y[i] = c;
  }
  return d;
}

Dataset make_xor(int n, double noise, std::uint64_t seed) {
  if (n < 1) throw DomainError("make_xor: need n >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.n = n;
  d.dim = 2;
  d.classes = 2;
  d.x.resize(static_cast<std::size_t>(n) * 2);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const int quad = i % 4;
    const double sx = (quad & 1) ? 1.0 : -1.0;
    const double sy = (quad & 2) ? 1.0 : -1.0;
    d.x[2 * static_cast<std::size_t>(i)] = sx + noise * gauss(rng);
    d.x[2 * static_cast<std::size_t>(i) + 1] = sy + noise * gauss(rng);
    d.y[i] = (sx * sy < 0.0) ? 1 : 0;
  }
  return d;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

Dataset load_csv(const std::string& path, int label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv file: " + path);
  Dataset d;
  std::string line;
  int row = 0;
  int n_cols = -1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cells = split_csv_row(line);
    if (n_cols < 0) {
      // Allow a single header row of non-numeric cells.
      double tmp;
      if (!parse_double(cells[0], tmp) && row == 1) continue;
      n_cols = static_cast<int>(cells.size());
      if (n_cols < 2) throw IoError("csv row " + std::to_string(row) + ": need at least 2 columns");
    }
    if (static_cast<int>(cells.size()) != n_cols)
      throw IoError("csv row " + std::to_string(row) + ": expected " +
                    std::to_string(n_cols) + " columns, got " +
                    std::to_string(cells.size()));
    const int lc = label_column < 0 ? n_cols - 1 : label_column;
    if (lc >= n_cols)
      throw IoError("csv row " + std::to_string(row) + ": label column " +
                    std::to_string(lc) + " out of range");
    for (int c = 0; c < n_cols; ++c) {
      double v;
      if (!parse_double(cells[c], v))
        throw IoError("csv row " + std::to_string(row) + ": cell '" + cells[c] +
                      "' is not numeric");
      if (c == lc) {
        const int label = static_cast<int>(std::llround(v));
        if (static_cast<double>(label) != v || label < 0)
          throw IoError("csv row " + std::to_string(row) +
                        ": label must be a nonnegative integer");
        d.y.push_back(label);
      } else {
        d.x.push_back(v);
      }
    }
    ++d.n;
  }
  if (d.n == 0) throw IoError("csv file has no data rows: " + path);
  d.dim = n_cols - 1;
  d.classes = *std::max_element(d.y.begin(), d.y.end()) + 1;
  return d;
}

std::pair<Dataset, Dataset> make_dataset(const DataConfig& cfg) {
  if (!cfg.csv_path.empty()) {
    Dataset all = load_csv(cfg.csv_path, cfg.label_column);
    // Deterministic split: every k-th row to test, based on the test fraction.
    Dataset train, test;
    train.dim = test.dim = all.dim;
    train.classes = test.classes = all.classes;
    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(all.n);
    for (int i = 0; i < all.n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const int n_test = static_cast<int>(all.n * cfg.csv_test_fraction);
    for (int i = 0; i < all.n; ++i) {
      Dataset& dst = (i < n_test) ? test : train;
      const int src = order[i];
      dst.x.insert(dst.x.end(), all.x.begin() + static_cast<std::size_t>(src) * all.dim,
                   all.x.begin() + static_cast<std::size_t>(src + 1) * all.dim);
      dst.y.push_back(all.y[src]);
      ++dst.n;
    }
    if (train.n == 0 || test.n == 0)
      throw ConfigError("csv split left an empty train or test set");
    return {train, test};
  }
  if (cfg.n_train < 1 || cfg.n_test < 1)
    throw ConfigError("data: n_train and n_test must be >= 1");
  auto gen = [&](int n, std::uint64_t seed) {
    switch (cfg.generator) {
      case Generator::blobs: return make_blobs(n, cfg.classes, cfg.noise, seed);
      case Generator::spirals: return make_spirals(n, cfg.noise, seed, cfg.spiral_turns);
      case Generator::xor_quads: return make_xor(n, cfg.noise, seed);
    }
    throw ConfigError("unknown generator");
  };
  return {gen(cfg.n_train, cfg.seed), gen(cfg.n_test, cfg.seed + 0x9e3779b97f4a7c15ull)};
}

}  // namespace swa
