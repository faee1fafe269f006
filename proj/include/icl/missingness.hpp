#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "icl/datagen.hpp"
#include "icl/graph.hpp"
#include "icl/numeric.hpp"

namespace icl {

// Observation indicator: 1 = observed, 0 = missing.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool observed = true);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool observed(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool observed) { bits_[r * cols_ + c] = observed ? 1 : 0; }

  std::size_t missing_count() const;
  double missing_fraction() const;
  bool row_complete(std::size_t r) const;
  Matrix as_matrix() const;
  Mask select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const Mask&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Values with NaN at every position where the mask is 0.
struct MaskedDataset {
  Matrix values;
  Mask mask;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
};

enum class MissingMechanism { mcar, mar };
enum class MarSource { t_matrix, parent_value };

std::string to_string(MissingMechanism m);
MissingMechanism parse_missing_mechanism(const std::string& s);
std::string to_string(MarSource s);
MarSource parse_mar_source(const std::string& s);

struct MissingSpec {
  MissingMechanism mechanism = MissingMechanism::mcar;
  double rate = 0.3;
  // Filled in by the generators.
  double tau = 0.0;
  std::vector<Edge> pairs;
  // MAR: maximum number of parent-child pairs, 0 = as many as stay consistent.
  std::size_t max_pairs = 0;
  MarSource source = MarSource::t_matrix;
};

// Largest accepted proportion is strictly below one.
void validate_missing_rate(double m);

Mask mcar_mask(std::size_t n, std::size_t d, double m, RngStream& rng);

struct MarResult {
  Mask mask;
  MissingSpec spec;
};

// Child columns of sampled parent-child pairs go missing where a pair's
// parent draws below tau; tau is bisected to hit the requested rate.
MarResult mar_mask(const GroundTruth& truth, const Matrix& data, double m, RngStream& rng,
                   const MissingSpec& options = {});

MaskedDataset apply_mask(const Matrix& x, const Mask& r);

// Missing entries replaced by independent standard-normal draws.
Matrix init_fill(const MaskedDataset& xbar, RngStream& rng);

}  // namespace icl
