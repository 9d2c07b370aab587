#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "woet/errors.hpp"
#include "woet/extended_real.hpp"

namespace woet {

// Weights at or below this threshold are treated as exact zeros when testing
// row-mass positivity, so disintegration never divides by a denormal.
inline constexpr double kZeroMass = 1e-15;

// Finite list of distinct points in R^d. Measures refer to their ground set
// by shared identity; arithmetic across distinct ground sets is an error
// rather than a silent reindexing.
class GroundSet {
 public:
  explicit GroundSet(std::vector<std::vector<double>> points);

  static std::shared_ptr<const GroundSet> create(
      std::vector<std::vector<double>> points);
  // Convenience for 1-D grounds.
  static std::shared_ptr<const GroundSet> create_1d(std::vector<double> xs);

  std::size_t size() const { return points_.size(); }
  std::size_t dimension() const { return dim_; }
  const std::vector<double>& point(std::size_t i) const { return points_[i]; }
  const std::vector<std::vector<double>>& points() const { return points_; }

  bool is_1d() const { return dim_ == 1; }
  // 1-D coordinate of point i; requires is_1d().
  double coord(std::size_t i) const;
  // max - min coordinate of a 1-D ground set.
  double spread_1d() const;

 private:
  std::vector<std::vector<double>> points_;
  std::size_t dim_ = 0;
};

using GroundPtr = std::shared_ptr<const GroundSet>;

// Nonnegative weighted point cloud on a ground set.
class DiscreteMeasure {
 public:
  DiscreteMeasure(GroundPtr ground, std::vector<double> weights);

  const GroundPtr& ground() const { return ground_; }
  std::size_t size() const { return weights_.size(); }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  double total_mass() const;
  bool same_ground(const DiscreteMeasure& other) const {
    return ground_ == other.ground_;
  }

 private:
  GroundPtr ground_;
  std::vector<double> weights_;
};

// Nonnegative matrix over rows-ground x cols-ground.
class Coupling {
 public:
  Coupling(GroundPtr rows, GroundPtr cols, std::vector<double> mass);

  static Coupling zeros(GroundPtr rows, GroundPtr cols);

  const GroundPtr& rows() const { return rows_; }
  const GroundPtr& cols() const { return cols_; }
  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }

  double operator()(std::size_t i, std::size_t j) const {
    return mass_[i * n_cols_ + j];
  }
  const std::vector<double>& mass() const { return mass_; }
  double total_mass() const;
  double row_mass(std::size_t i) const;
  std::vector<double> row(std::size_t i) const;

 private:
  GroundPtr rows_;
  GroundPtr cols_;
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<double> mass_;  // row-major
};

// gamma = density * mu + singular part, split pointwise.
struct LebesgueDecomposition {
  // density[i] = gamma_i / mu_i where mu_i > 0; unset entries are 0.
  std::vector<double> density;
  // marks the points where mu vanishes and gamma does not
  std::vector<bool> singular_support;
  double singular_mass = 0.0;
};

std::pair<DiscreteMeasure, DiscreteMeasure> marginals(const Coupling& c);

// Conditional probability weights of row i; requires positive row mass.
std::vector<double> disintegrate(const Coupling& c, std::size_t row);

LebesgueDecomposition lebesgue_decompose(const DiscreteMeasure& gamma,
                                         const DiscreteMeasure& mu);

DiscreteMeasure scale(const DiscreteMeasure& mu, double lambda);

}  // namespace woet
