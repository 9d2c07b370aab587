#include "woet/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace woet {

GroundSet::GroundSet(std::vector<std::vector<double>> points)
    : points_(std::move(points)) {
  if (points_.empty()) {
    throw ValidationError("ground set must be nonempty");
  }
  dim_ = points_[0].size();
  if (dim_ == 0) {
    throw ValidationError("ground points must have dimension >= 1");
  }
  for (const auto& p : points_) {
    if (p.size() != dim_) {
      throw ValidationError("ground points must share one dimension");
    }
    for (double v : p) {
      if (!std::isfinite(v)) {
        throw ValidationError("ground coordinates must be finite");
      }
    }
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if (points_[i] == points_[j]) {
        throw ValidationError("ground points must be distinct (points " +
                              std::to_string(i) + " and " + std::to_string(j) +
                              ")");
      }
    }
  }
}

std::shared_ptr<const GroundSet> GroundSet::create(
    std::vector<std::vector<double>> points) {
  return std::make_shared<const GroundSet>(std::move(points));
}

std::shared_ptr<const GroundSet> GroundSet::create_1d(std::vector<double> xs) {
  std::vector<std::vector<double>> pts;
  pts.reserve(xs.size());
  for (double x : xs) pts.push_back({x});
  return create(std::move(pts));
}

double GroundSet::coord(std::size_t i) const {
  if (!is_1d()) {
    throw ValidationError("coord() requires a 1-D ground set");
  }
  return points_[i][0];
}

double GroundSet::spread_1d() const {
  double lo = coord(0), hi = coord(0);
  for (std::size_t i = 1; i < size(); ++i) {
    lo = std::min(lo, coord(i));
    hi = std::max(hi, coord(i));
  }
  return hi - lo;
}

DiscreteMeasure::DiscreteMeasure(GroundPtr ground, std::vector<double> weights)
    : ground_(std::move(ground)), weights_(std::move(weights)) {
  if (!ground_) {
    throw ValidationError("measure requires a ground set");
  }
  if (weights_.size() != ground_->size()) {
    throw ValidationError("weights size " + std::to_string(weights_.size()) +
                          " != ground size " + std::to_string(ground_->size()));
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
      throw ValidationError("weights[" + std::to_string(i) +
                            "] must be finite and nonnegative");
    }
  }
}

double DiscreteMeasure::total_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

Coupling::Coupling(GroundPtr rows, GroundPtr cols, std::vector<double> mass)
    : rows_(std::move(rows)), cols_(std::move(cols)), mass_(std::move(mass)) {
  if (!rows_ || !cols_) {
    throw ValidationError("coupling requires both ground sets");
  }
  n_rows_ = rows_->size();
  n_cols_ = cols_->size();
  if (mass_.size() != n_rows_ * n_cols_) {
    throw ShapeMismatch("coupling mass has " + std::to_string(mass_.size()) +
                        " entries, expected " +
                        std::to_string(n_rows_ * n_cols_));
  }
  for (double v : mass_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("coupling entries must be finite and nonnegative");
    }
  }
}

Coupling Coupling::zeros(GroundPtr rows, GroundPtr cols) {
  std::vector<double> m(rows->size() * cols->size(), 0.0);
  return Coupling(std::move(rows), std::move(cols), std::move(m));
}

double Coupling::total_mass() const {
  return std::accumulate(mass_.begin(), mass_.end(), 0.0);
}

double Coupling::row_mass(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < n_cols_; ++j) s += (*this)(i, j);
  return s;
}

std::vector<double> Coupling::row(std::size_t i) const {
  return std::vector<double>(mass_.begin() + i * n_cols_,
                             mass_.begin() + (i + 1) * n_cols_);
}

std::pair<DiscreteMeasure, DiscreteMeasure> marginals(const Coupling& c) {
  std::vector<double> first(c.n_rows(), 0.0);
  std::vector<double> second(c.n_cols(), 0.0);
  for (std::size_t i = 0; i < c.n_rows(); ++i) {
    for (std::size_t j = 0; j < c.n_cols(); ++j) {
      first[i] += c(i, j);
      second[j] += c(i, j);
    }
  }
  return {DiscreteMeasure(c.rows(), std::move(first)),
          DiscreteMeasure(c.cols(), std::move(second))};
}

std::vector<double> disintegrate(const Coupling& c, std::size_t row) {
  const double m = c.row_mass(row);
  if (m <= kZeroMass) {
    throw ZeroMassRow("row " + std::to_string(row) + " has zero mass");
  }
  std::vector<double> p(c.n_cols());
  for (std::size_t j = 0; j < c.n_cols(); ++j) p[j] = c(row, j) / m;
  return p;
}

LebesgueDecomposition lebesgue_decompose(const DiscreteMeasure& gamma,
                                         const DiscreteMeasure& mu) {
  if (!gamma.same_ground(mu)) {
    throw GroundMismatch("lebesgue_decompose requires a shared ground set");
  }
  LebesgueDecomposition out;
  out.density.assign(gamma.size(), 0.0);
  out.singular_support.assign(gamma.size(), false);
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (mu.weight(i) > 0.0) {
      out.density[i] = gamma.weight(i) / mu.weight(i);
    } else if (gamma.weight(i) > 0.0) {
      out.singular_support[i] = true;
      out.singular_mass += gamma.weight(i);
    }
  }
  return out;
}

DiscreteMeasure scale(const DiscreteMeasure& mu, double lambda) {
  if (!(lambda >= 0.0)) {
    throw NegativeScale("scale factor must be nonnegative, got " +
                        std::to_string(lambda));
  }
  std::vector<double> w(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) w[i] = lambda * mu.weight(i);
  return DiscreteMeasure(mu.ground(), std::move(w));
}

}  // namespace woet
