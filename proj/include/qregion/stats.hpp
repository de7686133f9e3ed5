#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace qregion {

class DegenerateVarianceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Sample Pearson coefficient. Vectors equal within 1e-12 give 1.0; zero
/// variance otherwise throws DegenerateVarianceError. Needs length >= 3.
double pearson(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> x);

/// Pearson on fractional ranks.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace qregion
