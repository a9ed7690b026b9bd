#pragma once

#include <functional>
#include <string>

namespace reppm {

/// Bonus curve families. Each raw curve is normalized to supremum 1 before
/// the cap is applied, so `cap` is the supremum of the bonus for every
/// family and `scale` rescales the input mass (R -> R / scale).
enum class RbfFamily { Tanh, LogisticShifted, ArctanScaled };

std::string to_string(RbfFamily family);

struct RbfSpec {
  RbfFamily family = RbfFamily::Tanh;
  double cap = 1.0;    // sigma, > 0
  double scale = 1.0;  // kappa, > 0

  void validate() const;
};

/// Bonus for referred mass r >= 0: cap * f(r / scale) with f in
/// {tanh, 2*(logistic - 1/2), (2/pi)*atan}. Throws std::domain_error for
/// negative mass.
double rbf_eval(const RbfSpec& spec, double r);

/// Numerical admissibility report for a bonus curve on a uniform grid:
/// well-defined positive gradient, concavity, strict cap, zero at origin.
struct RbfConditionReport {
  bool gradient_defined = false;   // finite central differences everywhere
  bool gradient_positive = false;  // ds/dR > 0 on the grid
  bool concave = false;            // d2s/dR2 <= 0 on the grid
  bool bounded_below_cap = false;  // s(R) < cap on the grid
  bool zero_at_origin = false;     // s(0) = 0

  double min_gradient = 0.0;
  double max_second_difference = 0.0;
  double max_value = 0.0;

  bool pass() const {
    return gradient_defined && gradient_positive && concave && bounded_below_cap &&
           zero_at_origin;
  }
};

RbfConditionReport rbf_check_conditions(const RbfSpec& spec, double grid_max,
                                        double grid_step);

/// Same sweep for an arbitrary curve; lets tests probe inadmissible shapes.
RbfConditionReport rbf_check_conditions(const std::function<double(double)>& s,
                                        double cap, double grid_max, double grid_step);

}  // namespace reppm
