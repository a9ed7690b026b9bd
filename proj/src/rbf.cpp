#include "reppm/rbf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace reppm {

std::string to_string(RbfFamily family) {
  switch (family) {
    case RbfFamily::Tanh: return "tanh";
    case RbfFamily::LogisticShifted: return "logistic_shifted";
    case RbfFamily::ArctanScaled: return "arctan_scaled";
  }
  return "?";
}

void RbfSpec::validate() const {
  if (!(cap > 0.0)) throw std::invalid_argument("rbf: cap must be positive");
  if (!(scale > 0.0)) throw std::invalid_argument("rbf: scale must be positive");
}

double rbf_eval(const RbfSpec& spec, double r) {
  spec.validate();
  if (r < 0.0) throw std::domain_error("rbf: referred mass must be nonnegative");
  const double z = r / spec.scale;
  double unit = 0.0;
  switch (spec.family) {
    case RbfFamily::Tanh:
      unit = std::tanh(z);
      break;
    case RbfFamily::LogisticShifted:
      // Raw logistic minus 1/2 saturates at 1/2; doubled so the supremum is 1.
      unit = 2.0 * (1.0 / (1.0 + std::exp(-z)) - 0.5);
      break;
    case RbfFamily::ArctanScaled:
      unit = (2.0 / M_PI) * std::atan(z);
      break;
  }
  return spec.cap * unit;
}

RbfConditionReport rbf_check_conditions(const std::function<double(double)>& s,
                                        double cap, double grid_max, double grid_step) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("rbf: grid step must be positive");
  if (grid_max < grid_step) throw std::invalid_argument("rbf: grid max below grid step");

  RbfConditionReport rep;
  rep.gradient_defined = true;
  rep.gradient_positive = true;
  rep.concave = true;
  rep.bounded_below_cap = true;

  const double h = grid_step;
  const double origin = s(0.0);
  rep.zero_at_origin = std::abs(origin) <= 1e-12;
  rep.max_value = origin;
  rep.min_gradient = std::numeric_limits<double>::infinity();
  rep.max_second_difference = -std::numeric_limits<double>::infinity();

  for (double r = h; r <= grid_max + 0.5 * h; r += h) {
    const double lo = s(r - h);
    const double mid = s(r);
    const double hi = s(r + h);
    const double grad = (hi - lo) / (2.0 * h);
    const double second = (hi - 2.0 * mid + lo) / (h * h);
    if (!std::isfinite(grad) || !std::isfinite(second)) rep.gradient_defined = false;
    if (!(grad > 0.0)) rep.gradient_positive = false;
    if (second > 1e-9) rep.concave = false;
    if (mid >= cap) rep.bounded_below_cap = false;
    rep.min_gradient = std::min(rep.min_gradient, grad);
    rep.max_second_difference = std::max(rep.max_second_difference, second);
    rep.max_value = std::max(rep.max_value, mid);
  }
  return rep;
}

RbfConditionReport rbf_check_conditions(const RbfSpec& spec, double grid_max,
                                        double grid_step) {
  spec.validate();
  return rbf_check_conditions([&spec](double r) { return rbf_eval(spec, r); }, spec.cap,
                              grid_max, grid_step);
}

}  // namespace reppm
