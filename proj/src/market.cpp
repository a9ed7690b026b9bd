#include "reppm/market.hpp"

#include <cmath>
#include <stdexcept>

namespace reppm {

std::string to_string(CostFamily family) {
  switch (family) {
    case CostFamily::Lmsr: return "lmsr";
  }
  return "?";
}

void CostFunction::validate() const {
  if (!(liquidity > 0.0)) throw std::invalid_argument("market: liquidity must be positive");
}

double c0(const CostFunction& cf, double q) {
  cf.validate();
  const double z = q / cf.liquidity;
  // ln(1 + e^z) = max(z, 0) + ln(1 + e^-|z|)
  return cf.liquidity * (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))));
}

double c0_inverse(const CostFunction& cf, double y) {
  cf.validate();
  if (!(y > 0.0))
    throw std::domain_error("market: c0 inverse only defined for positive cost");
  const double w = y / cf.liquidity;
  // ln(e^w - 1); for large w via w + ln(1 - e^-w) to avoid overflow.
  if (w > 36.0) return cf.liquidity * (w + std::log1p(-std::exp(-w)));
  return cf.liquidity * std::log(std::expm1(w));
}

Allotment allot_securities(const CostFunction& cf, MarketState state, double x) {
  if (x < 0.0)
    throw std::domain_error("market: agents are not allowed to sell securities");
  if (x == 0.0) return {0.0, state};
  const double q = state.outstanding;
  const double r = c0_inverse(cf, x + c0(cf, q)) - q;
  return {r, MarketState{q + r}};
}

double marginal_securities_per_unit(const CostFunction& cf, double q) {
  cf.validate();
  return 1.0 + std::exp(-q / cf.liquidity);
}

bool epps_liquidity_holds(double marginal_per_unit) { return marginal_per_unit > 1.0; }

bool check_epps_liquidity(const CostFunction& cf, double q_max) {
  if (q_max < 0.0) throw std::invalid_argument("market: q_max must be nonnegative");
  return epps_liquidity_holds(marginal_securities_per_unit(cf, q_max));
}

}  // namespace reppm
