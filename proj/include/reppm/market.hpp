#pragma once

#include <string>

namespace reppm {

/// Cost-function family for the securities market. Only the logarithmic
/// market scoring rule is instantiated; the surrounding contract (inverse,
/// marginal rate, liquidity check) is what the rest of the code relies on.
enum class CostFamily { Lmsr };

std::string to_string(CostFamily family);

struct CostFunction {
  CostFamily family = CostFamily::Lmsr;
  double liquidity = 1.0;  // b, > 0

  void validate() const;
};

/// Outstanding count of securities tied to the project-not-funded outcome.
/// Monotone nondecreasing over a run; securities are never sold back.
struct MarketState {
  double outstanding = 0.0;
};

/// LMSR potential b*ln(1 + e^(q/b)), evaluated in log-sum-exp form so large
/// q/b does not overflow.
double c0(const CostFunction& cf, double q);

/// Unique q with c0(q) = y, for y > 0; may be negative. Throws
/// std::domain_error outside the range of c0.
double c0_inverse(const CostFunction& cf, double y);

struct Allotment {
  double securities = 0.0;
  MarketState state;
};

/// Securities bought with x >= 0 currency at the given state. Negative x is
/// rejected: agents are not allowed to sell securities.
Allotment allot_securities(const CostFunction& cf, MarketState state, double x);

/// d(securities)/d(currency) at outstanding q, i.e. 1 / c0'(q). For LMSR
/// this is 1 + e^(-q/b), strictly above 1.
double marginal_securities_per_unit(const CostFunction& cf, double q);

/// Unfunded utility grows with the contribution only while a unit of
/// currency buys more than one security.
bool epps_liquidity_holds(double marginal_per_unit);
bool check_epps_liquidity(const CostFunction& cf, double q_max);

}  // namespace reppm
