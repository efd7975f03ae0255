#pragma once

#include <utility>

#include "ridgelim/measures.hpp"

namespace ridgelim {

// Parameters of one asymptotic ridge problem: sample-to-dimension ratio
// gamma = lim d/n, ridge penalty lambda, signal scale alpha (prior
// N(0, alpha^2/d I)), noise level sigma_eps, and the limiting spectra of the
// temporal (mu_a) and spatial (mu_b) Gram matrices.
struct ProblemSpec {
  double gamma = 1.0;
  double lambda = 1.0;
  double alpha = 1.0;
  double sigma_eps = 0.0;
  SpectralMeasure mu_a = SpectralMeasure::identity();
  SpectralMeasure mu_b = SpectralMeasure::identity();
};

// Throws NonPositiveArgumentError on out-of-domain parameters. The ridgeless
// endpoint is excluded: lambda below 1e-8 is rejected.
void validate(const ProblemSpec& spec);

constexpr double kMinLambda = 1e-8;

// Solution of the scalar fixed-point equation
//   lambda * m_A(lambda / mt(kappa)) + mt(kappa)^2 / kappa - mt(kappa) = 0,
// with mt(x) = gamma * x * (1 - x * m_B(x)). The resolvent trace functional
//   m_bar = lim (1/d) trace((X^T X / n + lambda I)^{-1})
// is recovered as kappa * m_B(kappa) / lambda.
struct FixedPointSolution {
  double kappa = 0.0;
  double m_bar = 0.0;
  double dkappa_dlambda = 0.0;
  double dm_dlambda = 0.0;    // always negative
  double kappa1 = 0.0;        // diagnostic: -lambda / mt(kappa)
  double residual = 0.0;      // |expanded-form equation| at the solution
  int iterations = 0;
};

// Bracketed bisection on (0, inf) with geometric bracket expansion, followed
// by Newton polish with analytic derivatives. Throws NoBracketError when no
// sign change can be found and MaxIterationsError when the residual target
// is not met.
FixedPointSolution solve_kappa(const ProblemSpec& spec);

// (dkappa/dlambda, dm_bar/dlambda) by implicit differentiation of the fixed
// point at a solved kappa. Throws DegenerateDenominatorError when the
// implicit-function denominator cancels to rounding level (a phase-boundary
// configuration); callers may fall back to finite differences.
std::pair<double, double> lambda_derivatives(const ProblemSpec& spec,
                                             double kappa);

struct RiskBreakdown {
  double bias = 0.0;
  double variance = 0.0;
  double risk = 0.0;  // bias + variance
};

// Asymptotic estimation error:
//   bias     = -alpha^2 lambda^2 dm_bar/dlambda
//   variance =  gamma sigma^2 (m_bar + lambda dm_bar/dlambda)
RiskBreakdown risk_from_solution(const ProblemSpec& spec,
                                 const FixedPointSolution& sol);
RiskBreakdown risk(const ProblemSpec& spec);

// Optimal ridge penalty sigma_eps^2 * gamma / alpha^2; independent of the
// dependency structure.
double optimal_lambda(double gamma, double alpha, double sigma_eps);

// Closed-form reductions of the fixed point used as independent oracles.
//   MarchenkoPastur  — mu_a = mu_b = delta_1; quadratic
//                      lambda*gamma*m^2 + (1+lambda-gamma)*m - 1 = 0.
//   IdentityTemporal — mu_a = delta_1, general mu_b; scalar equation
//                      gamma*k^2*m_B(k) + k*(1-gamma) - lambda = 0.
//   IdentitySpatial  — mu_b = delta_1, general mu_a; scalar equation
//                      lambda*gamma^2*m^2 + gamma*(1-gamma)*m
//                        - m_A(1/(gamma*m)) = 0.
enum class ClosedFormCase { MarchenkoPastur, IdentityTemporal, IdentitySpatial };

// Returns m_bar from the reduced scalar equation. Throws CaseMismatchError
// when the spec's measures do not match the case's identity assumptions.
double case_m_bar(ClosedFormCase which, const ProblemSpec& spec);

}  // namespace ridgelim
