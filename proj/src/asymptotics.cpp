#include "ridgelim/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "ridgelim/errors.hpp"
#include "ridgelim/grid.hpp"

namespace ridgelim {

namespace {

constexpr int kMaxRefineIterations = 200;
constexpr int kMaxBracketExpansions = 60;
constexpr double kResidualTarget = 1e-10;        // expanded form
constexpr double kCompactResidualTarget = 1e-9;  // compact form cross-check

// All measure evaluations needed by the fixed point at a given kappa.
// mt is the companion transform gamma*kappa*(1 - kappa*m_B(kappa)); the
// temporal transform m_A is evaluated at lambda/mt.
struct KappaTerms {
  double mb, mb_d;    // m_B(kappa), m_B'(kappa)
  double comp;        // 1 - kappa*m_B(kappa), cancellation-free
  double mt, mt_d;    // mt(kappa), mt'(kappa)
  double arg_a;       // lambda / mt(kappa)
  double ma, ma_d;    // m_A(arg_a), m_A'(arg_a)
};

KappaTerms eval_terms(const ProblemSpec& s, double kappa) {
  KappaTerms t;
  t.mb = s.mu_b.stieltjes(kappa);
  t.mb_d = s.mu_b.stieltjes_derivative(kappa);
  t.comp = s.mu_b.stieltjes_complement(kappa);
  t.mt = s.gamma * kappa * t.comp;
  t.mt_d = s.gamma * s.mu_b.stieltjes_complement_sq(kappa);
  t.arg_a = s.lambda / t.mt;
  t.ma = s.mu_a.stieltjes(t.arg_a);
  t.ma_d = s.mu_a.stieltjes_derivative(t.arg_a);
  return t;
}

// Compact form of the fixed point: lambda*m_A(lambda/mt) + mt^2/kappa - mt.
double compact_residual(const ProblemSpec& s, const KappaTerms& t, double kappa) {
  return s.lambda * t.ma + t.mt * t.mt / kappa - t.mt;
}

// Expanded form with the polynomial factorization written out; algebraically
// identical to the compact form, evaluated as a cross-check. The factor
// kappa*m_B - 1 is taken through the complement integral so the residual can
// be measured below rounding noise at large penalties.
double expanded_residual(const ProblemSpec& s, double kappa) {
  const double comp = s.mu_b.stieltjes_complement(kappa);  // 1 - kappa*m_B
  const double arg = s.lambda / (s.gamma * kappa * comp);
  return s.lambda * s.mu_a.stieltjes(arg) -
         s.gamma * kappa * comp * (1.0 - s.gamma + s.gamma * (1.0 - comp));
}

// d/dkappa of the compact form, used for Newton polish.
double compact_residual_derivative(const ProblemSpec& s, const KappaTerms& t,
                                   double kappa) {
  return -s.lambda * s.lambda * t.mt_d * t.ma_d / (t.mt * t.mt) +
         2.0 * t.mt * t.mt_d / kappa - t.mt * t.mt / (kappa * kappa) - t.mt_d;
}

// Expand [lo, hi] geometrically until fn changes sign; hi doubles first,
// then lo shrinks. Returns false when no sign change can be found.
bool bracket_root(const std::function<double(double)>& fn, double& lo, double& hi,
                  double& flo, double& fhi) {
  flo = fn(lo);
  fhi = fn(hi);
  for (int i = 0; i < kMaxBracketExpansions && std::signbit(flo) == std::signbit(fhi); ++i) {
    hi *= 2.0;
    fhi = fn(hi);
  }
  for (int i = 0; i < kMaxBracketExpansions && std::signbit(flo) == std::signbit(fhi); ++i) {
    lo *= 0.5;
    flo = fn(lo);
  }
  return std::signbit(flo) != std::signbit(fhi);
}

// Bisection to absolute width 1e-14 (or the local rounding floor), counting
// iterations into `iters`.
double bisect(const std::function<double(double)>& fn, double lo, double hi,
              double flo, int& iters) {
  while (iters < kMaxRefineIterations) {
    const double mid = 0.5 * (lo + hi);
    const double width_floor =
        std::max(1e-14, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(mid));
    if (hi - lo <= width_floor) break;
    const double fmid = fn(mid);
    ++iters;
    if (fmid == 0.0) return mid;
    if (std::signbit(fmid) == std::signbit(flo)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void require_identity(const SpectralMeasure& m, const char* side) {
  if (!m.is_point_mass_at(1.0, 1e-12)) {
    throw CaseMismatchError(std::string("closed-form case requires ") + side +
                            " to be the identity spectrum delta_1");
  }
}

}  // namespace

void validate(const ProblemSpec& spec) {
  if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma)) {
    throw NonPositiveArgumentError("gamma must be positive");
  }
  if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda)) {
    throw NonPositiveArgumentError("lambda must be positive");
  }
  if (spec.lambda < kMinLambda) {
    throw NonPositiveArgumentError("lambda must be positive and at least 1e-8; "
                                   "the ridgeless endpoint is not supported");
  }
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha)) {
    throw NonPositiveArgumentError("alpha must be positive");
  }
  if (spec.sigma_eps < 0.0 || !std::isfinite(spec.sigma_eps)) {
    throw NonPositiveArgumentError("sigma_eps must be nonnegative");
  }
}

FixedPointSolution solve_kappa(const ProblemSpec& spec) {
  validate(spec);
  const auto fn = [&spec](double k) {
    return compact_residual(spec, eval_terms(spec, k), k);
  };

  double lo = 1e-8;
  double hi = spec.lambda + 10.0;
  double flo, fhi;
  if (!bracket_root(fn, lo, hi, flo, fhi)) {
    throw NoBracketError(
        "no sign change found for the fixed-point equation on (0, " +
        format_double(hi) + "]; the measures or parameters are out of range");
  }

  int iters = 0;
  double kappa = bisect(fn, lo, hi, flo, iters);

  // Newton polish restores full precision after the fixed-width bisection.
  for (int i = 0; i < 3; ++i) {
    const KappaTerms t = eval_terms(spec, kappa);
    const double f = compact_residual(spec, t, kappa);
    const double fd = compact_residual_derivative(spec, t, kappa);
    ++iters;
    if (!(fd != 0.0) || !std::isfinite(fd)) break;
    const double next = kappa - f / fd;
    if (next > 0.0 && std::isfinite(next)) kappa = next;
  }

  const KappaTerms t = eval_terms(spec, kappa);
  const double res_expanded = std::abs(expanded_residual(spec, kappa));
  const double res_compact = std::abs(compact_residual(spec, t, kappa));
  if (res_expanded > kResidualTarget || res_compact > kCompactResidualTarget) {
    throw MaxIterationsError("fixed-point residual " + format_double(res_expanded) +
                             " did not reach target after " + std::to_string(iters) +
                             " iterations");
  }

  const double km = 1.0 - t.comp;
  if (!(km > 0.0 && km < 1.0) || !(t.mt > 0.0) || !(t.arg_a > 0.0)) {
    throw NoBracketError("root rejected: outside the admissible branch "
                         "(kappa*m_B in (0,1), mt > 0)");
  }

  FixedPointSolution sol;
  sol.kappa = kappa;
  sol.m_bar = km / spec.lambda;
  sol.kappa1 = -spec.lambda / t.mt;
  sol.residual = res_expanded;
  sol.iterations = iters;
  const auto [dk, dm] = lambda_derivatives(spec, kappa);
  sol.dkappa_dlambda = dk;
  sol.dm_dlambda = dm;
  return sol;
}

std::pair<double, double> lambda_derivatives(const ProblemSpec& spec, double kappa) {
  const KappaTerms t = eval_terms(spec, kappa);

  // Implicit differentiation of the compact form, normalized by mt^4 so every
  // term is O(1) across parameter scales:
  //   dkappa/dlambda = (kappa/mt)^2 (m_A + z m_A') / den,
  //   den = z^2 (kappa/mt)^2 mt' m_A' - (2 kappa/mt - (kappa/mt)^2) mt' + 1,
  // with z = lambda/mt the argument of m_A.
  const double ratio = kappa / t.mt;
  const double z = t.arg_a;
  const double p1 = z * z * ratio * ratio * t.mt_d * t.ma_d;
  const double p2 = (2.0 * ratio - ratio * ratio) * t.mt_d;
  const double den = p1 - p2 + 1.0;
  const double scale = std::abs(p1) + std::abs(p2) + 1.0;
  if (std::abs(den) < 1e-14 * scale) {
    throw DegenerateDenominatorError(
        "implicit-function denominator cancels at kappa = " + format_double(kappa) +
        "; parameters sit on a phase boundary, fall back to finite differences");
  }
  const double dkappa = ratio * ratio * (t.ma + z * t.ma_d) / den;
  const double dm = (t.mb + kappa * t.mb_d) * dkappa / spec.lambda -
                    kappa * t.mb / (spec.lambda * spec.lambda);
  return {dkappa, dm};
}

RiskBreakdown risk_from_solution(const ProblemSpec& spec, const FixedPointSolution& sol) {
  RiskBreakdown out;
  out.bias = std::max(0.0, -spec.alpha * spec.alpha * spec.lambda * spec.lambda *
                               sol.dm_dlambda);
  out.variance = std::max(0.0, spec.gamma * spec.sigma_eps * spec.sigma_eps *
                                   (sol.m_bar + spec.lambda * sol.dm_dlambda));
  out.risk = out.bias + out.variance;
  return out;
}

RiskBreakdown risk(const ProblemSpec& spec) {
  return risk_from_solution(spec, solve_kappa(spec));
}

double optimal_lambda(double gamma, double alpha, double sigma_eps) {
  if (!(gamma > 0.0)) throw NonPositiveArgumentError("gamma must be positive");
  if (!(alpha > 0.0)) throw NonPositiveArgumentError("alpha must be positive");
  if (sigma_eps < 0.0) throw NonPositiveArgumentError("sigma_eps must be nonnegative");
  return sigma_eps * sigma_eps * gamma / (alpha * alpha);
}

double case_m_bar(ClosedFormCase which, const ProblemSpec& spec) {
  validate(spec);
  switch (which) {
    case ClosedFormCase::MarchenkoPastur: {
      require_identity(spec.mu_a, "mu_a");
      require_identity(spec.mu_b, "mu_b");
      // Positive root of lambda*gamma*m^2 + (1+lambda-gamma)*m - 1 = 0 in the
      // cancellation-free form.
      const double b = 1.0 + spec.lambda - spec.gamma;
      return 2.0 / (b + std::sqrt(b * b + 4.0 * spec.lambda * spec.gamma));
    }
    case ClosedFormCase::IdentityTemporal: {
      require_identity(spec.mu_a, "mu_a");
      const auto fn = [&spec](double k) {
        return spec.gamma * k * k * spec.mu_b.stieltjes(k) +
               k * (1.0 - spec.gamma) - spec.lambda;
      };
      double lo = 1e-12, hi = spec.lambda + 10.0, flo, fhi;
      if (!bracket_root(fn, lo, hi, flo, fhi)) {
        throw NoBracketError("no bracket for the identity-temporal reduction");
      }
      int iters = 0;
      double kappa = bisect(fn, lo, hi, flo, iters);
      return kappa * spec.mu_b.stieltjes(kappa) / spec.lambda;
    }
    case ClosedFormCase::IdentitySpatial: {
      require_identity(spec.mu_b, "mu_b");
      const auto fn = [&spec](double m) {
        return spec.lambda * spec.gamma * spec.gamma * m * m +
               spec.gamma * (1.0 - spec.gamma) * m -
               spec.mu_a.stieltjes(1.0 / (spec.gamma * m));
      };
      double lo = 1e-12, hi = 1.0 / spec.lambda + 1.0, flo, fhi;
      if (!bracket_root(fn, lo, hi, flo, fhi)) {
        throw NoBracketError("no bracket for the identity-spatial reduction");
      }
      int iters = 0;
      return bisect(fn, lo, hi, flo, iters);
    }
  }
  throw ParseError("unknown closed-form case");
}

}  // namespace ridgelim
