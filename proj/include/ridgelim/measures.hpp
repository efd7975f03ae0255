#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ridgelim {

struct Atom {
  double value;   // support point, >= 0
  double weight;  // probability mass, > 0
};

// A probability measure on [0, inf) representing the limiting spectrum of a
// Gram matrix. Two representations:
//   Atoms            — finite mixture of point masses,
//   SzegoPushforward — pushforward of the uniform measure on [0, 2*pi) under
//                      the squared modulus of a banded filter symbol
//                      f(t) = sum_k c_k e^{ikt}, evaluated by the periodic
//                      trapezoid rule on a uniform grid.
// Instances are immutable after construction; all evaluations are pure and
// safe for concurrent use.
class SpectralMeasure {
 public:
  enum class Kind { Atoms, SzegoPushforward };

  static constexpr int kDefaultQuadraturePoints = 4096;

  // Atoms measure. Requires positive weights summing to 1 within 1e-12 and
  // values >= 0 (entries within 1e-10 below zero are clamped). Atoms closer
  // than 1e-12 are merged.
  static SpectralMeasure atoms(std::vector<Atom> atoms);

  static SpectralMeasure point_mass(double value) {
    return atoms({{value, 1.0}});
  }

  // delta_1, the spectrum of an identity Gram matrix.
  static SpectralMeasure identity() { return point_mass(1.0); }

  // Pushforward measure for filter coefficients (c_0 ... c_q). Requires at
  // least one nonzero coefficient and an even quadrature grid of >= 64 points.
  static SpectralMeasure szego(std::vector<double> filter_coeffs,
                               int quadrature_points = kDefaultQuadraturePoints);

  // Empirical spectral measure: equal weight on each eigenvalue, duplicates
  // merged. Entries below -1e-10 are rejected, small negatives clamped to 0.
  static SpectralMeasure from_eigenvalues(std::span<const double> eigenvalues);

  // m(z) = integral of 1/(z + x) d mu(x), for z > 0.
  double stieltjes(double z) const;

  // m'(z) = -integral of 1/(z + x)^2 d mu(x); strictly negative.
  double stieltjes_derivative(double z) const;

  // integral of x/(z + x) d mu(x) = 1 - z*m(z), evaluated without the
  // cancellation of the subtracted form (needed at very large z).
  double stieltjes_complement(double z) const;

  // integral of (x/(z + x))^2 d mu(x) = 1 - 2*z*m(z) - z^2*m'(z), again in
  // cancellation-free form.
  double stieltjes_complement_sq(double z) const;

  Kind kind() const noexcept { return kind_; }
  const std::vector<Atom>& atom_list() const noexcept { return atoms_; }
  const std::vector<double>& filter_coeffs() const noexcept { return coeffs_; }
  int quadrature_points() const noexcept { return quadrature_points_; }

  // True when the measure is a single point mass at `value` (within tol).
  bool is_point_mass_at(double value, double tol = 1e-12) const;

  // Canonical spec string; parse_measure(spec_string()) reproduces the
  // measure exactly.
  std::string spec_string() const;

 private:
  SpectralMeasure() = default;

  Kind kind_ = Kind::Atoms;
  std::vector<Atom> atoms_;
  std::vector<double> coeffs_;
  int quadrature_points_ = 0;
  std::vector<double> symbol_sq_;  // |f|^2 sampled on the quadrature grid
};

// Measure-spec grammar:
//   "identity"              -> delta_1
//   "atoms:w1:v1,w2:v2,..." -> discrete measure (weights renormalized when
//                              they sum to 1 within 1e-6, rejected otherwise)
//   "szego:c0,c1,...[@N]"   -> Szego pushforward, optional quadrature size
//   "file:PATH"             -> one eigenvalue per line, equal weights
SpectralMeasure parse_measure(std::string_view text);

// Companion transform tilde m_B(x) = gamma * x * (1 - x * m_B(x)) and its
// derivative in x. Both require gamma > 0, kappa > 0.
double mtilde_b(const SpectralMeasure& mu_b, double gamma, double kappa);
double mtilde_b_derivative(const SpectralMeasure& mu_b, double gamma,
                           double kappa);

}  // namespace ridgelim
