#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "ridgelim/errors.hpp"
#include "ridgelim/measures.hpp"
#include "ridgelim/rng.hpp"
#include "ridgelim/simulator.hpp"

using namespace ridgelim;

namespace {

double fd_stieltjes(const SpectralMeasure& m, double z, double h) {
  return (m.stieltjes(z + h) - m.stieltjes(z - h)) / (2.0 * h);
}

SpectralMeasure random_atoms(rng::Stream& s) {
  const int k = 1 + static_cast<int>(s.uniform01() * 4);
  std::vector<Atom> atoms;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    const double w = 0.1 + s.uniform01();
    atoms.push_back({5.0 * s.uniform01(), w});
    total += w;
  }
  for (Atom& a : atoms) a.weight /= total;
  return SpectralMeasure::atoms(std::move(atoms));
}

SpectralMeasure random_szego(rng::Stream& s) {
  std::vector<double> coeffs{1.0};
  const int extra = static_cast<int>(s.uniform01() * 3);
  for (int i = 0; i < extra; ++i) coeffs.push_back(2.0 * s.uniform01() - 1.0);
  return SpectralMeasure::szego(std::move(coeffs), 1024);
}

}  // namespace

TEST_CASE("stieltjes of atom measures: exact finite sums") {
  const auto delta1 = SpectralMeasure::point_mass(1.0);
  CHECK(delta1.stieltjes(1.0) == doctest::Approx(0.5).epsilon(1e-15));

  const auto two = SpectralMeasure::atoms({{1.0, 0.5}, {2.0, 0.5}});
  CHECK(two.stieltjes(1.0) == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
}

TEST_CASE("stieltjes of the two-tap szego pushforward matches the closed form") {
  // |f|^2 = 2 + 2cos(t)  =>  m(z) = 1/sqrt((z+2)^2 - 4) = 1/sqrt(z^2 + 4z).
  const auto m = SpectralMeasure::szego({1.0, 1.0});
  CHECK(std::abs(m.stieltjes(1.0) - 0.4472135954999579) < 1e-9);
  for (double z : {0.5, 2.0, 7.0}) {
    CHECK(std::abs(m.stieltjes(z) - 1.0 / std::sqrt(z * z + 4.0 * z)) < 1e-9);
  }
}

TEST_CASE("stieltjes derivative: exact sums and finite differences") {
  const auto delta1 = SpectralMeasure::point_mass(1.0);
  CHECK(delta1.stieltjes_derivative(1.0) == doctest::Approx(-0.25).epsilon(1e-15));

  const auto two = SpectralMeasure::atoms({{1.0, 0.5}, {2.0, 0.5}});
  CHECK(two.stieltjes_derivative(1.0) ==
        doctest::Approx(-(0.5 / 4.0 + 0.5 / 9.0)).epsilon(1e-15));

  const auto szego = SpectralMeasure::szego({1.0, 1.0});
  const double fd = fd_stieltjes(szego, 1.0, 1e-6);
  CHECK(std::abs(szego.stieltjes_derivative(1.0) - fd) < 1e-6);
}

TEST_CASE("derivative matches central differences on randomized measures") {
  rng::Stream s(20240811);
  for (int rep = 0; rep < 30; ++rep) {
    const auto m = (rep % 2 == 0) ? random_atoms(s) : random_szego(s);
    for (double z : {0.1, 1.0, 10.0}) {
      const double d = m.stieltjes_derivative(z);
      CHECK(d < 0.0);
      const double fd = fd_stieltjes(m, z, 1e-6 * std::max(1.0, z));
      CHECK(std::abs(d - fd) <= 1e-6 * std::abs(d));
    }
  }
}

TEST_CASE("stieltjes positivity, monotonicity, and tail normalization") {
  rng::Stream s(77001);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = (rep % 2 == 0) ? random_atoms(s) : random_szego(s);
    double prev = std::numeric_limits<double>::infinity();
    for (double z : {0.05, 0.3, 1.0, 4.0, 25.0, 300.0}) {
      const double v = m.stieltjes(z);
      CHECK(v > 0.0);
      CHECK(v < prev);
      prev = v;
    }
    const double z = 1e8;
    CHECK(std::abs(z * m.stieltjes(z) - 1.0) < 1e-6);
  }
}

TEST_CASE("single-coefficient szego equals the matching point mass") {
  const double c = 1.3;
  const auto szego = SpectralMeasure::szego({c});
  const auto atom = SpectralMeasure::point_mass(c * c);
  CHECK(szego.is_point_mass_at(c * c, 1e-12));
  for (double z : {0.1, 1.0, 10.0}) {
    CHECK(std::abs(szego.stieltjes(z) - atom.stieltjes(z)) < 1e-12);
  }
}

TEST_CASE("doubling the quadrature grid leaves szego values unchanged") {
  for (const auto& coeffs :
       {std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 0.5, 0.25}}) {
    const auto coarse = SpectralMeasure::szego(coeffs, 4096);
    const auto fine = SpectralMeasure::szego(coeffs, 8192);
    for (double z : {0.1, 1.0, 10.0}) {
      CHECK(std::abs(coarse.stieltjes(z) - fine.stieltjes(z)) < 1e-10);
      CHECK(std::abs(coarse.stieltjes_derivative(z) - fine.stieltjes_derivative(z)) <
            1e-10);
    }
  }
}

TEST_CASE("companion transform examples") {
  const auto delta1 = SpectralMeasure::point_mass(1.0);
  CHECK(mtilde_b(delta1, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mtilde_b(delta1, 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));

  const auto two = SpectralMeasure::atoms({{1.0, 0.5}, {2.0, 0.5}});
  CHECK(mtilde_b(two, 1.0, 1.0) == doctest::Approx(1.0 - 5.0 / 12.0).epsilon(1e-15));

  CHECK(mtilde_b_derivative(delta1, 1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(mtilde_b_derivative(delta1, 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));

  // Central difference oracle for the derivative.
  const double h = 1e-6;
  const double fd = (mtilde_b(two, 1.0, 2.0 + h) - mtilde_b(two, 1.0, 2.0 - h)) / (2 * h);
  const double an = mtilde_b_derivative(two, 1.0, 2.0);
  CHECK(std::abs(an - fd) <= 1e-6 * std::abs(an));
}

TEST_CASE("complement integrals match their subtracted forms and stay stable") {
  rng::Stream s(8080);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = (rep % 2 == 0) ? random_atoms(s) : random_szego(s);
    for (double z : {0.3, 1.0, 6.0}) {
      const double c = m.stieltjes_complement(z);
      CHECK(std::abs(c - (1.0 - z * m.stieltjes(z))) < 1e-12);
      const double c2 = m.stieltjes_complement_sq(z);
      CHECK(std::abs(c2 - (1.0 - 2.0 * z * m.stieltjes(z) -
                           z * z * m.stieltjes_derivative(z))) < 1e-12);
      CHECK(c2 >= 0.0);
    }
    // The subtracted form loses all digits near z ~ 1e17; the integral form
    // keeps the sign and the leading order E[x]/z.
    const double huge = 1e17;
    CHECK(m.stieltjes_complement(huge) >= 0.0);
    CHECK(m.stieltjes_complement_sq(huge) >= 0.0);
  }
}

TEST_CASE("companion transform identity against the expanded polynomial") {
  // gamma*k*(k*m_B-1)*(1-gamma+gamma*k*m_B) == -mt(k) + mt(k)^2/k
  rng::Stream s(90125);
  for (int rep = 0; rep < 50; ++rep) {
    const auto m = (rep % 2 == 0) ? random_atoms(s) : random_szego(s);
    const double gamma = 0.1 + 3.9 * s.uniform01();
    const double kappa = 0.05 + 8.0 * s.uniform01();
    const double mb = m.stieltjes(kappa);
    const double mt = mtilde_b(m, gamma, kappa);
    const double lhs = gamma * kappa * (kappa * mb - 1.0) *
                       (1.0 - gamma + gamma * kappa * mb);
    const double rhs = -mt + mt * mt / kappa;
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("empirical measure construction merges duplicates") {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const auto m1 = SpectralMeasure::from_eigenvalues(ones);
  REQUIRE(m1.atom_list().size() == 1);
  CHECK(m1.atom_list()[0].value == doctest::Approx(1.0));
  CHECK(m1.atom_list()[0].weight == doctest::Approx(1.0));
  CHECK(m1.is_point_mass_at(1.0));

  const std::vector<double> two{1.0, 2.0};
  const auto m2 = SpectralMeasure::from_eigenvalues(two);
  REQUIRE(m2.atom_list().size() == 2);
  CHECK(m2.atom_list()[0].weight == doctest::Approx(0.5));
  CHECK(m2.atom_list()[1].value == doctest::Approx(2.0));
}

TEST_CASE("empirical spectrum of the banded toeplitz design approaches its limit") {
  // Dense symmetric eigensolve as the oracle; coefficients (1, 0.5) give the
  // symbol 1.25 + cos(t) whose transform is 1/sqrt((z+1.25)^2 - 1).
  const int n = 2000;
  const Eigen::MatrixXd a = build_a(ToeplitzAR{{1.0, 0.5}}, n);
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  REQUIRE(solver.info() == Eigen::Success);
  std::vector<double> eigs(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  for (double& v : eigs) v = std::max(v, 0.0);
  const auto empirical = SpectralMeasure::from_eigenvalues(eigs);
  const auto limit = SpectralMeasure::szego({1.0, 0.5});
  for (double z : {0.5, 1.0, 2.0}) {
    CHECK(std::abs(empirical.stieltjes(z) - limit.stieltjes(z)) < 1e-2);
    CHECK(std::abs(limit.stieltjes(z) - 1.0 / std::sqrt((z + 1.25) * (z + 1.25) - 1.0)) <
          1e-12);
  }
}

TEST_CASE("measure spec grammar") {
  const auto delta1 = parse_measure("identity");
  CHECK(delta1.is_point_mass_at(1.0));

  const auto two = parse_measure("atoms:0.5:1,0.5:2");
  REQUIRE(two.atom_list().size() == 2);
  CHECK(two.stieltjes(1.0) == doctest::Approx(5.0 / 12.0));

  // Near-1 weights are renormalized.
  const auto thirds = parse_measure("atoms:0.333333:1,0.333333:2,0.333334:3");
  REQUIRE(thirds.atom_list().size() == 3);
  double total = 0.0;
  for (const auto& a : thirds.atom_list()) total += a.weight;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

  const auto szego = parse_measure("szego:1,0.5@8192");
  CHECK(szego.quadrature_points() == 8192);
  CHECK(parse_measure("szego:1,1").quadrature_points() ==
        SpectralMeasure::kDefaultQuadraturePoints);

  const char* path = "measure_spec_test_eigs.txt";
  {
    std::ofstream out(path);
    out << "1.0\n2.0\n\n2.0\n";
  }
  const auto from_file = parse_measure(std::string("file:") + path);
  REQUIRE(from_file.atom_list().size() == 2);
  CHECK(from_file.atom_list()[1].weight == doctest::Approx(2.0 / 3.0));
  std::remove(path);
}

TEST_CASE("round trip: canonical spec strings re-parse to equal measures") {
  rng::Stream s(424242);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = (rep % 2 == 0) ? random_atoms(s) : random_szego(s);
    const auto back = parse_measure(m.spec_string());
    CHECK(back.kind() == m.kind());
    for (double z : {0.07, 0.9, 3.0, 42.0}) {
      CHECK(back.stieltjes(z) == m.stieltjes(z));
    }
  }
}

TEST_CASE("measure error paths") {
  CHECK_THROWS_AS(SpectralMeasure::point_mass(1.0).stieltjes(0.0),
                  NonPositiveArgumentError);
  CHECK_THROWS_AS(SpectralMeasure::point_mass(1.0).stieltjes_derivative(-1.0),
                  NonPositiveArgumentError);
  CHECK_THROWS_AS(SpectralMeasure::atoms({}), InvalidMeasureError);
  CHECK_THROWS_AS(SpectralMeasure::atoms({{1.0, 0.7}}), InvalidMeasureError);
  CHECK_THROWS_AS(SpectralMeasure::atoms({{-1.0, 1.0}}), InvalidMeasureError);
  CHECK_THROWS_AS(SpectralMeasure::atoms({{1.0, -0.5}, {2.0, 1.5}}), InvalidMeasureError);
  CHECK_THROWS_AS(SpectralMeasure::szego({0.0, 0.0}), InvalidMeasureError);
  CHECK_THROWS_AS(SpectralMeasure::szego({1.0}, 32), InvalidMeasureError);
  CHECK_THROWS_AS(SpectralMeasure::szego({1.0}, 65), InvalidMeasureError);
  CHECK_THROWS_AS(SpectralMeasure::from_eigenvalues(std::vector<double>{}),
                  EmptySpectrumError);
  CHECK_THROWS_AS(parse_measure("atoms:0.5:1,0.4:2"), SpecParseError);
  CHECK_THROWS_AS(parse_measure("atoms:abc:1"), SpecParseError);
  CHECK_THROWS_AS(parse_measure("file:/definitely/not/a/file"), SpecParseError);
  CHECK_THROWS_AS(parse_measure("nonsense"), SpecParseError);
  CHECK_THROWS_AS(mtilde_b(SpectralMeasure::identity(), -1.0, 1.0),
                  NonPositiveArgumentError);
  CHECK_THROWS_AS(mtilde_b(SpectralMeasure::identity(), 1.0, 0.0),
                  NonPositiveArgumentError);

  // Slightly negative eigenvalues clamp; clearly negative ones are rejected.
  const std::vector<double> tiny{-5e-11, 1.0};
  CHECK(SpectralMeasure::from_eigenvalues(tiny).atom_list()[0].value == 0.0);
  const std::vector<double> bad{-1e-3, 1.0};
  CHECK_THROWS_AS(SpectralMeasure::from_eigenvalues(bad), InvalidMeasureError);
}
