#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ridgelim/measures.hpp"

namespace ridgelim {

// Entry law of the core noise matrix Z; all standardized to mean 0,
// variance 1, and drawn through a single uniform per entry so that arms with
// different laws but the same seed are comonotonically coupled.
enum class ZDist { Gaussian, Rademacher, Uniform };

// ---- Structured builders for the temporal mixer A and spatial mixer B ----

struct IdentityOp {};

// Lower-triangular banded Toeplitz: coefficient k sits on the k-th
// subdiagonal (truncated convolution, no wraparound).
struct ToeplitzAR {
  std::vector<double> coeffs;  // c_0 ... c_q, not all zero
};

// Pairwise mixing: row i is e_i for odd i (1-indexed) and
// omega*e_i + (1-omega)*e_{i-1} for even i. omega=1 is the identity,
// omega=0 repeats every odd-indexed row.
struct Redundancy {
  double omega;  // in [0, 1]
};

// Explicit diagonal; entries are the diagonal of the mixer itself (the Gram
// matrix then has the squared entries as eigenvalues). All entries >= 0.
struct ExplicitDiagonal {
  std::vector<double> values;
};

// Recipe form of ExplicitDiagonal: realize a target Gram spectrum given as
// atoms (weight, eigenvalue); expanded to any size with largest-remainder
// multiplicities and sqrt(eigenvalue) diagonal entries.
struct GramAtoms {
  std::vector<Atom> atoms;
};

using AKind = std::variant<IdentityOp, ToeplitzAR, Redundancy, ExplicitDiagonal, GramAtoms>;
using BKind = std::variant<IdentityOp, ExplicitDiagonal, GramAtoms>;

struct CovariateModel {
  AKind a = IdentityOp{};
  BKind b = IdentityOp{};
  ZDist z_dist = ZDist::Gaussian;
};

// Deterministic expansion of gram atoms into n diagonal entries.
std::vector<double> diagonal_from_gram_atoms(const std::vector<Atom>& atoms, int n);

// Dense materialization of the mixer (n x n).
Eigen::MatrixXd build_a(const AKind& kind, int n);

// In-place application of the mixers to Z (rows for A, columns for B)
// without materializing dense matrices.
void apply_a_inplace(const AKind& kind, Eigen::MatrixXd& z);
void apply_b_inplace(const BKind& kind, Eigen::MatrixXd& z);

// Eigenvalues of A^T A, ascending, clamped at zero. Structure-aware for
// identity / diagonal / pairwise kinds; dense symmetric eigensolve for the
// banded Toeplitz kind.
std::vector<double> empirical_spectrum(const AKind& kind, int n);
std::vector<double> empirical_spectrum(const BKind& kind, int n);

// One Monte Carlo trial of ridge regression on X = A Z B.
struct TrialResult {
  double empirical_risk = 0.0;      // |beta_hat - beta_star|^2
  double empirical_bias = 0.0;      // lambda^2 n^2 beta*^T (X^T X + lambda n I)^{-2} beta*
  double empirical_variance = 0.0;  // eps^T X (X^T X + lambda n I)^{-2} X^T eps
  double cross_term = 0.0;          // risk - bias - variance (diagnostic)
  double empirical_m = 0.0;         // (1/d) trace((X^T X / n + lambda I)^{-1})
  // Conditional means given X, i.e. the bias/variance trace functionals with
  // beta* and eps integrated out; their sum estimates the expected risk with
  // far less trial-to-trial noise than the realized quantities.
  double expected_bias = 0.0;       // alpha^2 lambda^2 n^2 / d * trace((X^T X + lambda n I)^{-2})
  double expected_variance = 0.0;   // sigma^2 trace(X (X^T X + lambda n I)^{-2} X^T)
  std::uint64_t seed = 0;
  int n = 0;
  int d = 0;
};

// The random draw behind one trial: X = A Z B with Z from the model's entry
// law, beta_star ~ N(0, alpha^2/d I), eps ~ N(0, sigma_eps^2 I), and
// y = X beta_star + eps. Streams are derived from (seed, stream tag), so the
// same seed reproduces the same draw regardless of caller.
struct TrialData {
  Eigen::MatrixXd x;
  Eigen::VectorXd beta_star;
  Eigen::VectorXd eps;
  Eigen::VectorXd y;
};

TrialData materialize_trial(const CovariateModel& model, int n, int d,
                            double alpha, double sigma_eps, std::uint64_t seed);

// Standardized draw of the core matrix alone (the Z stream of a trial seed).
Eigen::MatrixXd draw_z(ZDist dist, int n, int d, std::uint64_t seed);

// Which SPD system backs the ridge solve; Auto picks the smaller Gram side
// (primal d x d when d <= n, dual n x n otherwise).
enum class SolvePath { Auto, Primal, Dual };

TrialResult sample_trial(const CovariateModel& model, int n, int d,
                         double lambda, double alpha, double sigma_eps,
                         std::uint64_t seed, SolvePath path = SolvePath::Auto);

struct Stats {
  double mean = 0.0;
  double se = 0.0;
};

Stats mean_and_se(std::span<const double> values);

// One grid point of a sweep: a fully specified finite-size problem.
struct GridPointConfig {
  double axis_value = 0.0;
  CovariateModel model;
  int n = 0;
  int d = 0;
  double lambda = 0.0;
  double alpha = 1.0;
  double sigma_eps = 0.0;
};

struct BatchPoint {
  double axis_value = 0.0;
  Stats risk, bias, variance, m;
  int trials = 0;
  int n = 0;
  int d = 0;
};

// Trial t at grid index g uses the stream key derived from
// (base_seed, g, t); results are reduced in trial order, so output is
// bit-reproducible for a fixed base_seed regardless of worker count.
std::vector<TrialResult> run_trials(const GridPointConfig& config, int trials,
                                    std::uint64_t base_seed,
                                    std::uint64_t grid_index, int workers = 1);

std::vector<BatchPoint> run_batch(std::span<const GridPointConfig> grid,
                                  int trials, std::uint64_t base_seed,
                                  int workers = 1);

// A/B experiment across entry laws with common random numbers: the
// beta*/eps streams (and the uniforms behind Z) are shared across arms.
struct UniversalityArm {
  ZDist dist = ZDist::Gaussian;
  Stats risk;
  double gap_vs_gaussian = 0.0;  // mean of paired risk differences
  double gap_se = 0.0;           // SE of the paired differences
  double pooled_se = 0.0;        // sqrt(se_arm^2 + se_gaussian^2)
};

std::vector<UniversalityArm> universality_compare(
    const CovariateModel& model, int n, double gamma, double lambda,
    double alpha, double sigma_eps, int trials, std::uint64_t base_seed,
    int workers = 1);

// Model-spec grammar (A side):
//   "identity"             "ar:c0,c1,..."        "redundancy:OMEGA"
//   "diag:v1,v2,..."       "gram:w1:v1,w2:v2,..."
// The B side accepts identity / diag / gram.
AKind parse_a_model(std::string_view text);
BKind parse_b_model(std::string_view text);
std::string model_spec_string(const AKind& kind);
std::string model_spec_string(const BKind& kind);

const char* z_dist_name(ZDist dist);
ZDist parse_z_dist(std::string_view text);

// Worker count from the RIDGELIM_THREADS environment variable (default 1).
int worker_count_from_env();

}  // namespace ridgelim
