#include "ridgelim/simulator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "ridgelim/errors.hpp"
#include "ridgelim/grid.hpp"
#include "ridgelim/rng.hpp"

namespace ridgelim {

namespace {

// Stream tags inside one trial; universality arms share beta/eps streams
// across entry laws because the tags do not depend on the law.
constexpr std::uint64_t kTagZ = 1;
constexpr std::uint64_t kTagBeta = 2;
constexpr std::uint64_t kTagEps = 3;

void check_toeplitz(const ToeplitzAR& t) {
  if (t.coeffs.empty() ||
      std::all_of(t.coeffs.begin(), t.coeffs.end(), [](double c) { return c == 0.0; })) {
    throw InvalidCoefficientsError("toeplitz coefficients need at least one nonzero entry");
  }
}

void check_redundancy(const Redundancy& r) {
  if (!(r.omega >= 0.0 && r.omega <= 1.0)) {
    throw InvalidCoefficientsError("redundancy omega must lie in [0, 1]");
  }
}

void check_diagonal(const ExplicitDiagonal& d, int n) {
  if (static_cast<int>(d.values.size()) != n) {
    throw InvalidCoefficientsError("explicit diagonal has " +
                                   std::to_string(d.values.size()) +
                                   " entries but the requested size is " +
                                   std::to_string(n));
  }
  for (double v : d.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidCoefficientsError("diagonal entries must be nonnegative");
    }
  }
}

double draw_entry(ZDist dist, rng::Stream& s) {
  switch (dist) {
    case ZDist::Gaussian: return s.normal();
    case ZDist::Rademacher: return s.rademacher();
    case ZDist::Uniform: return s.uniform_sym();
  }
  return 0.0;
}

void fill_standardized(Eigen::MatrixXd& z, ZDist dist, rng::Stream& s) {
  double* p = z.data();
  const Eigen::Index count = z.size();
  for (Eigen::Index i = 0; i < count; ++i) p[i] = draw_entry(dist, s);
}

// Run fn(0..count-1) on `workers` threads; any slot order, deterministic
// output because each index owns its slot. First exception wins.
void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mtx;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(mtx);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

Eigen::LLT<Eigen::MatrixXd> factor_spd(Eigen::MatrixXd& gram, double ridge) {
  gram.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    // One retry with a relative jitter before surfacing the failure.
    const double guard = 1e-10 * (std::abs(gram.diagonal().mean()) + ridge);
    gram.diagonal().array() += guard;
    llt.compute(gram);
    if (llt.info() != Eigen::Success) {
      throw SolveFailureError("SPD factorization failed; lambda*n is too small "
                              "for the conditioning of this design");
    }
  }
  return llt;
}

// trace(M^{-1}) = |L^{-1}|_F^2 and trace(M^{-2}) = |L^{-1} L^{-T}|_F^2 for
// M = L L^T.
struct InverseTraces {
  double trace_inv = 0.0;
  double trace_inv_sq = 0.0;
};

InverseTraces inverse_traces(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::Index m = llt.matrixLLT().rows();
  Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(m, m);
  llt.matrixL().solveInPlace(linv);
  InverseTraces t;
  t.trace_inv = linv.squaredNorm();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(linv);
  const Eigen::MatrixXd full = gram.selfadjointView<Eigen::Lower>();
  t.trace_inv_sq = full.squaredNorm();
  return t;
}

double parse_number(std::string_view token, const char* what) {
  try {
    std::size_t used = 0;
    const std::string s(token);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw SpecParseError(std::string("could not parse ") + what + " from '" +
                         std::string(token) + "'");
  }
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto pos = text.find(sep);
    if (pos == std::string_view::npos) {
      parts.push_back(text);
      return parts;
    }
    parts.push_back(text.substr(0, pos));
    text.remove_prefix(pos + 1);
  }
}

std::vector<double> parse_value_list(std::string_view text, const char* what) {
  if (text.empty()) throw SpecParseError(std::string("empty ") + what + " list");
  std::vector<double> values;
  for (auto part : split(text, ',')) values.push_back(parse_number(part, what));
  return values;
}

std::vector<Atom> parse_atom_list(std::string_view text) {
  if (text.empty()) throw SpecParseError("empty gram atom list");
  std::vector<Atom> atoms;
  for (auto part : split(text, ',')) {
    const auto sep = part.find(':');
    if (sep == std::string_view::npos) {
      throw SpecParseError("gram entries must look like weight:value, got '" +
                           std::string(part) + "'");
    }
    atoms.push_back({parse_number(part.substr(sep + 1), "gram eigenvalue"),
                     parse_number(part.substr(0, sep), "gram weight")});
  }
  return atoms;
}

std::string atom_list_string(const std::vector<Atom>& atoms) {
  std::string out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) out += ',';
    out += format_double(atoms[i].weight);
    out += ':';
    out += format_double(atoms[i].value);
  }
  return out;
}

std::string value_list_string(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

std::vector<double> diagonal_from_gram_atoms(const std::vector<Atom>& atoms, int n) {
  if (atoms.empty()) throw InvalidCoefficientsError("gram atom list is empty");
  if (n < 1) throw InvalidCoefficientsError("size must be positive");
  double total = 0.0;
  for (const Atom& a : atoms) {
    if (!(a.weight > 0.0) || !(a.value >= 0.0)) {
      throw InvalidCoefficientsError("gram atoms need positive weights and "
                                     "nonnegative eigenvalues");
    }
    total += a.weight;
  }
  std::vector<Atom> sorted = atoms;
  std::sort(sorted.begin(), sorted.end(),
            [](const Atom& a, const Atom& b) { return a.value < b.value; });

  // Largest-remainder apportionment of n slots to the atoms.
  std::vector<int> counts(sorted.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double share = sorted[i].weight / total * n;
    counts[i] = static_cast<int>(std::floor(share));
    assigned += counts[i];
    remainders.emplace_back(share - counts[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < n - assigned; ++k) counts[remainders[static_cast<std::size_t>(k)].second] += 1;

  std::vector<double> diag;
  diag.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double entry = std::sqrt(sorted[i].value);
    diag.insert(diag.end(), static_cast<std::size_t>(counts[i]), entry);
  }
  return diag;
}

Eigen::MatrixXd build_a(const AKind& kind, int n) {
  if (n < 1) throw InvalidCoefficientsError("matrix size must be positive");
  return std::visit(
      [n](const auto& k) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, IdentityOp>) {
          return Eigen::MatrixXd::Identity(n, n);
        } else if constexpr (std::is_same_v<T, ToeplitzAR>) {
          check_toeplitz(k);
          Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
          const int q = static_cast<int>(k.coeffs.size()) - 1;
          for (int i = 0; i < n; ++i) {
            for (int band = 0; band <= std::min(q, i); ++band) {
              a(i, i - band) = k.coeffs[static_cast<std::size_t>(band)];
            }
          }
          return a;
        } else if constexpr (std::is_same_v<T, Redundancy>) {
          check_redundancy(k);
          Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
          for (int i = 0; i < n; ++i) {
            if (i % 2 == 1) {
              a(i, i) = k.omega;
              a(i, i - 1) = 1.0 - k.omega;
            } else {
              a(i, i) = 1.0;
            }
          }
          return a;
        } else if constexpr (std::is_same_v<T, ExplicitDiagonal>) {
          check_diagonal(k, n);
          return Eigen::Map<const Eigen::VectorXd>(k.values.data(), n).asDiagonal();
        } else {
          static_assert(std::is_same_v<T, GramAtoms>);
          const auto values = diagonal_from_gram_atoms(k.atoms, n);
          return Eigen::Map<const Eigen::VectorXd>(values.data(), n).asDiagonal();
        }
      },
      kind);
}

void apply_a_inplace(const AKind& kind, Eigen::MatrixXd& z) {
  const int n = static_cast<int>(z.rows());
  std::visit(
      [&z, n](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, IdentityOp>) {
          // nothing to do
        } else if constexpr (std::is_same_v<T, ToeplitzAR>) {
          check_toeplitz(k);
          const int q = static_cast<int>(k.coeffs.size()) - 1;
          // Truncated causal convolution over rows; descending order keeps
          // the rows being read untouched.
          for (int i = n - 1; i >= 0; --i) {
            z.row(i) *= k.coeffs[0];
            for (int band = 1; band <= std::min(q, i); ++band) {
              z.row(i) += k.coeffs[static_cast<std::size_t>(band)] * z.row(i - band);
            }
          }
        } else if constexpr (std::is_same_v<T, Redundancy>) {
          check_redundancy(k);
          for (int i = 1; i < n; i += 2) {
            z.row(i) = k.omega * z.row(i) + (1.0 - k.omega) * z.row(i - 1);
          }
        } else if constexpr (std::is_same_v<T, ExplicitDiagonal>) {
          check_diagonal(k, n);
          for (int i = 0; i < n; ++i) z.row(i) *= k.values[static_cast<std::size_t>(i)];
        } else {
          static_assert(std::is_same_v<T, GramAtoms>);
          const auto values = diagonal_from_gram_atoms(k.atoms, n);
          for (int i = 0; i < n; ++i) z.row(i) *= values[static_cast<std::size_t>(i)];
        }
      },
      kind);
}

void apply_b_inplace(const BKind& kind, Eigen::MatrixXd& z) {
  const int d = static_cast<int>(z.cols());
  std::visit(
      [&z, d](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, IdentityOp>) {
          // nothing to do
        } else if constexpr (std::is_same_v<T, ExplicitDiagonal>) {
          check_diagonal(k, d);
          for (int j = 0; j < d; ++j) z.col(j) *= k.values[static_cast<std::size_t>(j)];
        } else {
          static_assert(std::is_same_v<T, GramAtoms>);
          const auto values = diagonal_from_gram_atoms(k.atoms, d);
          for (int j = 0; j < d; ++j) z.col(j) *= values[static_cast<std::size_t>(j)];
        }
      },
      kind);
}

namespace {

std::vector<double> diagonal_spectrum(std::vector<double> diag_values) {
  for (double& v : diag_values) v = v * v;
  std::sort(diag_values.begin(), diag_values.end());
  return diag_values;
}

std::vector<double> toeplitz_gram_spectrum(const ToeplitzAR& k, int n) {
  check_toeplitz(k);
  const int q = static_cast<int>(k.coeffs.size()) - 1;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  // (A^T A)(i, j) for j - i = band: sum of coeff products, truncated at the
  // bottom rows.
  for (int i = 0; i < n; ++i) {
    for (int band = 0; band <= q && i + band < n; ++band) {
      const int j = i + band;
      double sum = 0.0;
      for (int s = band; s <= q && i + s < n; ++s) {
        sum += k.coeffs[static_cast<std::size_t>(s)] *
               k.coeffs[static_cast<std::size_t>(s - band)];
      }
      gram(j, i) = sum;
      gram(i, j) = sum;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram,
                                                              Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigensolve failed for the toeplitz gram matrix");
  }
  std::vector<double> eigs(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + n);
  for (double& v : eigs) v = std::max(v, 0.0);
  return eigs;
}

std::vector<double> redundancy_spectrum(const Redundancy& k, int n) {
  check_redundancy(k);
  // A^T A is block diagonal with 2x2 blocks
  //   [[1 + (1-w)^2, w(1-w)], [w(1-w), w^2]]
  // per row pair, plus a lone unit eigenvalue when n is odd.
  const double w = k.omega;
  const double tr = 1.0 + (1.0 - w) * (1.0 - w) + w * w;
  const double det = w * w;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double hi = tr / 2.0 + disc;
  const double lo = std::max(0.0, tr / 2.0 - disc);
  std::vector<double> eigs;
  eigs.reserve(static_cast<std::size_t>(n));
  const int pairs = n / 2;
  for (int p = 0; p < pairs; ++p) {
    eigs.push_back(lo);
    eigs.push_back(hi);
  }
  if (n % 2 == 1) eigs.push_back(1.0);
  std::sort(eigs.begin(), eigs.end());
  return eigs;
}

}  // namespace

std::vector<double> empirical_spectrum(const AKind& kind, int n) {
  if (n < 1) throw InvalidCoefficientsError("spectrum size must be positive");
  return std::visit(
      [n](const auto& k) -> std::vector<double> {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, IdentityOp>) {
          return std::vector<double>(static_cast<std::size_t>(n), 1.0);
        } else if constexpr (std::is_same_v<T, ToeplitzAR>) {
          return toeplitz_gram_spectrum(k, n);
        } else if constexpr (std::is_same_v<T, Redundancy>) {
          return redundancy_spectrum(k, n);
        } else if constexpr (std::is_same_v<T, ExplicitDiagonal>) {
          check_diagonal(k, n);
          return diagonal_spectrum(k.values);
        } else {
          static_assert(std::is_same_v<T, GramAtoms>);
          return diagonal_spectrum(diagonal_from_gram_atoms(k.atoms, n));
        }
      },
      kind);
}

std::vector<double> empirical_spectrum(const BKind& kind, int n) {
  return std::visit(
      [n](const auto& k) -> std::vector<double> {
        return empirical_spectrum(AKind{k}, n);
      },
      kind);
}

Eigen::MatrixXd draw_z(ZDist dist, int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw NonPositiveArgumentError("n and d must be positive");
  rng::Stream z_stream(rng::derive_key(seed, kTagZ, 0, 0));
  Eigen::MatrixXd z(n, d);
  fill_standardized(z, dist, z_stream);
  return z;
}

TrialData materialize_trial(const CovariateModel& model, int n, int d,
                            double alpha, double sigma_eps, std::uint64_t seed) {
  if (n < 2 || d < 2) throw NonPositiveArgumentError("n and d must be at least 2");
  if (!(alpha > 0.0)) throw NonPositiveArgumentError("alpha must be positive");
  if (sigma_eps < 0.0) throw NonPositiveArgumentError("sigma_eps must be nonnegative");

  TrialData data;
  data.x = draw_z(model.z_dist, n, d, seed);
  apply_a_inplace(model.a, data.x);
  apply_b_inplace(model.b, data.x);

  rng::Stream beta_stream(rng::derive_key(seed, kTagBeta, 0, 0));
  rng::Stream eps_stream(rng::derive_key(seed, kTagEps, 0, 0));
  const double beta_scale = alpha / std::sqrt(static_cast<double>(d));
  data.beta_star.resize(d);
  for (int i = 0; i < d; ++i) data.beta_star(i) = beta_scale * beta_stream.normal();
  data.eps.resize(n);
  for (int i = 0; i < n; ++i) data.eps(i) = sigma_eps * eps_stream.normal();
  data.y = data.x * data.beta_star + data.eps;
  return data;
}

TrialResult sample_trial(const CovariateModel& model, int n, int d, double lambda,
                         double alpha, double sigma_eps, std::uint64_t seed,
                         SolvePath path) {
  if (!(lambda > 0.0)) throw NonPositiveArgumentError("lambda must be positive");

  const TrialData data = materialize_trial(model, n, d, alpha, sigma_eps, seed);
  const Eigen::MatrixXd& x = data.x;
  const Eigen::VectorXd& beta_star = data.beta_star;
  const Eigen::VectorXd& eps = data.eps;
  const Eigen::VectorXd& y = data.y;
  const double ridge = lambda * n;
  const bool dual = (path == SolvePath::Auto) ? (d > n) : (path == SolvePath::Dual);

  Eigen::VectorXd beta_hat, g, v;
  double m_emp = 0.0;
  double trace_inv = 0.0, trace_inv_sq = 0.0;  // over the full d x d resolvent
  if (!dual) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    const auto llt = factor_spd(gram, ridge);
    beta_hat = llt.solve(x.transpose() * y);
    g = llt.solve(beta_star);
    v = llt.solve(x.transpose() * eps);
    const auto traces = inverse_traces(llt);
    trace_inv = traces.trace_inv;
    trace_inv_sq = traces.trace_inv_sq;
    m_emp = static_cast<double>(n) / d * trace_inv;
  } else {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    const auto llt = factor_spd(gram, ridge);
    beta_hat = x.transpose() * llt.solve(y);
    g = (beta_star - x.transpose() * llt.solve(x * beta_star)) / ridge;
    v = x.transpose() * llt.solve(eps);
    const auto traces = inverse_traces(llt);
    const double null_dims = static_cast<double>(d - n);
    trace_inv = traces.trace_inv + null_dims / ridge;
    trace_inv_sq = traces.trace_inv_sq + null_dims / (ridge * ridge);
    m_emp = static_cast<double>(n) * trace_inv / d;
  }

  TrialResult r;
  r.empirical_risk = (beta_hat - beta_star).squaredNorm();
  r.empirical_bias = ridge * ridge * g.squaredNorm();
  r.empirical_variance = v.squaredNorm();
  r.cross_term = -2.0 * ridge * g.dot(v);
  r.empirical_m = m_emp;
  r.expected_bias = alpha * alpha * ridge * ridge * trace_inv_sq / d;
  r.expected_variance =
      sigma_eps * sigma_eps * (trace_inv - ridge * trace_inv_sq);
  r.seed = seed;
  r.n = n;
  r.d = d;
  return r;
}

Stats mean_and_se(std::span<const double> values) {
  Stats s;
  const auto count = values.size();
  if (count == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(count);
  if (count >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (static_cast<double>(count - 1) * static_cast<double>(count)));
  }
  return s;
}

std::vector<TrialResult> run_trials(const GridPointConfig& config, int trials,
                                    std::uint64_t base_seed,
                                    std::uint64_t grid_index, int workers) {
  if (trials < 1) throw NonPositiveArgumentError("need at least one trial");
  std::vector<TrialResult> out(static_cast<std::size_t>(trials));
  parallel_for(trials, workers, [&](int t) {
    const std::uint64_t seed =
        rng::derive_key(base_seed, grid_index, static_cast<std::uint64_t>(t), 0);
    try {
      out[static_cast<std::size_t>(t)] =
          sample_trial(config.model, config.n, config.d, config.lambda,
                       config.alpha, config.sigma_eps, seed);
    } catch (const NumericError& e) {
      throw SolveFailureError(std::string(e.what()) + " (grid point " +
                              std::to_string(grid_index) + ", trial " +
                              std::to_string(t) + ")");
    }
  });
  return out;
}

std::vector<BatchPoint> run_batch(std::span<const GridPointConfig> grid, int trials,
                                  std::uint64_t base_seed, int workers) {
  std::vector<BatchPoint> out;
  out.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto results = run_trials(grid[g], trials, base_seed, g, workers);
    std::vector<double> risk, bias, variance, m;
    risk.reserve(results.size());
    bias.reserve(results.size());
    variance.reserve(results.size());
    m.reserve(results.size());
    for (const TrialResult& r : results) {
      risk.push_back(r.empirical_risk);
      bias.push_back(r.empirical_bias);
      variance.push_back(r.empirical_variance);
      m.push_back(r.empirical_m);
    }
    BatchPoint p;
    p.axis_value = grid[g].axis_value;
    p.risk = mean_and_se(risk);
    p.bias = mean_and_se(bias);
    p.variance = mean_and_se(variance);
    p.m = mean_and_se(m);
    p.trials = trials;
    p.n = grid[g].n;
    p.d = grid[g].d;
    out.push_back(p);
  }
  return out;
}

std::vector<UniversalityArm> universality_compare(const CovariateModel& model, int n,
                                                  double gamma, double lambda,
                                                  double alpha, double sigma_eps,
                                                  int trials, std::uint64_t base_seed,
                                                  int workers) {
  if (trials < 10) {
    throw NonPositiveArgumentError("universality comparison needs at least 10 trials");
  }
  const int d = static_cast<int>(std::lround(gamma * n));
  if (d < 2) throw NonPositiveArgumentError("gamma * n must be at least 2");

  GridPointConfig config;
  config.model = model;
  config.n = n;
  config.d = d;
  config.lambda = lambda;
  config.alpha = alpha;
  config.sigma_eps = sigma_eps;

  const ZDist order[] = {ZDist::Gaussian, ZDist::Rademacher, ZDist::Uniform};
  std::vector<std::vector<double>> risks;
  for (ZDist dist : order) {
    config.model.z_dist = dist;
    const auto results = run_trials(config, trials, base_seed, 0, workers);
    std::vector<double> r;
    r.reserve(results.size());
    for (const auto& t : results) r.push_back(t.empirical_risk);
    risks.push_back(std::move(r));
  }

  std::vector<UniversalityArm> arms;
  const Stats gauss = mean_and_se(risks[0]);
  for (std::size_t a = 0; a < 3; ++a) {
    UniversalityArm arm;
    arm.dist = order[a];
    arm.risk = mean_and_se(risks[a]);
    std::vector<double> diffs(risks[a].size());
    for (std::size_t t = 0; t < diffs.size(); ++t) diffs[t] = risks[a][t] - risks[0][t];
    const Stats gap = mean_and_se(diffs);
    arm.gap_vs_gaussian = gap.mean;
    arm.gap_se = gap.se;
    arm.pooled_se = std::sqrt(arm.risk.se * arm.risk.se + gauss.se * gauss.se);
    arms.push_back(arm);
  }
  return arms;
}

AKind parse_a_model(std::string_view text) {
  if (text == "identity") return IdentityOp{};
  if (text.starts_with("ar:")) {
    ToeplitzAR t{parse_value_list(text.substr(3), "toeplitz coefficient")};
    check_toeplitz(t);
    return t;
  }
  if (text.starts_with("redundancy:")) {
    Redundancy r{parse_number(text.substr(11), "redundancy omega")};
    check_redundancy(r);
    return r;
  }
  if (text.starts_with("diag:")) {
    return ExplicitDiagonal{parse_value_list(text.substr(5), "diagonal entry")};
  }
  if (text.starts_with("gram:")) {
    return GramAtoms{parse_atom_list(text.substr(5))};
  }
  throw SpecParseError("unrecognized model spec '" + std::string(text) +
                       "' (expected identity, ar:, redundancy:, diag:, or gram:)");
}

BKind parse_b_model(std::string_view text) {
  if (text == "identity") return IdentityOp{};
  if (text.starts_with("diag:")) {
    return ExplicitDiagonal{parse_value_list(text.substr(5), "diagonal entry")};
  }
  if (text.starts_with("gram:")) {
    return GramAtoms{parse_atom_list(text.substr(5))};
  }
  throw SpecParseError("unrecognized spatial model spec '" + std::string(text) +
                       "' (expected identity, diag:, or gram:)");
}

std::string model_spec_string(const AKind& kind) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, IdentityOp>) {
          return "identity";
        } else if constexpr (std::is_same_v<T, ToeplitzAR>) {
          return "ar:" + value_list_string(k.coeffs);
        } else if constexpr (std::is_same_v<T, Redundancy>) {
          return "redundancy:" + format_double(k.omega);
        } else if constexpr (std::is_same_v<T, ExplicitDiagonal>) {
          return "diag:" + value_list_string(k.values);
        } else {
          static_assert(std::is_same_v<T, GramAtoms>);
          return "gram:" + atom_list_string(k.atoms);
        }
      },
      kind);
}

std::string model_spec_string(const BKind& kind) {
  return std::visit(
      [](const auto& k) -> std::string { return model_spec_string(AKind{k}); }, kind);
}

const char* z_dist_name(ZDist dist) {
  switch (dist) {
    case ZDist::Gaussian: return "gaussian";
    case ZDist::Rademacher: return "rademacher";
    case ZDist::Uniform: return "uniform";
  }
  return "unknown";
}

ZDist parse_z_dist(std::string_view text) {
  if (text == "gaussian") return ZDist::Gaussian;
  if (text == "rademacher") return ZDist::Rademacher;
  if (text == "uniform") return ZDist::Uniform;
  throw SpecParseError("unrecognized z distribution '" + std::string(text) +
                       "' (expected gaussian, rademacher, or uniform)");
}

int worker_count_from_env() {
  const char* value = std::getenv("RIDGELIM_THREADS");
  if (value == nullptr) return 1;
  const int workers = std::atoi(value);
  return std::clamp(workers, 1, 256);
}

}  // namespace ridgelim
