#include "ridgelim/measures.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ridgelim/errors.hpp"
#include "ridgelim/grid.hpp"

namespace ridgelim {

namespace {

constexpr double kAtomMergeTol = 1e-12;

void check_positive_argument(double z) {
  if (!(z > 0.0)) {
    throw NonPositiveArgumentError(
        "stieltjes transform requires a strictly positive argument, got " +
        format_double(z));
  }
}

std::vector<Atom> merge_sorted_atoms(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.value < b.value; });
  std::vector<Atom> merged;
  merged.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (!merged.empty() && a.value - merged.back().value <= kAtomMergeTol) {
      Atom& last = merged.back();
      const double w = last.weight + a.weight;
      last.value = (last.value * last.weight + a.value * a.weight) / w;
      last.weight = w;
    } else {
      merged.push_back(a);
    }
  }
  return merged;
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

}  // namespace

SpectralMeasure SpectralMeasure::atoms(std::vector<Atom> atoms) {
  if (atoms.empty()) {
    throw InvalidMeasureError("an atoms measure needs at least one atom");
  }
  double total = 0.0;
  for (Atom& a : atoms) {
    if (!std::isfinite(a.value) || !std::isfinite(a.weight)) {
      throw InvalidMeasureError("atom entries must be finite");
    }
    if (!(a.weight > 0.0)) {
      throw InvalidMeasureError("atom weights must be positive");
    }
    if (a.value < -1e-10) {
      throw InvalidMeasureError("atom values must be nonnegative, got " +
                                format_double(a.value));
    }
    a.value = std::max(a.value, 0.0);
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidMeasureError("atom weights must sum to 1 (got " +
                              format_double(total) + ")");
  }
  for (Atom& a : atoms) a.weight /= total;

  SpectralMeasure m;
  m.kind_ = Kind::Atoms;
  m.atoms_ = merge_sorted_atoms(std::move(atoms));
  return m;
}

SpectralMeasure SpectralMeasure::szego(std::vector<double> filter_coeffs,
                                       int quadrature_points) {
  if (filter_coeffs.empty() ||
      std::all_of(filter_coeffs.begin(), filter_coeffs.end(),
                  [](double c) { return c == 0.0; })) {
    throw InvalidMeasureError("filter coefficients need at least one nonzero entry");
  }
  for (double c : filter_coeffs) {
    if (!std::isfinite(c)) throw InvalidMeasureError("filter coefficients must be finite");
  }
  if (quadrature_points < 64 || quadrature_points % 2 != 0) {
    throw InvalidMeasureError("quadrature size must be even and at least 64");
  }

  SpectralMeasure m;
  m.kind_ = Kind::SzegoPushforward;
  m.coeffs_ = std::move(filter_coeffs);
  m.quadrature_points_ = quadrature_points;
  m.symbol_sq_.resize(static_cast<std::size_t>(quadrature_points));
  const double step = 2.0 * std::numbers::pi / quadrature_points;
  for (int j = 0; j < quadrature_points; ++j) {
    const double t = step * j;
    std::complex<double> f{0.0, 0.0};
    for (std::size_t k = 0; k < m.coeffs_.size(); ++k) {
      f += m.coeffs_[k] * std::polar(1.0, static_cast<double>(k) * t);
    }
    m.symbol_sq_[static_cast<std::size_t>(j)] = std::norm(f);
  }
  return m;
}

SpectralMeasure SpectralMeasure::from_eigenvalues(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) {
    throw EmptySpectrumError("cannot build a measure from an empty spectrum");
  }
  std::vector<Atom> atoms;
  atoms.reserve(eigenvalues.size());
  const double w = 1.0 / static_cast<double>(eigenvalues.size());
  for (double v : eigenvalues) {
    if (!std::isfinite(v) || v < -1e-10) {
      throw InvalidMeasureError("eigenvalues must be finite and nonnegative, got " +
                                format_double(v));
    }
    atoms.push_back({std::max(v, 0.0), w});
  }
  return SpectralMeasure::atoms(std::move(atoms));
}

double SpectralMeasure::stieltjes(double z) const {
  check_positive_argument(z);
  if (kind_ == Kind::Atoms) {
    double sum = 0.0;
    for (const Atom& a : atoms_) sum += a.weight / (z + a.value);
    return sum;
  }
  double sum = 0.0;
  for (double s : symbol_sq_) sum += 1.0 / (z + s);
  return sum / static_cast<double>(symbol_sq_.size());
}

double SpectralMeasure::stieltjes_derivative(double z) const {
  check_positive_argument(z);
  if (kind_ == Kind::Atoms) {
    double sum = 0.0;
    for (const Atom& a : atoms_) {
      const double r = z + a.value;
      sum += a.weight / (r * r);
    }
    return -sum;
  }
  double sum = 0.0;
  for (double s : symbol_sq_) {
    const double r = z + s;
    sum += 1.0 / (r * r);
  }
  return -sum / static_cast<double>(symbol_sq_.size());
}

double SpectralMeasure::stieltjes_complement(double z) const {
  check_positive_argument(z);
  if (kind_ == Kind::Atoms) {
    double sum = 0.0;
    for (const Atom& a : atoms_) sum += a.weight * a.value / (z + a.value);
    return sum;
  }
  double sum = 0.0;
  for (double s : symbol_sq_) sum += s / (z + s);
  return sum / static_cast<double>(symbol_sq_.size());
}

double SpectralMeasure::stieltjes_complement_sq(double z) const {
  check_positive_argument(z);
  if (kind_ == Kind::Atoms) {
    double sum = 0.0;
    for (const Atom& a : atoms_) {
      const double r = a.value / (z + a.value);
      sum += a.weight * r * r;
    }
    return sum;
  }
  double sum = 0.0;
  for (double s : symbol_sq_) {
    const double r = s / (z + s);
    sum += r * r;
  }
  return sum / static_cast<double>(symbol_sq_.size());
}

bool SpectralMeasure::is_point_mass_at(double value, double tol) const {
  if (kind_ == Kind::Atoms) {
    return atoms_.size() == 1 && std::abs(atoms_[0].value - value) <= tol;
  }
  for (double s : symbol_sq_) {
    if (std::abs(s - value) > tol) return false;
  }
  return true;
}

std::string SpectralMeasure::spec_string() const {
  std::string out;
  if (kind_ == Kind::Atoms) {
    out = "atoms:";
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (i) out += ',';
      out += format_double(atoms_[i].weight);
      out += ':';
      out += format_double(atoms_[i].value);
    }
  } else {
    out = "szego:";
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      if (i) out += ',';
      out += format_double(coeffs_[i]);
    }
    out += '@';
    out += std::to_string(quadrature_points_);
  }
  return out;
}

SpectralMeasure parse_measure(std::string_view text) {
  if (text == "identity") return SpectralMeasure::identity();

  if (text.starts_with("atoms:")) {
    text.remove_prefix(6);
    if (text.empty()) throw SpecParseError("empty atoms list");
    std::vector<Atom> atoms;
    double total = 0.0;
    for (auto part : split(text, ',')) {
      const auto sep = part.find(':');
      if (sep == std::string_view::npos) {
        throw SpecParseError("atoms entries must look like weight:value, got '" +
                             std::string(part) + "'");
      }
      const double w = parse_number(part.substr(0, sep), "atom weight");
      const double v = parse_number(part.substr(sep + 1), "atom value");
      atoms.push_back({v, w});
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw SpecParseError("atom weights must sum to 1 within 1e-6 (got " +
                           format_double(total) + ")");
    }
    for (Atom& a : atoms) a.weight /= total;
    return SpectralMeasure::atoms(std::move(atoms));
  }

  if (text.starts_with("szego:")) {
    text.remove_prefix(6);
    int points = SpectralMeasure::kDefaultQuadraturePoints;
    const auto at = text.find('@');
    if (at != std::string_view::npos) {
      const double p = parse_number(text.substr(at + 1), "quadrature size");
      points = static_cast<int>(p);
      if (points != p) throw SpecParseError("quadrature size must be an integer");
      text = text.substr(0, at);
    }
    if (text.empty()) throw SpecParseError("empty filter coefficient list");
    std::vector<double> coeffs;
    for (auto part : split(text, ',')) {
      coeffs.push_back(parse_number(part, "filter coefficient"));
    }
    return SpectralMeasure::szego(std::move(coeffs), points);
  }

  if (text.starts_with("file:")) {
    const std::string path(text.substr(5));
    std::ifstream in(path);
    if (!in) throw SpecParseError("could not open eigenvalue file '" + path + "'");
    std::vector<double> eigs;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      eigs.push_back(parse_number(line, "eigenvalue"));
    }
    if (eigs.empty()) throw EmptySpectrumError("eigenvalue file '" + path + "' is empty");
    return SpectralMeasure::from_eigenvalues(eigs);
  }

  throw SpecParseError("unrecognized measure spec '" + std::string(text) +
                       "' (expected identity, atoms:, szego:, or file:)");
}

double mtilde_b(const SpectralMeasure& mu_b, double gamma, double kappa) {
  if (!(gamma > 0.0)) throw NonPositiveArgumentError("gamma must be positive");
  if (!(kappa > 0.0)) throw NonPositiveArgumentError("kappa must be positive");
  // gamma * kappa * (1 - kappa*m_B(kappa)) in the cancellation-free form.
  return gamma * kappa * mu_b.stieltjes_complement(kappa);
}

double mtilde_b_derivative(const SpectralMeasure& mu_b, double gamma, double kappa) {
  if (!(gamma > 0.0)) throw NonPositiveArgumentError("gamma must be positive");
  if (!(kappa > 0.0)) throw NonPositiveArgumentError("kappa must be positive");
  // gamma - 2*gamma*k*m_B(k) - gamma*k^2*m_B'(k) in the cancellation-free form.
  return gamma * mu_b.stieltjes_complement_sq(kappa);
}

}  // namespace ridgelim
