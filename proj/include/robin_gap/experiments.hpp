#pragma once

// Parameter sweeps over the analytic and finite-element solvers: gap decay in
// the opening angle, Schrodinger ground-state convergence in R, the interval
// comparison, and truncated-cone continuity. Results are CSV text with
// `#` footer lines; plots are standalone SVG.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "robin_gap/cone_analytics.hpp"
#include "robin_gap/error.hpp"
#include "robin_gap/fit.hpp"
#include "robin_gap/parallel.hpp"
#include "robin_gap/robin_spectrum.hpp"
#include "robin_gap/schrodinger_ball.hpp"

namespace robin_gap {

// ---------------------------------------------------------------------------
// Formatting and parsing

/// Fixed 12-significant-digit formatting used for every CSV number.
inline std::string fmt12(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

class ExprParser {
 public:
  explicit ExprParser(std::string s) : s_(std::move(s)) {}

  double parse() {
    const double v = expr();
    skip();
    if (pos_ != s_.size()) fail();
    return v;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail() const { throw DomainError("cannot parse number '" + s_ + "'"); }

  double expr() {
    double v = unary();
    for (;;) {
      skip();
      if (pos_ < s_.size() && s_[pos_] == '*') {
        ++pos_;
        v *= unary();
      } else if (pos_ < s_.size() && s_[pos_] == '/') {
        ++pos_;
        v /= unary();
      } else {
        return v;
      }
    }
  }

  double unary() {
    skip();
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      const bool neg = s_[pos_++] == '-';
      const double v = unary();
      return neg ? -v : v;
    }
    return atom();
  }

  double atom() {
    skip();
    if (s_.compare(pos_, 2, "pi") == 0) {
      pos_ += 2;
      return std::numbers::pi;
    }
    if (s_.compare(pos_, 3, "inf") == 0) {
      pos_ += 3;
      return std::numeric_limits<double>::infinity();
    }
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(s_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail();
    }
    if (used == 0) fail();
    pos_ += used;
    if (s_.compare(pos_, 2, "pi") == 0) {  // 2pi/7
      pos_ += 2;
      v *= std::numbers::pi;
    }
    return v;
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Numbers with optional pi factors and inf: "0.5", "pi/3", "2*pi/7", "2pi/7", "+inf".
inline double parse_real(const std::string& text) { return detail::ExprParser(detail::lower(detail::trim(text))).parse(); }

/// Comma-separated list; an entry "a..b" or "a..b:step" expands to a, a+step, ..., b (step 1 by default).
inline std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_real(item));
      continue;
    }
    std::string rest = item.substr(dots + 2);
    double step = 1.0;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      step = parse_real(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    const double a = parse_real(item.substr(0, dots)), b = parse_real(rest);
    if (!(step > 0.0) || !(b >= a)) throw DomainError("bad range '" + item + "'");
    const long count = std::lround(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * step);
  }
  if (out.empty()) throw DomainError("empty list '" + text + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class Study { GapDecay, SchrodingerConvergence, ConjectureCompare, TruncationContinuity };

inline const char* study_name(Study s) {
  switch (s) {
    case Study::GapDecay: return "gap_decay";
    case Study::SchrodingerConvergence: return "schrodinger_convergence";
    case Study::ConjectureCompare: return "conjecture_compare";
    default: return "truncation_continuity";
  }
}

inline Study parse_study(const std::string& name) {
  for (Study s : {Study::GapDecay, Study::SchrodingerConvergence, Study::ConjectureCompare, Study::TruncationContinuity})
    if (name == study_name(s)) return s;
  throw DomainError("unknown study '" + name + "'");
}

struct SweepConfig {
  Study study = Study::GapDecay;
  double alpha = -2.0;
  std::vector<double> theta_list;
  std::vector<double> R_list;
  std::vector<double> eps_list;
  int n = 2;
  double mesh_h = 0.04;
  std::string output_prefix = "out/study";

  // Schrodinger parameters.
  double kappa = 1.0;
  double gamma = std::numeric_limits<double>::infinity();
  double tol = 1e-12;

  // Finite-element resolution: Richardson levels grow from min_levels up to
  // max_levels until each row passes the resolution rule.
  int min_levels = 3;
  int max_levels = 5;
  bool graded = true;

  void validate() const;
};

namespace detail {

inline bool strictly_monotone(const std::vector<double>& v) {
  if (v.size() < 2) return true;
  bool up = true, down = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    up = up && v[i] > v[i - 1];
    down = down && v[i] < v[i - 1];
  }
  return up || down;
}

inline void require_list(const std::vector<double>& v, const char* name) {
  if (v.empty()) throw DomainError(std::string("config: ") + name + " is required");
  if (!strictly_monotone(v)) throw DomainError(std::string("config: ") + name + " must be sorted without repeats");
}

}  // namespace detail

inline void SweepConfig::validate() const {
  if (!std::isfinite(alpha)) throw DomainError("config: alpha must be finite");
  if (!(mesh_h > 0.0)) throw DomainError("config: mesh_h must be positive");
  if (min_levels < 2 || max_levels < min_levels) throw DomainError("config: need 2 <= min_levels <= max_levels");
  if (output_prefix.empty()) throw DomainError("config: output_prefix is empty");
  switch (study) {
    case Study::GapDecay:
    case Study::ConjectureCompare:
      detail::require_list(theta_list, "theta_list");
      for (double t : theta_list)
        if (!(t > 0.0 && t < std::numbers::pi)) throw DomainError("config: theta must lie in (0, pi)");
      if (study == Study::ConjectureCompare && !(alpha <= 0.0))
        throw DomainError("config: conjecture_compare needs alpha <= 0");
      break;
    case Study::SchrodingerConvergence:
      detail::require_list(R_list, "R_list");
      if (n < 2) throw DomainError("config: n must be >= 2");
      if (!(kappa > 0.0)) throw DomainError("config: kappa must be positive");
      break;
    case Study::TruncationContinuity:
      detail::require_list(eps_list, "eps_list");
      if (theta_list.size() != 1) throw DomainError("config: truncation_continuity takes a single theta");
      for (double e : eps_list)
        if (!(e > 0.0 && e < 1.0))
          throw DomainError("config: eps must lie in (0, 1); eps = 0 is the untruncated domain");
      break;
  }
}

/// Applies one `key = value` setting. Unknown keys are errors.
inline void set_config_value(SweepConfig& c, const std::string& key_in, const std::string& value_in) {
  const std::string key = detail::lower(detail::trim(key_in));
  const std::string value = detail::trim(value_in);
  auto to_int = [&] {
    const double v = parse_real(value);
    if (v != std::floor(v)) throw DomainError("config: " + key + " must be an integer");
    return static_cast<int>(v);
  };
  if (key == "study") c.study = parse_study(detail::lower(value));
  else if (key == "alpha") c.alpha = parse_real(value);
  else if (key == "theta_list" || key == "theta") c.theta_list = parse_real_list(value);
  else if (key == "r_list") c.R_list = parse_real_list(value);
  else if (key == "eps_list") c.eps_list = parse_real_list(value);
  else if (key == "n") c.n = to_int();
  else if (key == "mesh_h") c.mesh_h = parse_real(value);
  else if (key == "output_prefix") c.output_prefix = value;
  else if (key == "kappa") c.kappa = parse_real(value);
  else if (key == "gamma") c.gamma = parse_real(value);
  else if (key == "tol") c.tol = parse_real(value);
  else if (key == "min_levels") c.min_levels = to_int();
  else if (key == "max_levels") c.max_levels = to_int();
  else if (key == "graded") {
    const std::string v = detail::lower(value);
    if (v == "true" || v == "1" || v == "yes") c.graded = true;
    else if (v == "false" || v == "0" || v == "no") c.graded = false;
    else throw DomainError("config: graded must be true or false");
  } else {
    throw DomainError("config: unknown key '" + key_in + "'");
  }
}

/// Reads `key = value` lines; `#` starts a comment. Overrides are applied afterwards, so flags win.
inline SweepConfig parse_config(std::istream& in, const std::map<std::string, std::string>& overrides = {}) {
  SweepConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DomainError("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(c, line.substr(0, eq), line.substr(eq + 1));
  }
  for (const auto& [k, v] : overrides) set_config_value(c, k, v);
  c.validate();
  return c;
}

inline SweepConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config '" + path + "'");
  return parse_config(in, overrides);
}

// ---------------------------------------------------------------------------
// Resolution

/// Gaps below this fraction of |lambda_1| are at the numerical floor.
inline constexpr double kGapFloor = 1e-10;
/// A gap is used in fits only if it exceeds this multiple of the eigenvalue error estimate.
inline constexpr double kResolutionFactor = 1e4;

inline bool gap_resolved(double gap, double eig_error, double lambda1) {
  return gap > 0.0 && gap >= kGapFloor * std::fabs(lambda1) && gap >= kResolutionFactor * eig_error;
}

inline SpectrumOptions study_spectrum_options(const SweepConfig& c) {
  SpectrumOptions o;
  o.k = 2;
  o.half_domain = true;
  o.graded = c.graded;
  return o;
}

/// Extrapolated spectrum on `poly`, refined until the gap passes the resolution rule or max_levels is reached.
inline ExtrapolatedSpectrum resolved_spectrum(const PolygonDomain& poly, double alpha, const SweepConfig& c) {
  return robin_spectrum_refined_on(poly, alpha, c.mesh_h, c.min_levels, c.max_levels, study_spectrum_options(c),
                                   [](const ExtrapolatedSpectrum& e) {
                                     return gap_resolved(e.gap, e.discretization_error(), e.eigenvalues[0]);
                                   });
}

/// Smallest cutoff trial quotient over a fixed grid of cutoff widths; NaN unless alpha < 0.
inline double best_trial_quotient(double theta, double alpha) {
  if (!(alpha < 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double best = std::numeric_limits<double>::infinity();
  for (double eps : {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9})
    best = std::min(best, trial_upper_bound({theta, alpha, 2}, eps).quotient);
  return best;
}

// ---------------------------------------------------------------------------
// Gap decay

struct GapRow {
  double theta = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double gap = 0.0;
  double envelope = 0.0;
  double trial_quotient = 0.0;
  double lambda1_cone = 0.0;
  double eig_error = 0.0;  // larger Richardson error estimate of lambda_1, lambda_2
  double gap_error = 0.0;
  int levels = 0;
  std::size_t dofs = 0;  // finest half-domain mesh
  Parity parity_of_second = Parity::Unknown;
  bool resolved = false;

  double inv_theta() const { return 1.0 / theta; }
  const char* status() const { return resolved ? "ok" : "unresolved"; }
};

inline GapRow gap_row(double theta, double alpha, const SweepConfig& c) {
  const ExtrapolatedSpectrum e = resolved_spectrum(build_double_cone(theta), alpha, c);
  GapRow r;
  r.theta = theta;
  r.lambda1 = e.eigenvalues[0];
  r.lambda2 = e.eigenvalues[1];
  r.gap = e.gap;
  r.envelope = gap_envelope(alpha, 0.0, theta);
  r.trial_quotient = best_trial_quotient(theta, alpha);
  r.lambda1_cone = alpha < 0.0 ? cone_ground_energy({theta, alpha, 2}) : std::numeric_limits<double>::quiet_NaN();
  r.eig_error = e.discretization_error();
  r.gap_error = e.gap_error;
  r.levels = static_cast<int>(e.levels.size());
  r.dofs = e.levels.back().dofs;
  r.parity_of_second = e.parity_of_second;
  r.resolved = gap_resolved(r.gap, r.eig_error, r.lambda1);
  return r;
}

struct GapDecayResult {
  double alpha = 0.0;
  std::vector<GapRow> rows;
  std::optional<FitResult> fit;  // log(gap) against 1/theta over resolved rows
  std::string fit_note;

  std::size_t resolved_count() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const GapRow& r) { return r.resolved; }));
  }

  std::string csv() const {
    std::ostringstream os;
    os << "theta,inv_theta,lambda1,lambda2,gap,envelope,trial_quotient,eig_error,gap_error,levels,status\n";
    for (const auto& r : rows)
      os << fmt12(r.theta) << ',' << fmt12(r.inv_theta()) << ',' << fmt12(r.lambda1) << ',' << fmt12(r.lambda2) << ','
         << fmt12(r.gap) << ',' << fmt12(r.envelope) << ',' << fmt12(r.trial_quotient) << ',' << fmt12(r.eig_error)
         << ',' << fmt12(r.gap_error) << ',' << r.levels << ',' << r.status() << '\n';
    if (fit) {
      os << "# fit log(gap) = slope / theta + intercept over resolved rows\n";
      os << "# fit_slope=" << fmt12(fit->slope) << '\n';
      os << "# fit_intercept=" << fmt12(fit->intercept) << '\n';
      os << "# fit_r_squared=" << fmt12(fit->r_squared) << '\n';
      os << "# fit_points_used=" << fit->points_used << '\n';
      os << "# empirical_C=" << fmt12(std::exp(fit->intercept)) << '\n';
    } else {
      os << "# fit refused: " << fit_note << '\n';
    }
    os << "# asymptotic_slope=" << fmt12(-4.0 * std::fabs(alpha)) << " (reported, not gated)\n";
    os << "# conservative_slope_threshold=" << fmt12(-2.0 * std::fabs(alpha)) << '\n';
    return os.str();
  }
};

inline GapDecayResult run_gap_decay(const SweepConfig& c) {
  if (c.study != Study::GapDecay) throw DomainError("run_gap_decay: config study is " + std::string(study_name(c.study)));
  c.validate();
  GapDecayResult out;
  out.alpha = c.alpha;
  out.rows = parallel_map(c.theta_list.size(), [&](std::size_t i) { return gap_row(c.theta_list[i], c.alpha, c); });
  std::vector<double> x, y;
  for (const auto& r : out.rows)
    if (r.resolved) {
      x.push_back(r.inv_theta());
      y.push_back(std::log(r.gap));
    }
  try {
    out.fit = fit_line(x, y);
  } catch (const FitError& e) {
    out.fit_note = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schrodinger convergence

struct SchrodingerConvergenceResult {
  ConvergenceStudy study;
  double kappa = 0.0, gamma = 0.0;
  int n = 0;

  std::string csv() const {
    std::ostringstream os;
    os << "R,z,E,E_limit,abs_err,status\n";
    for (const auto& r : study.rows)
      os << fmt12(r.R) << ',' << fmt12(r.z) << ',' << fmt12(r.E) << ',' << fmt12(r.E_limit) << ',' << fmt12(r.abs_err)
         << ',' << (r.abs_err > kConvergenceFloor ? "ok" : "floor") << '\n';
    os << "# fit log|E - E_limit| = slope R + intercept\n";
    os << "# fitted_slope=" << fmt12(study.fit.slope) << '\n';
    os << "# fit_intercept=" << fmt12(study.fit.intercept) << '\n';
    os << "# fit_r_squared=" << fmt12(study.fit.r_squared) << '\n';
    os << "# fit_points_used=" << study.fit.points_used << '\n';
    os << "# reference_slope=" << fmt12(-2.0 * kappa / (n - 1)) << '\n';
    return os.str();
  }
};

inline SchrodingerConvergenceResult run_schrodinger_convergence(const SweepConfig& c) {
  if (c.study != Study::SchrodingerConvergence)
    throw DomainError("run_schrodinger_convergence: config study is " + std::string(study_name(c.study)));
  c.validate();
  if (c.R_list.size() < 3)
    throw FitError("run_schrodinger_convergence: " + std::to_string(c.R_list.size()) + " radii, a fit needs at least 3");
  SchrodingerConvergenceResult out;
  out.kappa = c.kappa;
  out.gamma = c.gamma;
  out.n = c.n;
  out.study = convergence_study(c.kappa, c.gamma, c.n, c.R_list, c.tol);
  return out;
}

// ---------------------------------------------------------------------------
// Interval comparison

struct ConjectureReport {
  double alpha = 0.0;
  double interval_length = 2.0;
  double interval_lambda1 = 0.0, interval_lambda2 = 0.0;
  std::vector<GapRow> rows;  // in scan order
  std::optional<std::size_t> witness;
  std::optional<double> smallest_resolved_theta;

  double interval_gap() const { return interval_lambda2 - interval_lambda1; }

  std::string csv() const {
    std::ostringstream os;
    os << "theta,lambda1,lambda2,gap,gap_interval,eig_error,levels,status\n";
    for (const auto& r : rows)
      os << fmt12(r.theta) << ',' << fmt12(r.lambda1) << ',' << fmt12(r.lambda2) << ',' << fmt12(r.gap) << ','
         << fmt12(interval_gap()) << ',' << fmt12(r.eig_error) << ',' << r.levels << ',' << r.status() << '\n';
    os << "# interval_length=" << fmt12(interval_length) << '\n';
    os << "# interval_lambda1=" << fmt12(interval_lambda1) << '\n';
    os << "# interval_lambda2=" << fmt12(interval_lambda2) << '\n';
    if (witness) {
      const GapRow& w = rows[*witness];
      os << "# witness_theta=" << fmt12(w.theta) << '\n';
      os << "# witness_gap=" << fmt12(w.gap) << '\n';
      os << "# witness_diameter=" << fmt12(diameter(build_double_cone(w.theta))) << '\n';
      os << "# witness_finest_dofs=" << w.dofs << '\n';
    } else {
      os << "# witness=none\n";
      if (smallest_resolved_theta) os << "# smallest_resolved_theta=" << fmt12(*smallest_resolved_theta) << '\n';
    }
    return os.str();
  }
};

/// Scans theta from largest to smallest until a resolved double-cone gap falls below the interval gap.
inline ConjectureReport run_conjecture_compare(const SweepConfig& c) {
  if (c.study != Study::ConjectureCompare)
    throw DomainError("run_conjecture_compare: config study is " + std::string(study_name(c.study)));
  c.validate();
  ConjectureReport out;
  out.alpha = c.alpha;
  std::tie(out.interval_lambda1, out.interval_lambda2) = interval_spectrum(out.interval_length, c.alpha);
  if (!(out.interval_gap() >= kGapFloor * std::fabs(out.interval_lambda1)))
    throw ConvergenceError("run_conjecture_compare: interval gap is below the numerical floor");
  std::vector<double> thetas = c.theta_list;
  std::sort(thetas.begin(), thetas.end(), std::greater<>());
  for (double theta : thetas) {
    if (theta > std::numbers::pi / 2) continue;  // diameter would exceed 2
    out.rows.push_back(gap_row(theta, c.alpha, c));
    const GapRow& r = out.rows.back();
    if (!r.resolved) continue;
    out.smallest_resolved_theta = theta;
    if (r.gap < out.interval_gap()) {
      out.witness = out.rows.size() - 1;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Truncated cones

struct TruncationRow {
  double eps = 0.0;
  double t_eps = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0, gap = 0.0;
  double eig_error = 0.0;
  double diameter = 0.0;
};

struct TruncationResult {
  double theta = 0.0, alpha = 0.0;
  double ref_lambda1 = 0.0, ref_lambda2 = 0.0, ref_error = 0.0;
  std::vector<TruncationRow> rows;

  double deviation(std::size_t i, int j) const {
    return j == 0 ? std::fabs(rows[i].lambda1 - ref_lambda1) : std::fabs(rows[i].lambda2 - ref_lambda2);
  }

  std::string csv() const {
    std::ostringstream os;
    os << "eps,t_eps,lambda1,lambda2,gap,ref_lambda1,ref_lambda2,eig_error\n";
    for (const auto& r : rows)
      os << fmt12(r.eps) << ',' << fmt12(r.t_eps) << ',' << fmt12(r.lambda1) << ',' << fmt12(r.lambda2) << ','
         << fmt12(r.gap) << ',' << fmt12(ref_lambda1) << ',' << fmt12(ref_lambda2) << ',' << fmt12(r.eig_error) << '\n';
    os << "# theta=" << fmt12(theta) << '\n';
    os << "# alpha=" << fmt12(alpha) << '\n';
    os << "# ref_error=" << fmt12(ref_error) << '\n';
    return os.str();
  }
};

inline TruncationResult run_truncation_continuity(const SweepConfig& c) {
  if (c.study != Study::TruncationContinuity)
    throw DomainError("run_truncation_continuity: config study is " + std::string(study_name(c.study)));
  c.validate();
  TruncationResult out;
  out.theta = c.theta_list.front();
  out.alpha = c.alpha;
  // Index 0 is the untruncated reference.
  const std::size_t m = c.eps_list.size() + 1;
  const auto spectra = parallel_map(m, [&](std::size_t i) {
    const PolygonDomain p = i == 0 ? build_double_cone(out.theta) : build_truncated(out.theta, c.eps_list[i - 1]);
    return resolved_spectrum(p, c.alpha, c);
  });
  out.ref_lambda1 = spectra[0].eigenvalues[0];
  out.ref_lambda2 = spectra[0].eigenvalues[1];
  out.ref_error = spectra[0].discretization_error();
  for (std::size_t i = 1; i < m; ++i) {
    const double eps = c.eps_list[i - 1];
    TruncationRow r;
    r.eps = eps;
    r.t_eps = truncation_scale(out.theta, eps);
    r.lambda1 = spectra[i].eigenvalues[0];
    r.lambda2 = spectra[i].eigenvalues[1];
    r.gap = spectra[i].gap;
    r.eig_error = spectra[i].discretization_error();
    r.diameter = diameter(build_truncated(out.theta, eps));
    out.rows.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plots

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DomainError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(detail::trim(cell));
    return f;
  };
  while (std::getline(in, line)) {
    if (detail::trim(line).empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split(line);
    } else {
      t.rows.push_back(split(line));
      if (t.rows.back().size() != t.header.size()) throw DomainError("CSV row has the wrong number of fields");
    }
  }
  if (t.header.empty()) throw DomainError("CSV is empty");
  return t;
}

/// Writes an SVG scatter of y_col against x_col. With fit_overlay, a least-squares line through
/// log(y) (or y) is drawn over rows whose `status` column, if any, reads "ok"; the fit is returned.
inline std::optional<FitResult> emit_plot(const std::string& csv_path, const std::string& x_col,
                                          const std::string& y_col, bool log_y, const std::string& out_svg,
                                          bool fit_overlay = true) {
  std::ifstream in(csv_path);
  if (!in) throw DomainError("cannot open CSV '" + csv_path + "'");
  const CsvTable t = read_csv(in);
  const std::size_t xi = t.column(x_col), yi = t.column(y_col);
  std::optional<std::size_t> si;
  if (std::find(t.header.begin(), t.header.end(), "status") != t.header.end()) si = t.column("status");

  struct P {
    double x, y;
    bool used;
  };
  std::vector<P> pts;
  for (const auto& row : t.rows) {
    double x, y;
    try {
      x = parse_real(row[xi]);
      y = parse_real(row[yi]);
    } catch (const DomainError&) {
      continue;
    }
    if (!std::isfinite(x) || !std::isfinite(y) || (log_y && !(y > 0.0))) continue;
    pts.push_back({x, log_y ? std::log(y) : y, !si || row[*si] == "ok"});
  }
  if (pts.empty()) throw DomainError("CSV '" + csv_path + "' has no plottable rows");

  std::optional<FitResult> fit;
  if (fit_overlay) {
    std::vector<double> fx, fy;
    for (const auto& p : pts)
      if (p.used) {
        fx.push_back(p.x);
        fy.push_back(p.y);
      }
    try {
      fit = fit_line(fx, fy);
    } catch (const FitError&) {
    }
  }

  double x0 = pts[0].x, x1 = x0, y0 = pts[0].y, y1 = y0;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
  x0 -= px;
  x1 += px;
  y0 -= py;
  y1 += py;
  const double W = 640, H = 480, L = 80, R = 20, T = 30, B = 60;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    const std::string ylab = log_y ? fmt12(std::exp(yv)).substr(0, 9) : fmt12(yv).substr(0, 9);
    os << "<text x=\"" << sx(xv) << "\" y=\"" << H - B + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
       << fmt12(xv).substr(0, 7) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << sy(yv) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << ylab
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" font-size=\"14\" text-anchor=\"middle\">"
     << x_col << "</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">" << (log_y ? y_col + " (log scale)" : y_col) << "</text>\n";
  if (fit) {
    os << "<line x1=\"" << sx(x0) << "\" y1=\"" << sy(fit->slope * x0 + fit->intercept) << "\" x2=\"" << sx(x1)
       << "\" y2=\"" << sy(fit->slope * x1 + fit->intercept)
       << "\" stroke=\"firebrick\" stroke-dasharray=\"6 4\" clip-path=\"url(#frame)\"/>\n";
    os << "<text x=\"" << W - R - 6 << "\" y=\"" << T + 16 << "\" font-size=\"12\" text-anchor=\"end\">slope "
       << fmt12(fit->slope).substr(0, 8) << ", R^2 " << fmt12(fit->r_squared).substr(0, 6) << "</text>\n";
  }
  os << "<clipPath id=\"frame\"><rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
     << H - T - B << "\"/></clipPath>\n";
  for (const auto& p : pts)
    os << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"4\" "
       << (p.used ? "fill=\"steelblue\"" : "fill=\"none\" stroke=\"gray\"") << "/>\n";
  os << "</svg>\n";

  std::ofstream out(out_svg);
  if (!out) throw DomainError("cannot write '" + out_svg + "'");
  out << os.str();
  return fit;
}

}  // namespace robin_gap
