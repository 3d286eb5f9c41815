// robin-gap: command-line front end for the solvers and the sweep studies.
// Exit status: 0 success, 2 when a study produced only unresolved rows, 1 on errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robin_gap/experiments.hpp"

using namespace robin_gap;

namespace {

constexpr int kUnresolved = 2;

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write '" + path + "'");
  out << text;
}

void print_spectrum(const SpectrumResult& r) {
  std::printf("theta            %s\n", fmt12(r.theta).c_str());
  std::printf("alpha            %s\n", fmt12(r.alpha).c_str());
  std::printf("h                %s\n", fmt12(r.h).c_str());
  for (std::size_t j = 0; j < r.eigenvalues.size(); ++j)
    std::printf("lambda%-2zu         %s  (%s)\n", j + 1, fmt12(r.eigenvalues[j]).c_str(), parity_name(r.parities[j]));
  std::printf("gap              %s\n", fmt12(r.gap).c_str());
  std::printf("parity_of_second %s\n", parity_name(r.parity_of_second));
  std::printf("dofs             %zu\n", r.dofs);
  std::printf("method           %s\n", r.method.c_str());
  std::printf("max_residual     %s\n", fmt12(r.max_residual).c_str());
}

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& sets) {
  std::map<std::string, std::string> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw DomainError("--set expects key=value, got '" + s + "'");
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

int run_study(const SweepConfig& cfg) {
  const std::string csv = cfg.output_prefix + ".csv";
  const std::string svg = cfg.output_prefix + ".svg";
  switch (cfg.study) {
    case Study::GapDecay: {
      const GapDecayResult r = run_gap_decay(cfg);
      write_text(csv, r.csv());
      std::cout << r.csv();
      if (r.resolved_count() > 0) emit_plot(csv, "inv_theta", "gap", true, svg);
      return r.resolved_count() == 0 ? kUnresolved : 0;
    }
    case Study::SchrodingerConvergence: {
      const SchrodingerConvergenceResult r = run_schrodinger_convergence(cfg);
      write_text(csv, r.csv());
      std::cout << r.csv();
      emit_plot(csv, "R", "abs_err", true, svg);
      return 0;
    }
    case Study::ConjectureCompare: {
      const ConjectureReport r = run_conjecture_compare(cfg);
      write_text(csv, r.csv());
      std::cout << r.csv();
      const bool any = std::any_of(r.rows.begin(), r.rows.end(), [](const GapRow& g) { return g.resolved; });
      if (any) emit_plot(csv, "theta", "gap", true, svg, false);
      return any ? 0 : kUnresolved;
    }
    case Study::TruncationContinuity: {
      const TruncationResult r = run_truncation_continuity(cfg);
      write_text(csv, r.csv());
      std::cout << r.csv();
      emit_plot(csv, "eps", "lambda1", false, svg, false);
      return 0;
    }
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robin Laplacian spectral gaps on double cones, with the supporting analytic solvers"};
  app.require_subcommand(1);
  int status = 0;

  // hypergeom
  auto* hyp = app.add_subcommand("hypergeom", "Kummer M(a, b; rho)");
  std::string ha, hb, hrho;
  hyp->add_option("--a", ha, "a")->required();
  hyp->add_option("--b", hb, "b")->required();
  hyp->add_option("--rho", hrho, "rho >= 0")->required();
  hyp->callback([&] {
    const KummerEvaluation e = kummer_m_evaluate(parse_real(ha), parse_real(hb), parse_real(hrho));
    std::printf("sign     %d\nlog_mag  %s\n", e.value.sign, fmt12(e.value.log_mag).c_str());
    if (e.value.sign == 0 || std::fabs(e.value.log_mag) < 700.0)
      std::printf("value    %s\n", fmt12(e.value.sign == 0 ? 0.0 : e.value.to_double()).c_str());
    std::printf("terms    %zu\n", e.terms);
  });

  // schrodinger
  auto* sch = app.add_subcommand("schrodinger", "Radial ground state of -Delta - kappa/r on a ball");
  sch->require_subcommand(1);
  std::string sR = "10", skappa = "1", sgamma = "inf", sRlist = "8..24", scsv;
  int sn = 3;
  bool sshoot = false;
  auto* ssolve = sch->add_subcommand("solve", "Ground state for one radius");
  ssolve->add_option("--R", sR, "ball radius");
  ssolve->add_option("--kappa", skappa, "Coulomb strength");
  ssolve->add_option("--gamma", sgamma, "Robin parameter, inf for Dirichlet");
  ssolve->add_option("--n", sn, "dimension");
  ssolve->add_flag("--shoot", sshoot, "also run the shooting oracle");
  ssolve->callback([&] {
    const BallProblem p(parse_real(sR), parse_real(skappa), parse_real(sgamma), sn);
    const ModeSolution s = ground_state_z(p);
    std::printf("z          %s\nE          %s\nE_limit    %s\nabs_err    %s\nresidual   %s\n", fmt12(s.z).c_str(),
                fmt12(s.E).c_str(), fmt12(p.limit_energy()).c_str(), fmt12(s.limit_deviation(p.kappa(), p.m())).c_str(),
                fmt12(s.residual).c_str());
    if (sshoot) std::printf("E_shooting %s\n", fmt12(shooting_ground_state(p)).c_str());
  });
  auto* ssweep = sch->add_subcommand("sweep", "Convergence of E(R) to the whole-space limit");
  ssweep->add_option("--R-list", sRlist, "radii, e.g. 8..24 or 8,12,16");
  ssweep->add_option("--kappa", skappa, "Coulomb strength");
  ssweep->add_option("--gamma", sgamma, "Robin parameter, inf for Dirichlet");
  ssweep->add_option("--n", sn, "dimension");
  ssweep->add_option("--csv", scsv, "write the CSV here");
  ssweep->callback([&] {
    SweepConfig c;
    c.study = Study::SchrodingerConvergence;
    c.R_list = parse_real_list(sRlist);
    c.kappa = parse_real(skappa);
    c.gamma = parse_real(sgamma);
    c.n = sn;
    const std::string text = run_schrodinger_convergence(c).csv();
    if (!scsv.empty()) write_text(scsv, text);
    std::cout << text;
  });

  // cone
  auto* cone = app.add_subcommand("cone", "Closed-form infinite-cone quantities");
  cone->require_subcommand(1);
  std::string ctheta = "pi/3", calpha = "-2", ceps = "0.3";
  int cn = 2;
  auto* cground = cone->add_subcommand("ground", "Robin ground state of the infinite cone");
  auto* ctrial = cone->add_subcommand("trial-bound", "Cutoff trial quotient bounding lambda_2 of the double cone");
  for (auto* sc : {cground, ctrial}) {
    sc->add_option("--theta", ctheta, "opening angle");
    sc->add_option("--alpha", calpha, "Robin parameter (< 0)");
    sc->add_option("--n", cn, "dimension");
  }
  ctrial->add_option("--eps", ceps, "cutoff width in (0, 1)");
  cground->callback([&] {
    const ConeParams cp{parse_real(ctheta), parse_real(calpha), cn};
    std::printf("lambda1_cone   %s\nnormalization  %s\nenvelope       %s\n", fmt12(cone_ground_energy(cp)).c_str(),
                fmt12(cone_normalization(cp)).c_str(), fmt12(gap_envelope(cp.alpha, 0.0, cp.theta)).c_str());
  });
  ctrial->callback([&] {
    const ConeParams cp{parse_real(ctheta), parse_real(calpha), cn};
    const TrialBoundReport r = trial_upper_bound(cp, parse_real(ceps));
    std::printf("lambda1_cone         %s\nquotient             %s\nlocalization_excess  %s\ntail_mass            %s\n",
                fmt12(r.lambda1_cone).c_str(), fmt12(r.quotient).c_str(), fmt12(r.localization_excess).c_str(),
                fmt12(r.tail_mass).c_str());
  });

  // gap
  auto* gap = app.add_subcommand("gap", "Finite-element Robin spectrum of the double cone");
  gap->require_subcommand(1);
  std::string gtheta = "pi/3", galpha = "-2", gh = "0.04", gmesh, gcsv;
  int gk = 2, glevels = 1;
  bool ghalf = false, ggraded = false;
  auto* gsolve = gap->add_subcommand("solve", "Lowest eigenvalues and the gap");
  gsolve->set_help_flag("--help", "Print this help message and exit");  // -h is the mesh size
  gsolve->add_option("--theta", gtheta, "opening angle in (0, pi)");
  gsolve->add_option("--alpha", galpha, "Robin parameter");
  gsolve->add_option("--h", gh, "target mesh size");
  gsolve->add_option("--k", gk, "number of eigenvalues (>= 2)");
  gsolve->add_flag("--half-domain", ghalf, "solve even and odd classes on the half domain");
  gsolve->add_flag("--graded", ggraded, "grade the mesh toward (+-1, 0)");
  gsolve->add_option("--levels", glevels, "nested refinements for Richardson extrapolation (1 = none)");
  gsolve->add_option("--mesh-out", gmesh, "write the (finest, full-domain) mesh here");
  gsolve->add_option("--csv", gcsv, "append a CSV row theta,alpha,h,lambda1,lambda2,gap,parity to this file");
  gsolve->callback([&] {
    const double theta = parse_real(gtheta), alpha = parse_real(galpha), h = parse_real(gh);
    SpectrumOptions o;
    o.k = gk;
    o.half_domain = ghalf;
    o.graded = ggraded;
    SpectrumResult r;
    if (glevels <= 1) {
      r = robin_spectrum(theta, alpha, h, gk, ghalf, o);
      print_spectrum(r);
    } else {
      const ExtrapolatedSpectrum e = robin_spectrum_extrapolated(theta, alpha, h, gk, ghalf, glevels, o);
      r = e.levels.back();
      r.eigenvalues = e.eigenvalues;
      r.parities = e.parities;
      r.gap = e.gap;
      r.parity_of_second = e.parity_of_second;
      print_spectrum(r);
      std::printf("levels           %zu\n", e.levels.size());
      std::printf("eig_error        %s\n", fmt12(e.discretization_error()).c_str());
      std::printf("gap_error        %s\n", fmt12(e.gap_error).c_str());
    }
    if (!gmesh.empty()) {
      TriMesh half = half_domain_mesh(build_double_cone(theta), h, o);
      for (int l = 1; l < glevels; ++l) half = refine_uniform(half);
      const std::filesystem::path p(gmesh);
      if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
      write_mesh(mirror_x(half).mesh, gmesh);
    }
    if (!gcsv.empty()) {
      const bool fresh = !std::filesystem::exists(gcsv);
      std::ofstream out(gcsv, std::ios::app);
      if (!out) throw DomainError("cannot write '" + gcsv + "'");
      if (fresh) out << "theta,alpha,h,lambda1,lambda2,gap,parity\n";
      out << fmt12(theta) << ',' << fmt12(alpha) << ',' << fmt12(r.h) << ',' << fmt12(r.eigenvalues[0]) << ','
          << fmt12(r.eigenvalues[1]) << ',' << fmt12(r.gap) << ',' << parity_name(r.parity_of_second) << '\n';
    }
  });
  auto* ginterval = gap->add_subcommand("interval", "Two lowest Robin eigenvalues of an interval");
  std::string glength = "2";
  ginterval->add_option("--length", glength, "interval length");
  ginterval->add_option("--alpha", galpha, "Robin parameter");
  ginterval->callback([&] {
    const auto [l1, l2] = interval_spectrum(parse_real(glength), parse_real(galpha));
    std::printf("lambda1  %s\nlambda2  %s\ngap      %s\n", fmt12(l1).c_str(), fmt12(l2).c_str(), fmt12(l2 - l1).c_str());
  });

  // study
  auto* study = app.add_subcommand("study", "Run a sweep from a key = value config file");
  std::string config, out_prefix;
  std::vector<std::string> sets;
  study->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  study->add_option("--out-prefix", out_prefix, "output prefix (overrides output_prefix)");
  study->add_option("--set", sets, "override a config key: --set key=value (repeatable)");
  study->callback([&] {
    auto overrides = parse_overrides(sets);
    if (!out_prefix.empty()) overrides["output_prefix"] = out_prefix;
    status = run_study(load_config(config, overrides));
  });

  // plot
  auto* plot = app.add_subcommand("plot", "SVG plot of two CSV columns");
  std::string pcsv, px, py, pout;
  bool plog = false, pnofit = false;
  plot->add_option("--csv", pcsv, "input CSV")->required();
  plot->add_option("--x", px, "x column")->required();
  plot->add_option("--y", py, "y column")->required();
  plot->add_flag("--log-y", plog, "logarithmic y axis");
  plot->add_flag("--no-fit", pnofit, "omit the fitted line");
  plot->add_option("--out", pout, "output SVG")->required();
  plot->callback([&] {
    const auto fit = emit_plot(pcsv, px, py, plog, pout, !pnofit);
    if (fit) std::printf("slope %s intercept %s r_squared %s points %zu\n", fmt12(fit->slope).c_str(),
                         fmt12(fit->intercept).c_str(), fmt12(fit->r_squared).c_str(), fit->points_used);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "robin-gap: %s\n", e.what());
    return 1;
  }
  return status;
}
