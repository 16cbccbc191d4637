#pragma once

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>

#include "plurigreen/apps/ray.hpp"
#include "plurigreen/apps/torus.hpp"
#include "plurigreen/blowup/blowup.hpp"
#include "plurigreen/hcma/uniqueness.hpp"
#include "plurigreen/io/config.hpp"
#include "plurigreen/io/output.hpp"
#include "plurigreen/io/verify.hpp"
#include "plurigreen/measure/ma_measure.hpp"

namespace plurigreen {

enum ExitCode : int { exit_ok = 0, exit_solver = 1, exit_config = 2 };

/// Closed-form Green function for the oracle cases, or nullopt.
template <int N>
std::optional<std::function<double(const CVector<N>&)>> green_oracle(const GreenConfig& g)
{
  if (g.oracle == Oracle::mobius && N == 1) {
    return [g](const CVector<N>& z) {
      double s = 0.0;
      for (const auto& p : g.poles) {
        const cplx a = p.center[0];
        s += p.epsilon * std::log(std::norm((z(0) - a) / (1.0 - std::conj(a) * z(0))));
      }
      return s;
    };
  }
  if (g.oracle == Oracle::radial && N == 2) {
    const double eps = g.poles.front().epsilon;
    return [eps](const CVector<N>& z) { return eps * std::log(z.squaredNorm()); };
  }
  return std::nullopt;
}

/// Green problem ready to solve: defaults resolved and feasibility checked.
/// Throws ValidationError (config fault) before anything touches the disk.
template <int N>
GreenProblem<N> prepare_green(const GreenConfig& g)
{
  GreenProblem<N> P = make_green_problem<N>(g);
  try {
    if (g.background.augmentation < 0.0 && !P.singularities.poles.empty())
      P.background.augmentation = auto_augmentation<N>(P.singularities, P.background, P.effective_delta());
    P.validate();
  } catch (const InfeasibleBackground& e) {
    throw ValidationError("problem.background", e.what());
  } catch (const InfeasibleProblem& e) {
    throw ValidationError("problem", e.what());
  }
  return P;
}

template <int N>
TorusProblem<N> make_torus_problem(const TorusConfig& c)
{
  TorusProblem<N> P;
  P.domain = DomainSpec{DomainKind::torus, N, {}, c.periods, c.resolution};
  if (c.density == "cosine") {
    const double a = c.amplitude;
    const double L = P.domain.period(0);
    P.density = [a, L](const CVector<N>& z) { return 1.0 + a * std::cos(2.0 * M_PI * z(0).real() / L); };
  }
  for (int k = 0; k < N; ++k) P.pole(k) = c.pole[static_cast<std::size_t>(k)];
  P.epsilon = c.epsilon;
  P.sigma = c.sigma;
  P.solver = c.solver;
  const auto v = P.violations();
  if (!v.empty()) throw ValidationError("problem", v.front());
  return P;
}

namespace detail {

struct RunContext {
  OutputDir& dir;
  Report& report;
  spdlog::logger& log;

  template <class F>
  auto timed(const std::string& stage, F&& f)
  {
    const auto t0 = std::chrono::steady_clock::now();
    log.info("stage {} started", stage);
    auto out = f();
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    dir.stage(stage, s);
    log.info("stage {} finished in {:.3f} s", stage, s);
    return out;
  }
};

template <int N>
void emit_green(RunContext& cx, const GreenConfig& g, const GreenProblem<N>& P, const SolveReport<N>& r)
{
  cx.dir.write("green.csv", grid_table<N>(r.green, "G").text());
  cx.dir.write("phi.csv", grid_table<N>(r.phi, "phi").text());
  cx.report.set("backend", to_string(r.backend));
  cx.report.set("converged", r.converged);
  cx.report.set("iterations", r.iterations);
  cx.report.set("residual_max", r.residual_max);
  cx.report.set("psh_defect", r.psh_defect);
  cx.report.set("augmentation", P.background.augmentation);
  cx.report.set("excision_radius", P.effective_excision());
  if (r.backend == Backend::regularized) {
    cx.report.set("t_final", r.t_final);
    cx.report.set("c2", r.c2);
    double c1_max = 0.0;
    for (const auto& [t, c] : r.c1_trace) c1_max = std::max(c1_max, c);
    if (!r.c1_trace.empty()) cx.report.set("c1_ratio", c1_max / r.c1_trace.front().second);
  }
  if (!r.converged) return;
  if (const auto oracle = green_oracle<N>(g)) {
    double err = 0.0;
    for (std::size_t i = 0; i < r.green.size(); ++i) {
      if (r.green.mask[i] != NodeTag::interior) continue;
      const auto z = r.green.z(i);
      bool keep = true;
      for (const auto& p : P.singularities.poles) keep = keep && (z - p.center).norm() >= 0.05;
      if (keep) err = std::max(err, std::abs(r.green.values[i] - (*oracle)(z)));
    }
    cx.report.set("oracle", to_string(g.oracle));
    cx.report.set("oracle_sup_error", err);
  }
  const auto rho = cx.timed("density", [&] { return ma_density<N>(r.green); });
  cx.dir.write("density.csv", grid_table<N>(rho, "density").text());
  nlohmann::json lelong = nlohmann::json::array();
  for (std::size_t m = 0; m < P.singularities.poles.size(); ++m) {
    const auto& p = P.singularities.poles[m];
    try {
      const auto e = lelong_number<N>(r.green, p.center, p.cutoff.r_in, P.effective_excision());
      lelong.push_back({{"pole", m}, {"nu", e.slope}, {"fit_residual", e.fit_residual}, {"radii", e.radii.size()}});
    } catch (const InsufficientRadii& e) {
      cx.log.warn("pole {}: {}", m, e.what());
      lelong.push_back({{"pole", m}, {"nu", nullptr}, {"note", e.what()}});
    }
  }
  cx.report.set("lelong", lelong);
  try {
    std::vector<CVector<N>> centers;
    std::vector<double> radii;
    for (const auto& p : P.singularities.poles) {
      centers.push_back(p.center);
      radii.push_back(p.cutoff.r_in);
    }
    const auto L = cx.timed("mass", [&] { return mass_ledger<N>(r.green, centers, radii); });
    cx.report.set("mass_total", L.total_mass);
    cx.report.set("mass_ac", L.ac_mass);
    nlohmann::json pm = nlohmann::json::array();
    for (const auto& [i, m] : L.pole_masses) pm.push_back(m);
    cx.report.set("mass_poles", pm);
  } catch (const Error& e) {
    cx.log.warn("mass ledger skipped: {}", e.what());
    cx.report.set("mass_note", std::string(e.what()));
  }
}

template <int N>
int run_green(RunContext& cx, const GreenConfig& g, const GreenProblem<N>& P)
{
  try {
    const auto r = cx.timed("solve", [&] { return g.backend == Backend::envelope ? solve_envelope<N>(P) : solve_regularized<N>(P); });
    emit_green<N>(cx, g, P, r);
    return exit_ok;
  } catch (const NonConvergence<N>& e) {
    cx.log.error("{}", e.what());
    cx.report.set("error", std::string(e.what()));
    emit_green<N>(cx, g, P, e.partial());
    return exit_solver;
  }
}

template <int N>
int run_torus(RunContext& cx, const TorusProblem<N>& P)
{
  const auto R = cx.timed("solve", [&] { return solve_torus<N>(P); });
  cx.dir.write("phi.csv", grid_table<N>(R.phi, "phi").text());
  cx.dir.write("density.csv", grid_table<N>(R.rhs, "density").text());
  cx.report.set("sigma", P.effective_sigma());
  cx.report.set("compatibility", R.compatibility);
  cx.report.set("mass_total", R.ledger.total_mass);
  cx.report.set("mass_pole", R.ledger.pole_masses.front().second);
  cx.report.set("mass_ac", R.ledger.ac_mass);
  cx.report.set("lelong_slope", R.lelong.slope);
  cx.report.set("lelong_normalized", R.lelong_normalized);
  if constexpr (N == 2) {
    cx.report.set("gauge_shift", R.gauge_shift);
    cx.report.set("iterations", R.iterations);
  }
  return exit_ok;
}

inline int run_ray(RunContext& cx, const RayProblem& P)
{
  const auto R = cx.timed("solve", [&] { return solve_ray(P); });
  CsvTable grid{{"s", "t", "Phi"}, {}};
  for (int i = 0; i < R.ns; ++i)
    for (int j = 0; j < R.nt; ++j) grid.rows.push_back({R.s(i), R.t(j), R.at(i, j)});
  cx.dir.write("ray.csv", grid.text());
  CsvTable slices{{"t", "s", "phi"}, {}};
  for (std::size_t k = 0; k < R.slices.size(); ++k)
    for (int i = 0; i < R.ns; ++i) slices.rows.push_back({R.slice_times[k], R.s(i), R.slices[k][static_cast<std::size_t>(i)]});
  cx.dir.write("slices.csv", slices.text());
  cx.report.set("sweeps", R.sweeps);
  cx.report.set("converged", R.converged);
  cx.report.set("nontriviality", ray_nontriviality(R.slices));
  const auto g = geodesic_residual(R, {-0.5 * P.s_extent, -0.5}, {-0.5 * P.depth, -0.5});
  cx.report.set("geodesic_residual_mean", g.mean_abs);
  cx.report.set("geodesic_residual_max", g.max_abs);
  cx.report.set("geodesic_samples", g.samples);
  cx.report.set("convexity_defect", midpoint_convexity_defect(R));
  return exit_ok;
}

inline int run_blowup(RunContext& cx, const BlowupConfig& c)
{
  ExceptionalMetric<2> g;
  g.cutoff = CutoffProfile{c.r_in, c.r_out};
  const SampleBox K{c.samples.zeta_radius, c.samples.theta_radius, c.samples.per_axis};
  const auto T = cx.timed("threshold", [&] { return positivity_threshold<2>(g, flat_form<2>(), K); });
  cx.report.set("epsilon_K", T.epsilon_K);
  cx.report.set("witness_min", T.witness_min);
  cx.report.set("samples", T.samples);
  cx.report.set("on_E_samples", T.on_E_samples);
  cx.report.set("d_block_min", T.d_block_min);
  cx.report.set("d_block_deviation", T.d_block_deviation);
  if (c.second_stage) {
    SecondStage s;
    s.center << c.second_stage->center[0], c.second_stage->center[1];
    s.cutoff = CutoffProfile{c.second_stage->r_in, c.second_stage->r_out};
    s.samples = SampleBox{c.second_stage->samples.zeta_radius, c.second_stage->samples.theta_radius, c.second_stage->samples.per_axis};
    const IteratedBlowup B(g, K, s);
    const auto I = cx.timed("iterated", [&] { return B.certify(); });
    cx.report.set("n1", I.n1);
    cx.report.set("n2", I.n2);
    cx.report.set("epsilon_combined", I.epsilon2);
    cx.report.set("combined_min", I.combined_min);
  }
  return exit_ok;
}

inline int run_verify(RunContext& cx, const std::string& suite, std::uint64_t seed, std::ostream& out)
{
  const auto rows = cx.timed("suite", [&] { return run_suite(suite, seed); });
  const std::string table = format_table(rows);
  out << table;
  cx.dir.write("verify.txt", table);
  std::size_t passed = 0;
  for (const auto& r : rows) passed += r.pass ? 1 : 0;
  cx.report.set("suite", suite);
  cx.report.set("checks", rows.size());
  cx.report.set("passed", passed);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"check", r.name}, {"measured", r.measured}, {"expected", r.expected}, {"tolerance", r.tolerance}, {"pass", r.pass}});
  cx.report.set("rows", j);
  return passed == rows.size() ? exit_ok : exit_solver;
}

}  // namespace detail

/// Executes a validated configuration. Exit 0 on success, 1 on solver failure (partial
/// outputs and manifest written), 2 on configuration faults (nothing written).
inline int run(const RunConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
  // everything that can reject the configuration happens before the directory exists
  std::optional<GreenProblem<1>> g1;
  std::optional<GreenProblem<2>> g2;
  std::optional<TorusProblem<1>> t1;
  std::optional<TorusProblem<2>> t2;
  std::optional<RayProblem> ray;
  try {
    switch (c.command) {
      case Command::green:
        if (c.green.dimension == 1)
          g1 = prepare_green<1>(c.green);
        else
          g2 = prepare_green<2>(c.green);
        break;
      case Command::torus:
        if (c.torus.dimension == 1)
          t1 = make_torus_problem<1>(c.torus);
        else
          t2 = make_torus_problem<2>(c.torus);
        break;
      case Command::ray: ray = make_ray_problem(c.ray); break;
      case Command::blowup: break;
      case Command::verify:
        if (std::find(known_suites().begin(), known_suites().end(), c.suite) == known_suites().end()) throw UnknownSuite(c.suite);
        break;
    }
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  }

  OutputDir dir(c.output);
  const std::string log_name = "run.log";
  auto sink = std::make_shared<spdlog::sinks::basic_file_sink_mt>((dir.path() / log_name).string(), true);
  spdlog::logger log("plurigreen", sink);
  log.set_pattern("[%l] %v");
  log.flush_on(spdlog::level::info);
  dir.adopt(log_name);
  Report report;
  report.set("command", to_string(c.command));
  report.set("seed", c.seed);
  detail::RunContext cx{dir, report, log};
  log.info("{} run, output {}", to_string(c.command), c.output);

  int code = exit_ok;
  try {
    switch (c.command) {
      case Command::green: code = g1 ? detail::run_green<1>(cx, c.green, *g1) : detail::run_green<2>(cx, c.green, *g2); break;
      case Command::torus: code = t1 ? detail::run_torus<1>(cx, *t1) : detail::run_torus<2>(cx, *t2); break;
      case Command::ray: code = detail::run_ray(cx, *ray); break;
      case Command::blowup: code = detail::run_blowup(cx, c.blowup); break;
      case Command::verify: code = detail::run_verify(cx, c.suite, c.seed, out); break;
    }
  } catch (const Error& e) {
    log.error("{}", e.what());
    err << "error: " << e.what() << "\n";
    report.set("error", std::string(e.what()));
    code = exit_solver;
  }
  report.set("exit_code", code);
  dir.write("report.txt", report.text());
  log.info("exit {}", code);
  log.flush();
  dir.write_manifest(nlohmann::json::parse(serialize_config(c)), code == exit_ok ? "ok" : "failed");
  return code;
}

}  // namespace plurigreen
