#pragma once

#include <nlohmann/json.hpp>

#include <complex>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "plurigreen/apps/ray.hpp"
#include "plurigreen/core/errors.hpp"
#include "plurigreen/hcma/problem.hpp"

namespace plurigreen {

inline constexpr const char* config_format = "plurigreen/1";

struct Violation {
  std::string field;
  std::string constraint;
  bool operator==(const Violation&) const = default;
};

/// Every violated field of a configuration, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> v) : Error(summary(v)), violations_(std::move(v)) {}
  ValidationError(const std::string& field, const std::string& constraint)
      : ValidationError(std::vector<Violation>{{field, constraint}})
  {}
  const std::vector<Violation>& violations() const { return violations_; }
  const std::string& field() const { return violations_.front().field; }
  const std::string& constraint() const { return violations_.front().constraint; }

 private:
  static std::string summary(const std::vector<Violation>& v)
  {
    std::string s = "invalid config:";
    for (const auto& x : v) s += " [" + x.field + ": " + x.constraint + "]";
    return s;
  }
  std::vector<Violation> violations_;
};

class UnknownSuite : public Error {
 public:
  explicit UnknownSuite(const std::string& name) : Error("unknown suite: " + name) {}
};

enum class Command { green, torus, ray, blowup, verify };

inline std::string to_string(Command c)
{
  switch (c) {
    case Command::green: return "green";
    case Command::torus: return "torus";
    case Command::ray: return "ray";
    case Command::blowup: return "blowup";
    case Command::verify: return "verify";
  }
  return "?";
}

inline const std::vector<std::string>& known_suites()
{
  static const std::vector<std::string> s{"oracles-1d", "oracles-2d", "lemmas", "torus", "ray"};
  return s;
}

struct PoleConfig {
  std::vector<cplx> center;       ///< one entry per complex dimension
  std::vector<std::string> f;     ///< polynomials in local coordinates
  double epsilon = 0.5;
  double r_in = 0.1;
  double r_out = 0.2;
  bool operator==(const PoleConfig&) const = default;
};

enum class Oracle { none, mobius, radial };

inline std::string to_string(Oracle o) { return o == Oracle::none ? "none" : o == Oracle::mobius ? "mobius" : "radial"; }

struct GreenConfig {
  int dimension = 1;
  DomainSpec domain;
  BackgroundSpec background{BaseForm::zero, -1.0, 1.0};  ///< augmentation -1: least feasible power of two
  std::vector<PoleConfig> poles;
  Backend backend = Backend::envelope;
  double delta = -1.0;
  double excision_radius = -1.0;
  SolverOptions solver;
  Oracle oracle = Oracle::none;
  bool operator==(const GreenConfig&) const = default;
};

struct TorusConfig {
  int dimension = 1;
  std::vector<double> periods{1.0};
  int resolution = 64;
  std::string density = "uniform";  ///< uniform | cosine: 1 + a cos(2π x₁/L)
  double amplitude = 0.0;
  std::vector<cplx> pole{cplx(0.0)};
  double epsilon = 0.3;
  double sigma = -1.0;
  SolverOptions solver;
  bool operator==(const TorusConfig&) const = default;
};

struct RayPoleConfig {
  bool at_infinity = false;
  std::vector<std::string> f{"z", "w"};
  double epsilon = 0.2;
  double r_in = 0.5;
  double r_out = 0.9;
  bool operator==(const RayPoleConfig&) const = default;
};

struct RayConfig {
  double depth = 4.0;
  double s_extent = 8.0;
  int resolution = 8;
  int width = 3;
  int slices = 5;
  double tol = 1e-11;
  int max_sweeps = 200000;
  std::vector<RayPoleConfig> poles;
  bool operator==(const RayConfig&) const = default;
};

struct SampleConfig {
  double zeta_radius = 1.0;
  double theta_radius = 2.0;
  int per_axis = 33;
  bool operator==(const SampleConfig&) const = default;
};

struct SecondStageConfig {
  std::vector<cplx> center{cplx(0.0), cplx(0.0)};
  double r_in = 0.25;
  double r_out = 0.5;
  SampleConfig samples{0.5, 2.0, 17};
  bool operator==(const SecondStageConfig&) const = default;
};

struct BlowupConfig {
  double r_in = 0.5;
  double r_out = 1.0;
  SampleConfig samples;
  std::optional<SecondStageConfig> second_stage;
  bool operator==(const BlowupConfig&) const = default;
};

struct RunConfig {
  Command command = Command::green;
  std::string output = "out";
  std::uint64_t seed = 0;
  GreenConfig green;
  TorusConfig torus;
  RayConfig ray;
  BlowupConfig blowup;
  std::string suite;
  bool operator==(const RunConfig&) const = default;
};

namespace detail {

using nlohmann::json;

/// Strict reader over one JSON object: typed getters with defaults, range checks,
/// and an unknown-key report at the end. Violations accumulate in a shared list.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<Violation>& out) : j_(j), path_(std::move(path)), out_(out)
  {
    if (!j_.is_object()) fail("", "must be an object");
  }

  ~ObjectReader() = default;

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& key, const std::string& what) const { out_.push_back({key.empty() ? path_ : field(key), what}); }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  const json* raw(const std::string& key)
  {
    seen_.insert(key);
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& dst)
  {
    const json* v = raw(key);
    if (!v) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) return fail(key, "must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) return fail(key, "must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v->is_number_integer() && !v->is_number_unsigned()) return fail(key, "must be >= 0");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) return fail(key, "must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v->is_string()) return fail(key, "must be a string");
    }
    dst = v->get<T>();
  }

  void get_complex(const std::string& key, cplx& dst, const json& v)
  {
    if (v.is_number()) {
      dst = cplx(v.get<double>(), 0.0);
      return;
    }
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      return fail(key, "complex numbers are [re, im] or a real number");
    dst = cplx(v[0].get<double>(), v[1].get<double>());
  }

  void get_complex_list(const std::string& key, std::vector<cplx>& dst, std::size_t n)
  {
    const json* v = raw(key);
    if (!v) return;
    if (!v->is_array() || v->size() != n) return fail(key, "must list " + std::to_string(n) + " complex coordinates");
    dst.assign(n, cplx(0.0));
    for (std::size_t i = 0; i < n; ++i) get_complex(key, dst[i], (*v)[i]);
  }

  void get_doubles(const std::string& key, std::vector<double>& dst)
  {
    const json* v = raw(key);
    if (!v) return;
    if (!v->is_array()) return fail(key, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : *v) {
      if (!x.is_number()) return fail(key, "must be an array of numbers");
      out.push_back(x.get<double>());
    }
    dst = std::move(out);
  }

  void get_strings(const std::string& key, std::vector<std::string>& dst)
  {
    const json* v = raw(key);
    if (!v) return;
    if (!v->is_array()) return fail(key, "must be an array of strings");
    std::vector<std::string> out;
    for (const auto& x : *v) {
      if (!x.is_string()) return fail(key, "must be an array of strings");
      out.push_back(x.get<std::string>());
    }
    dst = std::move(out);
  }

  void require(const std::string& key)
  {
    if (!has(key)) fail(key, "is required");
  }

  template <class T, class Pred>
  void check(const std::string& key, const T& value, Pred ok, const std::string& what)
  {
    if (!ok(value)) fail(key, what);
  }

  /// Reports keys never requested.
  void finish() const
  {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) out_.push_back({field(k), "unknown key"});
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<Violation>& out_;
  std::set<std::string> seen_;
};

inline json complex_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

inline json complex_list_json(const std::vector<cplx>& v)
{
  json a = json::array();
  for (const auto& z : v) a.push_back(complex_json(z));
  return a;
}

inline bool positive(double x) { return x > 0.0 && std::isfinite(x); }

inline void read_solver(ObjectReader& parent, const std::string& key, SolverOptions& s, std::vector<Violation>& out)
{
  const json* v = parent.raw(key);
  if (!v) return;
  ObjectReader r(*v, parent.field(key), out);
  std::string stencil = to_string(s.stencil);
  r.get("stencil", stencil);
  if (stencil == "lattice")
    s.stencil = StencilKind::lattice;
  else if (stencil == "interpolated")
    s.stencil = StencilKind::interpolated;
  else
    r.fail("stencil", "must be lattice or interpolated");
  r.get("lattice_width", s.lattice_width);
  r.check("lattice_width", s.lattice_width, [](int w) { return w >= 1 && w <= 4; }, "must lie in [1, 4]");
  r.get("tol_fix", s.tol_fix);
  r.check("tol_fix", s.tol_fix, positive, "must be > 0");
  r.get("max_sweeps", s.max_sweeps);
  r.check("max_sweeps", s.max_sweeps, [](int n) { return n >= 1; }, "must be >= 1");
  r.get("directions", s.directions);
  r.check("directions", s.directions, [](int n) { return n >= 0; }, "must be >= 0");
  r.get("circle_samples", s.circle_samples);
  r.check("circle_samples", s.circle_samples, [](int n) { return n >= 3; }, "must be >= 3");
  r.get("relaxation", s.relaxation);
  r.check("relaxation", s.relaxation, [](double w) { return w == 0.0 || (w >= 1.0 && w < 2.0); }, "must be 0 or in [1, 2)");
  r.get("rescan_interval", s.rescan_interval);
  r.check("rescan_interval", s.rescan_interval, [](int n) { return n >= 1; }, "must be >= 1");
  r.get("t0", s.t0);
  r.get("t_ratio", s.t_ratio);
  r.get("t_min", s.t_min);
  if (!(s.t_min >= 1e-4 && s.t_min <= s.t0 && s.t0 <= 1.0)) r.fail("t_min", "need 1e-4 <= t_min <= t0 <= 1");
  r.check("t_ratio", s.t_ratio, [](double q) { return q > 0.0 && q < 1.0; }, "must lie in (0, 1)");
  r.get("newton_max_iterations", s.newton_max_iterations);
  r.check("newton_max_iterations", s.newton_max_iterations, [](int n) { return n >= 1; }, "must be >= 1");
  r.get("newton_tol", s.newton_tol);
  r.check("newton_tol", s.newton_tol, positive, "must be > 0");
  r.get("max_halvings", s.max_halvings);
  r.check("max_halvings", s.max_halvings, [](int n) { return n >= 0; }, "must be >= 0");
  r.get("extrapolate", s.extrapolate);
  r.get("threads", s.threads);
  r.check("threads", s.threads, [](int n) { return n >= 0; }, "must be >= 0");
  r.finish();
}

inline json solver_json(const SolverOptions& s)
{
  return json{{"stencil", to_string(s.stencil)},
              {"lattice_width", s.lattice_width},
              {"tol_fix", s.tol_fix},
              {"max_sweeps", s.max_sweeps},
              {"directions", s.directions},
              {"circle_samples", s.circle_samples},
              {"relaxation", s.relaxation},
              {"rescan_interval", s.rescan_interval},
              {"t0", s.t0},
              {"t_ratio", s.t_ratio},
              {"t_min", s.t_min},
              {"newton_max_iterations", s.newton_max_iterations},
              {"newton_tol", s.newton_tol},
              {"max_halvings", s.max_halvings},
              {"extrapolate", s.extrapolate},
              {"threads", s.threads}};
}

template <int N>
std::vector<Polynomial<N>> parse_polynomials(const std::vector<std::string>& f, const std::string& field,
                                             std::vector<Violation>& out)
{
  std::vector<Polynomial<N>> ps;
  for (std::size_t j = 0; j < f.size(); ++j) {
    try {
      ps.push_back(Polynomial<N>::parse(f[j]));
    } catch (const ParseError& e) {
      out.push_back({field + "[" + std::to_string(j) + "]", e.what()});
    }
  }
  return ps;
}

}  // namespace detail

/// Green problem in dimension N assembled from the configuration block.
template <int N>
GreenProblem<N> make_green_problem(const GreenConfig& g)
{
  GreenProblem<N> P;
  P.domain = g.domain;
  P.domain.dim = N;
  P.background = g.background;
  if (P.background.augmentation < 0.0) P.background.augmentation = 0.0;
  for (const auto& pc : g.poles) {
    Pole<N> p;
    for (int k = 0; k < N && k < static_cast<int>(pc.center.size()); ++k) p.center(k) = pc.center[static_cast<std::size_t>(k)];
    p.epsilon = pc.epsilon;
    for (const auto& s : pc.f) p.f.push_back(Polynomial<N>::parse(s));
    p.cutoff.r_in = pc.r_in;
    p.cutoff.r_out = pc.r_out;
    P.singularities.poles.push_back(std::move(p));
  }
  P.delta = g.delta;
  P.excision_radius = g.excision_radius;
  P.solver = g.solver;
  return P;
}

inline RayProblem make_ray_problem(const RayConfig& c)
{
  RayProblem P;
  P.depth = c.depth;
  P.s_extent = c.s_extent;
  P.resolution = c.resolution;
  P.width = c.width;
  P.slices = c.slices;
  P.tol = c.tol;
  P.max_sweeps = c.max_sweeps;
  for (const auto& pc : c.poles) {
    RayPole p;
    p.at_infinity = pc.at_infinity;
    for (const auto& s : pc.f) p.f.push_back(Polynomial<2>::parse(s));
    p.epsilon = pc.epsilon;
    p.cutoff.r_in = pc.r_in;
    p.cutoff.r_out = pc.r_out;
    P.poles.push_back(std::move(p));
  }
  return P;
}

namespace detail {

inline void read_green(const json& j, const std::string& path, GreenConfig& g, std::vector<Violation>& out)
{
  ObjectReader r(j, path, out);
  r.get("dimension", g.dimension);
  if (g.dimension != 1 && g.dimension != 2) {
    r.fail("dimension", "must be 1 or 2");
    g.dimension = 1;
  }
  g.domain = DomainSpec{g.dimension == 1 ? DomainKind::disk : DomainKind::ball, g.dimension, {1.0}, {}, 64};
  if (const json* d = r.raw("domain")) {
    ObjectReader dr(*d, r.field("domain"), out);
    std::string kind = to_string(g.domain.kind);
    dr.get("kind", kind);
    if (auto k = domain_kind_from_string(kind); k && *k != DomainKind::torus)
      g.domain.kind = *k;
    else
      dr.fail("kind", "must be disk, annulus, ball or polydisk");
    dr.get_doubles("radii", g.domain.radii);
    dr.get("resolution", g.domain.resolution);
    dr.finish();
    g.domain.dim = g.dimension;
    for (const auto& v : g.domain.violations()) out.push_back({r.field("domain"), v});
  }
  if (const json* b = r.raw("background")) {
    ObjectReader br(*b, r.field("background"), out);
    std::string base = to_string(g.background.base);
    br.get("base", base);
    if (auto k = base_form_from_string(base))
      g.background.base = *k;
    else
      br.fail("base", "must be flat, zero or fubini-study");
    br.get("augmentation", g.background.augmentation);
    br.check("augmentation", g.background.augmentation, [](double a) { return a == -1.0 || (a >= 0.0 && std::isfinite(a)); },
             "must be >= 0 (or -1 for automatic)");
    br.get("rho_radius", g.background.rho_radius);
    br.check("rho_radius", g.background.rho_radius, positive, "must be > 0");
    br.finish();
  }
  if (const json* ps = r.raw("poles")) {
    if (!ps->is_array())
      r.fail("poles", "must be an array");
    else
      for (std::size_t m = 0; m < ps->size(); ++m) {
        const std::string pf = r.field("poles") + "[" + std::to_string(m) + "]";
        ObjectReader pr((*ps)[m], pf, out);
        PoleConfig pc;
        pc.center.assign(static_cast<std::size_t>(g.dimension), cplx(0.0));
        pr.require("center");
        pr.get_complex_list("center", pc.center, static_cast<std::size_t>(g.dimension));
        pr.require("f");
        pr.get_strings("f", pc.f);
        if (pc.f.size() != static_cast<std::size_t>(g.dimension))
          pr.fail("f", "needs " + std::to_string(g.dimension) + " polynomials");
        pr.get("epsilon", pc.epsilon);
        pr.check("epsilon", pc.epsilon, positive, "must be > 0");
        pr.get("r_in", pc.r_in);
        pr.get("r_out", pc.r_out);
        if (!(pc.r_in > 0.0 && pc.r_out > pc.r_in)) pr.fail("r_out", "need 0 < r_in < r_out");
        if (g.dimension == 1)
          parse_polynomials<1>(pc.f, pf + ".f", out);
        else
          parse_polynomials<2>(pc.f, pf + ".f", out);
        pr.finish();
        g.poles.push_back(std::move(pc));
      }
  }
  std::string backend = to_string(g.backend);
  r.get("backend", backend);
  if (backend == "envelope")
    g.backend = Backend::envelope;
  else if (backend == "regularized")
    g.backend = Backend::regularized;
  else
    r.fail("backend", "must be envelope or regularized");
  r.get("delta", g.delta);
  r.get("excision_radius", g.excision_radius);
  read_solver(r, "solver", g.solver, out);
  std::string oracle = to_string(g.oracle);
  r.get("oracle", oracle);
  if (oracle == "none")
    g.oracle = Oracle::none;
  else if (oracle == "mobius")
    g.oracle = Oracle::mobius;
  else if (oracle == "radial")
    g.oracle = Oracle::radial;
  else
    r.fail("oracle", "must be none, mobius or radial");
  r.finish();

  if (g.oracle == Oracle::mobius && !(g.dimension == 1 && g.domain.kind == DomainKind::disk && g.domain.radii == std::vector<double>{1.0} &&
                                      g.background.base == BaseForm::zero))
    r.fail("oracle", "mobius needs the unit disk with a zero background");
  if (g.oracle == Oracle::mobius)
    for (const auto& p : g.poles)
      if (p.f != std::vector<std::string>{"z"}) r.fail("oracle", "mobius needs f = z at every pole");
  if (g.oracle == Oracle::radial &&
      !(g.dimension == 2 && g.domain.kind == DomainKind::ball && g.domain.radii == std::vector<double>{1.0} && g.poles.size() == 1 &&
        std::abs(g.poles[0].center[0]) + std::abs(g.poles[0].center[1]) == 0.0))
    r.fail("oracle", "radial needs the unit ball with one pole at the origin");

  // invariants of the assembled problem (pole balls disjoint and inside, excision)
  const bool structural_ok = [&] {
    for (const auto& v : out)
      if (v.field.rfind(path, 0) == 0) return false;
    return true;
  }();
  if (structural_ok) {
    const auto v = g.dimension == 1 ? make_green_problem<1>(g).violations() : make_green_problem<2>(g).violations();
    for (const auto& s : v) out.push_back({r.field("poles"), s});
  }
}

inline json green_json(const GreenConfig& g)
{
  json poles = json::array();
  for (const auto& p : g.poles)
    poles.push_back(json{{"center", complex_list_json(p.center)}, {"f", p.f}, {"epsilon", p.epsilon}, {"r_in", p.r_in}, {"r_out", p.r_out}});
  return json{{"dimension", g.dimension},
              {"domain", {{"kind", to_string(g.domain.kind)}, {"radii", g.domain.radii}, {"resolution", g.domain.resolution}}},
              {"background",
               {{"base", to_string(g.background.base)}, {"augmentation", g.background.augmentation}, {"rho_radius", g.background.rho_radius}}},
              {"poles", poles},
              {"backend", to_string(g.backend)},
              {"delta", g.delta},
              {"excision_radius", g.excision_radius},
              {"solver", solver_json(g.solver)},
              {"oracle", to_string(g.oracle)}};
}

inline void read_torus(const json& j, const std::string& path, TorusConfig& t, std::vector<Violation>& out)
{
  ObjectReader r(j, path, out);
  r.get("dimension", t.dimension);
  if (t.dimension != 1 && t.dimension != 2) {
    r.fail("dimension", "must be 1 or 2");
    t.dimension = 1;
  }
  r.get_doubles("periods", t.periods);
  if (t.periods.size() != 1 && t.periods.size() != static_cast<std::size_t>(2 * t.dimension))
    r.fail("periods", "needs 1 or 2*dimension values");
  for (double p : t.periods)
    if (!positive(p)) r.fail("periods", "must be positive");
  r.get("resolution", t.resolution);
  r.check("resolution", t.resolution, [](int n) { return n >= 16; }, "must be >= 16");
  r.get("density", t.density);
  if (t.density != "uniform" && t.density != "cosine") r.fail("density", "must be uniform or cosine");
  r.get("amplitude", t.amplitude);
  r.check("amplitude", t.amplitude, [](double a) { return std::abs(a) < 1.0; }, "must satisfy |a| < 1 (positive density)");
  t.pole.assign(static_cast<std::size_t>(t.dimension), cplx(0.0));
  r.get_complex_list("pole", t.pole, static_cast<std::size_t>(t.dimension));
  r.get("epsilon", t.epsilon);
  r.check("epsilon", t.epsilon, [](double e) { return e > 0.0 && e < 1.0; }, "must lie in (0, 1)");
  r.get("sigma", t.sigma);
  r.check("sigma", t.sigma, [](double s) { return s == -1.0 || s > 0.0; }, "must be > 0 (or -1 for 4h)");
  read_solver(r, "solver", t.solver, out);
  r.finish();
}

inline json torus_json(const TorusConfig& t)
{
  return json{{"dimension", t.dimension}, {"periods", t.periods}, {"resolution", t.resolution},     {"density", t.density},
              {"amplitude", t.amplitude}, {"pole", complex_list_json(t.pole)}, {"epsilon", t.epsilon}, {"sigma", t.sigma},
              {"solver", solver_json(t.solver)}};
}

inline void read_ray(const json& j, const std::string& path, RayConfig& c, std::vector<Violation>& out)
{
  ObjectReader r(j, path, out);
  r.get("depth", c.depth);
  r.get("s_extent", c.s_extent);
  r.get("resolution", c.resolution);
  r.get("width", c.width);
  r.get("slices", c.slices);
  r.get("tol", c.tol);
  r.check("tol", c.tol, positive, "must be > 0");
  r.get("max_sweeps", c.max_sweeps);
  r.check("max_sweeps", c.max_sweeps, [](int n) { return n >= 1; }, "must be >= 1");
  if (const json* ps = r.raw("poles")) {
    if (!ps->is_array())
      r.fail("poles", "must be an array");
    else
      for (std::size_t m = 0; m < ps->size(); ++m) {
        const std::string pf = r.field("poles") + "[" + std::to_string(m) + "]";
        ObjectReader pr((*ps)[m], pf, out);
        RayPoleConfig pc;
        pr.get("at_infinity", pc.at_infinity);
        pr.get_strings("f", pc.f);
        pr.get("epsilon", pc.epsilon);
        pr.get("r_in", pc.r_in);
        pr.get("r_out", pc.r_out);
        parse_polynomials<2>(pc.f, pf + ".f", out);
        pr.finish();
        c.poles.push_back(std::move(pc));
      }
  }
  r.finish();
  const std::size_t before = out.size();
  RayProblem P;
  try {
    P = make_ray_problem(c);
  } catch (const Error&) {
    return;  // polynomial errors already recorded
  }
  for (const auto& v : P.violations()) out.push_back({path, v});
  if (out.size() == before) {
    try {
      check_ray_symmetry(P);
    } catch (const SymmetryViolation& e) {
      out.push_back({r.field("poles"), e.what()});
    }
  }
}

inline json ray_json(const RayConfig& c)
{
  json poles = json::array();
  for (const auto& p : c.poles)
    poles.push_back(json{{"at_infinity", p.at_infinity}, {"f", p.f}, {"epsilon", p.epsilon}, {"r_in", p.r_in}, {"r_out", p.r_out}});
  return json{{"depth", c.depth}, {"s_extent", c.s_extent}, {"resolution", c.resolution}, {"width", c.width},
              {"slices", c.slices}, {"tol", c.tol},           {"max_sweeps", c.max_sweeps}, {"poles", poles}};
}

inline void read_samples(ObjectReader& parent, const std::string& key, SampleConfig& s, std::vector<Violation>& out)
{
  const json* v = parent.raw(key);
  if (!v) return;
  ObjectReader r(*v, parent.field(key), out);
  r.get("zeta_radius", s.zeta_radius);
  r.check("zeta_radius", s.zeta_radius, positive, "must be > 0");
  r.get("theta_radius", s.theta_radius);
  r.check("theta_radius", s.theta_radius, positive, "must be > 0");
  r.get("per_axis", s.per_axis);
  r.check("per_axis", s.per_axis, [](int n) { return n >= 2 && n <= 65; }, "must lie in [2, 65]");
  r.finish();
}

inline json samples_json(const SampleConfig& s)
{
  return json{{"zeta_radius", s.zeta_radius}, {"theta_radius", s.theta_radius}, {"per_axis", s.per_axis}};
}

inline void read_blowup(const json& j, const std::string& path, BlowupConfig& b, std::vector<Violation>& out)
{
  ObjectReader r(j, path, out);
  r.get("r_in", b.r_in);
  r.get("r_out", b.r_out);
  if (!(b.r_in > 0.0 && b.r_out > b.r_in)) r.fail("r_out", "need 0 < r_in < r_out");
  read_samples(r, "samples", b.samples, out);
  if (const json* s = r.raw("second_stage"); s && !s->is_null()) {
    SecondStageConfig sc;
    ObjectReader sr(*s, r.field("second_stage"), out);
    sr.get_complex_list("center", sc.center, 2);
    if (sc.center.size() == 2 && sc.center[0] != cplx(0.0)) sr.fail("center", "must lie on E (first coordinate 0)");
    sr.get("r_in", sc.r_in);
    sr.get("r_out", sc.r_out);
    if (!(sc.r_in > 0.0 && sc.r_out > sc.r_in)) sr.fail("r_out", "need 0 < r_in < r_out");
    read_samples(sr, "samples", sc.samples, out);
    sr.finish();
    b.second_stage = sc;
  }
  r.finish();
}

inline json blowup_json(const BlowupConfig& b)
{
  json j{{"r_in", b.r_in}, {"r_out", b.r_out}, {"samples", samples_json(b.samples)}, {"second_stage", nullptr}};
  if (b.second_stage)
    j["second_stage"] = json{{"center", complex_list_json(b.second_stage->center)},
                             {"r_in", b.second_stage->r_in},
                             {"r_out", b.second_stage->r_out},
                             {"samples", samples_json(b.second_stage->samples)}};
  return j;
}

}  // namespace detail

/// Parses and validates a configuration. Throws ParseError on malformed text and
/// ValidationError listing every violated field.
inline RunConfig parse_config(const std::string& text)
{
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.byte, "well-formed JSON (" + std::string(e.what()) + ")");
  }
  std::vector<Violation> out;
  RunConfig c;
  detail::ObjectReader r(j, "", out);
  if (!j.is_object()) throw ValidationError(out);
  std::string format;
  r.require("format");
  r.get("format", format);
  if (j.contains("format") && format != config_format) r.fail("format", std::string("must be \"") + config_format + "\"");
  std::string command;
  r.require("command");
  r.get("command", command);
  static const std::vector<std::pair<std::string, Command>> commands{
      {"green", Command::green}, {"torus", Command::torus}, {"ray", Command::ray}, {"blowup", Command::blowup}, {"verify", Command::verify}};
  bool known = false;
  for (const auto& [name, cmd] : commands)
    if (name == command) c.command = cmd, known = true;
  if (j.contains("command") && !known) r.fail("command", "must be one of green, torus, ray, blowup, verify");
  r.get("output", c.output);
  r.check("output", c.output, [](const std::string& s) { return !s.empty(); }, "must be non-empty");
  r.get("seed", c.seed);
  if (known) {
    if (c.command == Command::verify) {
      r.require("suite");
      r.get("suite", c.suite);
      if (j.contains("suite") && std::find(known_suites().begin(), known_suites().end(), c.suite) == known_suites().end())
        r.fail("suite", "must be one of oracles-1d, oracles-2d, lemmas, torus, ray");
    } else {
      const json empty = json::object();
      const json* p = r.raw("problem");
      const json& pj = p ? *p : empty;
      switch (c.command) {
        case Command::green:
          r.require("problem");
          detail::read_green(pj, "problem", c.green, out);
          break;
        case Command::torus: detail::read_torus(pj, "problem", c.torus, out); break;
        case Command::ray: detail::read_ray(pj, "problem", c.ray, out); break;
        case Command::blowup: detail::read_blowup(pj, "problem", c.blowup, out); break;
        case Command::verify: break;
      }
    }
  }
  r.finish();
  if (!out.empty()) throw ValidationError(out);
  return c;
}

/// Canonical JSON text with every default filled; parse_config(serialize(c)) == c.
inline std::string serialize_config(const RunConfig& c)
{
  using nlohmann::json;
  json j{{"format", config_format}, {"command", to_string(c.command)}, {"output", c.output}, {"seed", c.seed}};
  switch (c.command) {
    case Command::green: j["problem"] = detail::green_json(c.green); break;
    case Command::torus: j["problem"] = detail::torus_json(c.torus); break;
    case Command::ray: j["problem"] = detail::ray_json(c.ray); break;
    case Command::blowup: j["problem"] = detail::blowup_json(c.blowup); break;
    case Command::verify: j["suite"] = c.suite; break;
  }
  return j.dump(2) + "\n";
}

}  // namespace plurigreen
