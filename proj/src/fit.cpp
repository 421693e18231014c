#include "vusc/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "vusc/csv.hpp"
#include "vusc/errors.hpp"
#include "vusc/modes.hpp"
#include "vusc/parallel.hpp"
#include "vusc/units.hpp"

namespace vusc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBrentBits = 32;  // relative tolerance 2^-31 on long double
constexpr std::uintmax_t kBrentMaxIter = 300;

// --- bounded parameter transform --------------------------------------------

double to_box(double u, const ParamBounds& b) {
  return b.lo + (b.hi - b.lo) * 0.5 * (1.0 + std::sin(u));
}

double from_box(double x, const ParamBounds& b) {
  if (b.hi == b.lo) return 0.0;
  const double t = std::clamp(2.0 * (x - b.lo) / (b.hi - b.lo) - 1.0, -1.0, 1.0);
  return std::asin(t);
}

struct MaterialProblem {
  const Spectrum* measured;
  cplx window;
  std::vector<ParamBounds> bounds;  // n_b, (f, k0, gamma) x n, length
  std::vector<std::string> ids;
  std::size_t evaluations = 0;

  std::size_t n_osc() const { return ids.size(); }

  void unpack(const std::vector<double>& x, LorentzSet& set, double& length) const {
    set.n_b = x[0];
    set.oscillators.resize(n_osc());
    for (std::size_t j = 0; j < n_osc(); ++j) {
      set.oscillators[j] = {ids[j], x[1 + 3 * j], x[2 + 3 * j], x[3 + 3 * j]};
    }
    length = x.back();
  }

  double objective(const std::vector<double>& x) {
    ++evaluations;
    LorentzSet set;
    double length = 0.0;
    unpack(x, set, length);
    const DispersiveMaterial fill{"fit", set, {1.0, 0.0}};
    const auto k = measured->wavenumbers();
    const auto v = measured->values();
    std::vector<double> r(k.size());
    const std::vector<double> d{length};
    parallel_for(k.size(), [&](std::size_t i) {
      const IndexProfile n{window, eval_index(fill, k[i]), window};
      r[i] = solve_indices(n, d, {k[i], 0.0, Polarization::s}).T - v[i];
    });
    double s = 0.0;
    for (const double e : r) s += e * e;
    return std::isfinite(s) ? s : kInf;
  }
};

struct GslCtx {
  MaterialProblem* prob;
  std::vector<double> x;
};

double gsl_objective(const gsl_vector* u, void* p) {
  auto* ctx = static_cast<GslCtx*>(p);
  for (std::size_t i = 0; i < ctx->x.size(); ++i) {
    ctx->x[i] = to_box(gsl_vector_get(u, i), ctx->prob->bounds[i]);
  }
  return ctx->prob->objective(ctx->x);
}

struct LocalRun {
  std::vector<double> x;
  double f = kInf;
  bool converged = false;
};

LocalRun nelder_mead(MaterialProblem& prob, const std::vector<double>& start,
                     const MaterialFitOptions& opt) {
  const std::size_t n = start.size();
  using VecPtr = std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)>;
  VecPtr u(gsl_vector_alloc(n), &gsl_vector_free);
  VecPtr step(gsl_vector_alloc(n), &gsl_vector_free);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(u.get(), i, from_box(start[i], prob.bounds[i]));
    gsl_vector_set(step.get(), i, 0.2);
  }
  GslCtx ctx{&prob, std::vector<double>(n)};
  gsl_multimin_function fn{&gsl_objective, n, &ctx};
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
      &gsl_multimin_fminimizer_free);
  gsl_multimin_fminimizer_set(s.get(), &fn, u.get(), step.get());

  LocalRun run;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), opt.simplex_tolerance) ==
        GSL_SUCCESS) {
      run.converged = true;
      break;
    }
  }
  run.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    run.x[i] = to_box(gsl_vector_get(gsl_multimin_fminimizer_x(s.get()), i), prob.bounds[i]);
  }
  run.f = gsl_multimin_fminimizer_minimum(s.get());
  return run;
}

void check_bounds(const ParamBounds& b, double x, const std::string& name) {
  if (!(b.lo <= b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
    throw ContractError(fmt::format("bounds of {} are invalid [{}, {}]", name, b.lo, b.hi));
  }
  if (!(x >= b.lo && x <= b.hi)) {
    throw ContractError(fmt::format("initial {} = {} outside bounds [{}, {}]", name, x, b.lo, b.hi));
  }
}

// --- 1-D helpers ------------------------------------------------------------------

struct Brent {
  double x;
  double f;
  std::uintmax_t iterations;
};

template <class F>
Brent brent(F&& f, double a, double b) {
  std::uintmax_t it = kBrentMaxIter;
  const auto r = boost::math::tools::brent_find_minima(
      [&](long double x) { return static_cast<long double>(f(static_cast<double>(x))); },
      static_cast<long double>(a), static_cast<long double>(b), kBrentBits, it);
  return {static_cast<double>(r.first), static_cast<double>(r.second), it};
}

int parse_sign(const std::string& s, const std::string& where) {
  if (s == "+" || s == "+1" || s == "1") return 1;
  if (s == "-" || s == "-1") return -1;
  throw ParseError(where, fmt::format("sign must be + or - (got '{}')", s));
}

void check_observation(const Observation& o, const HopfieldParams& p) {
  auto bad = [&](const std::string& why) {
    throw DataError(fmt::format("{}: {}", o.describe(), why));
  };
  if (o.order < 1) bad("order must be >= 1");
  if (o.sign != 1 && o.sign != -1) bad("sign must be +1 or -1");
  if (!std::isfinite(o.energy)) bad("energy is not finite");
  if (o.kind == ControlKind::thickness && !(o.control > 0.0)) bad("thickness must be > 0");
  if (o.kind == ControlKind::angle && !(o.control >= 0.0 && o.control < 90.0)) {
    bad("angle must lie in [0, 90) deg");
  }
  if (o.kind == ControlKind::angle && !(p.length_um > 0.0)) bad("angle data need a cavity length");
  if (!p.orders.empty() && std::find(p.orders.begin(), p.orders.end(), o.order) == p.orders.end()) {
    bad(fmt::format("order {} is not among the model orders", o.order));
  }
}

}  // namespace

double FitResult::value(const std::string& name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p.value;
  }
  throw ContractError(fmt::format("fit result has no parameter '{}'", name));
}

std::string format_report(const FitResult& r, const std::string& title) {
  std::ostringstream os;
  os << "[fit]\n";
  os << "title = " << title << '\n';
  if (r.variant) os << "model_variant = " << to_string(*r.variant) << '\n';
  os << "converged = " << (r.converged ? "true" : "false") << '\n';
  os << "evaluations = " << r.evaluations << '\n';
  os << "chi2 = " << csv::format_double(r.chi2) << '\n';
  if (!r.message.empty()) os << "message = " << r.message << '\n';
  os << "\n[parameters]\n";
  for (const auto& p : r.parameters) {
    os << p.name << " = " << csv::format_double(p.value);
    if (!p.unit.empty()) os << " ; " << p.unit;
    os << '\n';
  }
  return os.str();
}

MaterialBounds default_bounds(const MaterialFitInit& init) {
  MaterialBounds b;
  b.n_b = {1.0, 1.25 * init.set.n_b};
  for (const auto& o : init.set.oscillators) {
    b.f.push_back({0.0, 3.0 * o.f});
    b.k0.push_back({std::max(1.0, o.k0 - 5.0 * o.gamma - 20.0), o.k0 + 5.0 * o.gamma + 20.0});
    b.gamma.push_back({o.gamma / 5.0, 5.0 * o.gamma});
  }
  b.cell_length_um = {0.8 * init.cell_length_um, 1.2 * init.cell_length_um};
  return b;
}

Spectrum cell_spectrum(const LorentzSet& set, double cell_length_um,
                       const DispersiveMaterial& window, const std::vector<double>& grid) {
  Stack s{window, {{{"liquid", set, {1.0, 0.0}}, cell_length_um}}, window, {}};
  return transmission_spectrum(s, grid, 0.0, Polarization::s);
}

MaterialFit fit_material(const Spectrum& measured, std::size_t n_oscillators,
                         const MaterialFitInit& init, const MaterialBounds& bounds,
                         const MaterialFitOptions& options) {
  if (n_oscillators < 1) throw ContractError("material fit needs at least one oscillator");
  if (init.set.oscillators.size() != n_oscillators) {
    throw ContractError(fmt::format("initial guess has {} oscillators, {} requested",
                                    init.set.oscillators.size(), n_oscillators));
  }
  if (bounds.f.size() != n_oscillators || bounds.k0.size() != n_oscillators ||
      bounds.gamma.size() != n_oscillators) {
    throw ContractError("bounds do not match the oscillator count");
  }
  if (measured.size() < 2) throw ContractError("measured spectrum needs >= 2 samples");
  if (!(bounds.gamma.empty() ||
        std::all_of(bounds.gamma.begin(), bounds.gamma.end(), [](auto& g) { return g.lo > 0.0; }))) {
    throw ContractError("gamma lower bounds must be > 0");
  }
  if (!(bounds.n_b.lo >= 1.0)) throw ContractError("n_b lower bound must be >= 1");
  if (!(bounds.cell_length_um.lo > 0.0)) throw ContractError("cell length lower bound must be > 0");

  gsl_set_error_handler_off();

  MaterialProblem prob;
  prob.measured = &measured;
  prob.window = eval_index(options.window, measured.front_k());
  for (const double k : measured.wavenumbers()) {
    if (eval_index(options.window, k) != prob.window) {
      throw ContractError("material fit requires a non-dispersive window");
    }
  }
  std::vector<double> x0;
  prob.bounds.push_back(bounds.n_b);
  x0.push_back(init.set.n_b);
  check_bounds(bounds.n_b, init.set.n_b, "n_b");
  for (std::size_t j = 0; j < n_oscillators; ++j) {
    const auto& o = init.set.oscillators[j];
    const auto id = o.id.empty() ? fmt::format("osc{}", j + 1) : o.id;
    prob.ids.push_back(id);
    check_bounds(bounds.f[j], o.f, "f_" + id);
    check_bounds(bounds.k0[j], o.k0, "k0_" + id);
    check_bounds(bounds.gamma[j], o.gamma, "gamma_" + id);
    prob.bounds.insert(prob.bounds.end(), {bounds.f[j], bounds.k0[j], bounds.gamma[j]});
    x0.insert(x0.end(), {o.f, o.k0, o.gamma});
  }
  check_bounds(bounds.cell_length_um, init.cell_length_um, "l_cell");
  prob.bounds.push_back(bounds.cell_length_um);
  x0.push_back(init.cell_length_um);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);

  LocalRun best = nelder_mead(prob, x0, options);
  bool any_converged = best.converged;
  bool agreed = false;
  double previous = best.f;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    // Even restarts rebuild the simplex at the incumbent, odd ones jitter it.
    auto start = best.x;
    if (r % 2 == 1) {
      for (std::size_t i = 0; i < start.size(); ++i) {
        const auto& b = prob.bounds[i];
        start[i] = std::clamp(start[i] + jitter(rng) * (b.hi - b.lo), b.lo, b.hi);
      }
    }
    auto run = nelder_mead(prob, start, options);
    any_converged = any_converged || run.converged;
    // Consecutive local searches ending at the same objective value count as
    // convergence even when the simplex never collapsed.
    agreed = agreed || std::abs(run.f - previous) <= 1e-6 * std::max(previous, 1e-300);
    previous = run.f;
    if (run.f < best.f) best = std::move(run);
  }

  MaterialFit out;
  prob.unpack(best.x, out.set, out.cell_length_um);
  out.result.chi2 = best.f;
  out.result.evaluations = prob.evaluations;
  out.result.converged = (any_converged || agreed) && std::isfinite(best.f);
  if (any_converged) {
    out.result.message = "simplex collapsed below tolerance";
  } else if (agreed) {
    out.result.message = "consecutive restarts agree within 1e-6 relative";
  } else {
    out.result.message = fmt::format("restart budget exhausted; best-so-far chi2 {}", best.f);
  }
  out.result.parameters.push_back({"n_b", out.set.n_b, ""});
  for (const auto& o : out.set.oscillators) {
    out.result.parameters.push_back({"f_" + o.id, o.f, "cm^-2"});
    out.result.parameters.push_back({"k0_" + o.id, o.k0, "cm^-1"});
    out.result.parameters.push_back({"gamma_" + o.id, o.gamma, "cm^-1"});
  }
  out.result.parameters.push_back({"l_cell", out.cell_length_um, "um"});
  return out;
}

// --- dispersion datasets ------------------------------------------------------

std::string Observation::describe() const {
  const auto at = line > 0 ? fmt::format("line {}", line) : std::string("observation");
  return fmt::format("{} ({} {}, P{}{})", at, to_string(kind), control, order, sign < 0 ? "-" : "+");
}

DispersionDataset read_dataset_csv(const std::string& path) {
  const auto table = csv::read(path);
  static const std::vector<std::string> kHeader{"control", "control_kind", "order", "sign",
                                                "energy_cm-1"};
  if (!table.header.empty() && table.header != kHeader) {
    throw ParseError(path, "header must be control,control_kind,order,sign,energy_cm-1");
  }
  DispersionDataset d;
  for (const auto& row : table.rows) {
    const auto where = fmt::format("{}:{}", path, row.line);
    if (row.fields.size() != 5) {
      throw ParseError(where, fmt::format("expected 5 columns, found {}", row.fields.size()));
    }
    Observation o;
    o.line = row.line;
    o.control = csv::parse_double(row.fields[0], where);
    try {
      o.kind = parse_control(row.fields[1]);
    } catch (const ContractError& e) {
      throw ParseError(where, e.what());
    }
    const double order = csv::parse_double(row.fields[2], where);
    if (order != std::floor(order) || order < 1.0 || order > 1e6) {
      throw ParseError(where, fmt::format("order must be a positive integer (got '{}')", row.fields[2]));
    }
    o.order = static_cast<int>(order);
    o.sign = parse_sign(row.fields[3], where);
    o.energy = csv::parse_double(row.fields[4], where);
    if (o.kind == ControlKind::thickness ? !(o.control > 0.0) : !(o.control >= 0.0)) {
      throw ParseError(where, "control must be positive");
    }
    d.observations.push_back(o);
  }
  return d;
}

std::string dataset_to_csv(const DispersionDataset& d) {
  std::string s = "control,control_kind,order,sign,energy_cm-1\n";
  for (const auto& o : d.observations) {
    s += fmt::format("{},{},{},{},{}\n", csv::format_double(o.control), to_string(o.kind), o.order,
                     o.sign < 0 ? "-" : "+", csv::format_double(o.energy));
  }
  return s;
}

std::vector<double> predict(const DispersionDataset& d, const HopfieldParams& p, Model model) {
  p.validate();
  for (const auto& o : d.observations) check_observation(o, p);
  std::vector<double> e(d.observations.size());
  parallel_for(e.size(), [&](std::size_t i) {
    const auto& o = d.observations[i];
    e[i] = branch_sample(p, o.kind, o.control, o.order, o.sign, model).state.energy;
  });
  return e;
}

double chi2(const DispersionDataset& d, const HopfieldParams& p, Model model) {
  const auto e = predict(d, p, model);
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double r = d.observations[i].energy - e[i];
    s += r * r;
  }
  return s;
}

FitResult fit_rabi(const DispersionDataset& d, const HopfieldParams& base, Model model,
                   const RabiFitOptions& opt) {
  if (d.observations.empty()) throw InsufficientDataError("dataset has no observations");
  if (!(opt.lo >= 0.0) || !(opt.hi > opt.lo)) {
    throw ContractError(fmt::format("bad omega_R bracket [{}, {}]", opt.lo, opt.hi));
  }
  if (opt.grid_points < 3) throw ContractError("grid oracle needs >= 3 points");
  base.validate();
  for (const auto& o : d.observations) check_observation(o, base);

  std::size_t evaluations = 0;
  auto objective = [&](double omega_r) {
    ++evaluations;
    auto p = base;
    p.omega_R = omega_r;
    try {
      return chi2(d, p, model);
    } catch (const ModelInstabilityError&) {
      return kInf;
    }
  };

  const std::size_t n = opt.grid_points;
  std::vector<double> xs(n), fs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = opt.lo + (opt.hi - opt.lo) * double(i) / double(n - 1);
  for (std::size_t i = 0; i < n; ++i) fs[i] = objective(xs[i]);
  const auto j = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  if (!std::isfinite(fs[j])) throw BracketError("chi2 is not finite anywhere in the bracket");
  if (j == 0 || j == n - 1) {
    throw BracketError(fmt::format(
        "no interior chi2 minimum in [{}, {}]: the grid minimum sits at the edge ({})", opt.lo,
        opt.hi, xs[j]));
  }
  // Three-point test: the middle grid point is below both neighbours.
  const auto b = brent(objective, xs[j - 1], xs[j + 1]);

  FitResult r;
  r.variant = model;
  r.evaluations = evaluations;
  r.chi2 = b.f;
  const double at = b.x;
  const bool oracle_ok = r.chi2 <= fs[j] + 1e-10;
  r.converged = b.iterations < kBrentMaxIter && oracle_ok;
  if (r.converged) {
    r.message = "bracket width below tolerance";
  } else if (!oracle_ok) {
    r.message = fmt::format("grid point {} beats the optimum ({} < {})", xs[j], fs[j], b.f);
  } else {
    r.message = fmt::format("Brent stopped after {} iterations", b.iterations);
  }
  r.parameters = {{"omega_R", at, "cm^-1"},
                  {"D", at * at / base.omega_nu, "cm^-1"},
                  {"omega_nu", base.omega_nu, "cm^-1"}};
  return r;
}

// --- cavity length ------------------------------------------------------------

Stack make_cavity_stack(const CavityTemplate& t, double length_um) {
  const Layer mirror{t.mirror.material, units::nm_to_um(t.mirror.thickness_nm)};
  return Stack{t.entry, {mirror, {t.fill, length_um}, mirror}, t.exit, t.window};
}

LengthFit fit_cavity_length(const Spectrum& measured, const CavityTemplate& t, double init_length_um,
                            const LengthFitOptions& opt) {
  if (!(init_length_um > 0.0)) {
    throw ContractError(fmt::format("initial length must be > 0 (got {})", init_length_um));
  }
  if (measured.size() < 2) throw ContractError("measured spectrum needs >= 2 samples");
  if (!(opt.scan_lo > 0.0) || !(opt.scan_hi > opt.scan_lo) || !(opt.scan_step_um > 0.0)) {
    throw ContractError("bad length scan settings");
  }
  validate(t.mirror);

  // Indices do not depend on L; evaluate them once per sample.
  const auto k = measured.wavenumbers();
  const auto v = measured.values();
  const Stack probe = make_cavity_stack(t, init_length_um);
  std::vector<IndexProfile> profiles(k.size());
  std::vector<double> window(k.size());
  parallel_for(k.size(), [&](std::size_t i) {
    profiles[i] = index_profile(probe, k[i]);
    window[i] = probe.window.at(k[i]);
  });
  const double tm = probe.layers.front().thickness_um;

  std::size_t evaluations = 0;
  std::vector<double> resid(k.size());
  auto objective = [&](double length) {
    ++evaluations;
    const std::vector<double> d{tm, length, tm};
    parallel_for(k.size(), [&](std::size_t i) {
      resid[i] = solve_indices(profiles[i], d, {k[i], t.angle_deg, t.polarization}, window[i]).T - v[i];
    });
    double s = 0.0;
    for (const double e : resid) s += e * e;
    return s;
  };

  LengthFit out;
  FitResult& r = out.result;
  const double h = 1e-6 * init_length_um;
  const double f0 = objective(init_length_um);
  const double fm = objective(init_length_um - h);
  const double fp = objective(init_length_um + h);
  const double curv = fm - 2.0 * f0 + fp;
  const double vertex = curv > 0.0 ? 0.5 * h * (fm - fp) / curv : kInf;
  if (f0 <= fm && f0 <= fp && (f0 == 0.0 || std::abs(vertex) <= 1e-8 * init_length_um)) {
    out.length_um = init_length_um;
    r.chi2 = f0;
    r.converged = true;
    r.message = "initial length is already optimal";
  } else {
    const double lo = opt.scan_lo * init_length_um;
    const double hi = opt.scan_hi * init_length_um;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / opt.scan_step_um)) + 1;
    std::vector<double> ls(n), fs(n);
    for (std::size_t i = 0; i < n; ++i) {
      ls[i] = lo + (hi - lo) * double(i) / double(n - 1);
      fs[i] = objective(ls[i]);
    }
    const auto j = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
    if (j == 0 || j == n - 1) {
      throw BracketError(fmt::format("no interior length minimum in [{}, {}] um", lo, hi));
    }
    const auto b = brent(objective, ls[j - 1], ls[j + 1]);
    out.length_um = b.x;
    r.chi2 = b.f;
    const bool oracle_ok = b.f <= fs[j] + 1e-10;
    r.converged = b.iterations < kBrentMaxIter && oracle_ok;
    r.message = r.converged ? "bracket width below tolerance"
                            : fmt::format("length search failed (Brent iterations {}, grid {} vs {})",
                                          b.iterations, fs[j], b.f);
  }
  r.evaluations = evaluations;

  const auto fsr_grid = Grid{opt.fsr_lo, opt.fsr_hi, opt.fsr_step}.samples();
  const auto comb = transmission_spectrum(make_cavity_stack(t, out.length_um), fsr_grid, t.angle_deg,
                                          t.polarization);
  const auto fsr = measure_fsr(comb, opt.fsr_lo, opt.fsr_hi);
  out.fsr = fsr.fsr;
  out.fsr_stddev = fsr.stddev;
  out.alpha = alpha_from_fsr(fsr.fsr, background_index(t.fill), out.length_um);
  r.parameters = {{"length", out.length_um, "um"},
                  {"fsr", out.fsr, "cm^-1"},
                  {"fsr_stddev", out.fsr_stddev, "cm^-1"},
                  {"alpha", out.alpha, ""}};
  return out;
}

}  // namespace vusc
