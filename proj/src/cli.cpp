#include "vusc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "vusc/csv.hpp"
#include "vusc/errors.hpp"
#include "vusc/fit.hpp"
#include "vusc/hopfield.hpp"
#include "vusc/materials.hpp"
#include "vusc/modes.hpp"
#include "vusc/parallel.hpp"
#include "vusc/peaks.hpp"
#include "vusc/tmm.hpp"
#include "vusc/units.hpp"

extern char** environ;

namespace vusc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kEnvPrefix = "VUSC_";

/// Config error pointing at a key path inside the run document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(fmt::format("{}:{}:{}", origin, line, col), e.what());
  }
}

// --- typed access with key paths in the messages ---------------------------------

class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Node at(const std::string& key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!j_.contains(key)) throw ConfigError(fmt::format("{}: missing required key", sub(key)));
    return {j_.at(key), sub(key)};
  }

  Node at(std::size_t i) const { return {j_.at(i), fmt::format("{}[{}]", path_, i)}; }

  double number() const {
    if (!j_.is_number()) fail(fmt::format("expected a number, found {}", j_.type_name()));
    return j_.get<double>();
  }

  double number(const std::string& key, double dflt) const {
    return has(key) ? at(key).number() : dflt;
  }

  int integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<int>();
  }

  std::string str() const {
    if (!j_.is_string()) fail(fmt::format("expected a string, found {}", j_.type_name()));
    return j_.get<std::string>();
  }

  std::string str(const std::string& key, const std::string& dflt) const {
    return has(key) ? at(key).str() : dflt;
  }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(fmt::format("{}: {}", path_.empty() ? "<root>" : path_, what));
  }

 private:
  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
};

// --- run context -------------------------------------------------------------------

struct Run {
  std::string command;
  std::string config_file;
  fs::path base_dir;
  json config;
  std::uint64_t seed = 1;
  std::map<std::string, std::string> outputs;  // file name -> content
  bool all_converged = true;

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_relative() ? base_dir / path : path;
  }

  std::string header() const {
    std::string h;
    h += fmt::format("# tool: {} {}\n", kToolName, kToolVersion);
    h += fmt::format("# command: {}\n", command);
    h += fmt::format("# seed: {}\n", seed);
    h += fmt::format("# config: {}\n", config.dump());
    return h;
  }

  void emit(const std::string& name, const std::string& body) { outputs[name] = header() + body; }
};

void apply_env_overrides(json& cfg) {
  std::vector<std::pair<std::string, std::string>> vars;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv(*e);
    if (kv.rfind(kEnvPrefix, 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    vars.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  std::sort(vars.begin(), vars.end());
  for (const auto& [name, value] : vars) {
    std::string key = name.substr(std::string(kEnvPrefix).size());
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (key.empty()) continue;
    json* node = &cfg;
    std::size_t pos = 0;
    while (true) {
      const auto sep = key.find("__", pos);
      const auto part = key.substr(pos, sep == std::string::npos ? std::string::npos : sep - pos);
      if (part.empty()) throw ConfigError(fmt::format("environment override {}: empty key segment", name));
      if (!node->is_object()) {
        throw ConfigError(fmt::format("environment override {}: '{}' is not an object", name, part));
      }
      if (sep == std::string::npos) {
        json v = json::parse(value, nullptr, false);
        (*node)[part] = v.is_discarded() ? json(value) : v;
        break;
      }
      node = &(*node)[part];
      if (node->is_null()) *node = json::object();
      pos = sep + 2;
    }
  }
}

// --- materials and stacks ------------------------------------------------------

DispersiveMaterial preset(const std::string& name, const Node& at) {
  if (name == "fe_co5_liquid") return presets::iron_pentacarbonyl();
  if (name == "au_rakic_ld") return presets::gold_bulk();
  if (name == "au_film_13nm") return presets::gold_film(13.0);
  if (name == "znse") return presets::znse();
  if (name == "baf2") return presets::baf2();
  at.fail(fmt::format(
      "unknown preset '{}' (fe_co5_liquid | au_rakic_ld | au_film_13nm | znse | baf2)", name));
}

/// A material reference: "preset:<name>", a path to a material document, an
/// inline material object or a bare number (constant real index).
DispersiveMaterial material_ref(const Node& n, const fs::path& base) {
  if (n.raw().is_number()) return presets::constant(n.number());
  if (n.raw().is_object()) {
    const auto origin = (base / fmt::format("<{}>", n.path())).string();
    return parse_material(n.raw().dump(), origin);
  }
  const auto s = n.str();
  if (s.rfind("preset:", 0) == 0) return preset(s.substr(7), n);
  fs::path p(s);
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) n.fail(fmt::format("material file '{}' does not exist", p.string()));
  return load_material(p.string());
}

WindowCorrection window_ref(const Node& n, const fs::path& base) {
  if (n.raw().is_number()) return WindowCorrection(n.number());
  fs::path p(n.str());
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) n.fail(fmt::format("window correction file '{}' does not exist", p.string()));
  return WindowCorrection(read_spectrum_csv(p.string()));
}

Stack parse_stack_doc(const Node& doc, const fs::path& base) {
  std::map<std::string, DispersiveMaterial> mats;
  if (doc.has("materials")) {
    const auto m = doc.at("materials");
    if (!m.raw().is_object()) m.fail("expected an object of name -> material");
    for (const auto& [name, _] : m.raw().items()) mats[name] = material_ref(m.at(name), base);
  }
  auto lookup = [&](const Node& ref) {
    if (ref.raw().is_string()) {
      const auto it = mats.find(ref.str());
      if (it != mats.end()) return it->second;
    }
    return material_ref(ref, base);
  };
  Stack s;
  s.entry = lookup(doc.at("entry"));
  s.exit = lookup(doc.at("exit"));
  const auto layers = doc.at("layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto l = layers.at(i);
    Layer layer;
    layer.material = lookup(l.at("material"));
    if (l.has("thickness_um")) {
      layer.thickness_um = l.at("thickness_um").number();
    } else {
      layer.thickness_um = units::nm_to_um(l.at("thickness_nm").number());
    }
    if (!(layer.thickness_um >= 0.0)) l.fail("thickness must be >= 0");
    s.layers.push_back(std::move(layer));
  }
  if (doc.has("window_correction")) s.window = window_ref(doc.at("window_correction"), base);
  return s;
}

Stack stack_ref(const Node& n, const fs::path& base) {
  if (n.raw().is_object()) return parse_stack_doc(n, base);
  fs::path p(n.str());
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) n.fail(fmt::format("stack file '{}' does not exist", p.string()));
  const json doc = parse_json(read_file(p.string()), p.string());
  return parse_stack_doc(Node(doc, p.filename().string()), p.parent_path());
}

std::vector<double> grid_ref(const Node& n) {
  const Grid g{n.at("start").number(), n.at("stop").number(), n.at("step").number()};
  if (!(g.start > 0.0)) n.fail("start must be > 0");
  if (!(g.step > 0.0)) n.fail("step must be > 0");
  if (!(g.stop >= g.start)) n.fail("stop must be >= start");
  if ((g.stop - g.start) / g.step > 5e7) n.fail("grid has too many samples");
  return g.samples();
}

std::vector<int> orders_ref(const Node& n) {
  std::vector<int> o;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const int m = n.at(i).integer();
    if (m < 1) n.at(i).fail("mode order must be >= 1");
    o.push_back(m);
  }
  if (o.empty()) n.fail("at least one order is required");
  return o;
}

Polarization polarization_ref(const Node& cfg) {
  const auto s = cfg.str("polarization", "unpolarized");
  try {
    return parse_polarization(s);
  } catch (const ContractError& e) {
    cfg.at("polarization").fail(e.what());
  }
}

HopfieldParams hopfield_ref(const Node& n, const fs::path& base) {
  HopfieldParams p;
  const auto wv = n.at("omega_nu");
  if (wv.raw().is_object()) {
    const auto mat = material_ref(wv.at("from_material"), base);
    const double lo = wv.number("lo", 1000.0);
    const double hi = wv.number("hi", 3000.0);
    p.omega_nu = fill_band(mat, lo, hi).center;
  } else {
    p.omega_nu = wv.number();
  }
  p.omega_R = n.number("omega_R", 0.0);
  p.length_um = n.number("length_um", 0.0);
  p.n_b = n.number("n_b", 1.0);
  p.alpha = n.number("alpha", 1.0);
  if (n.has("orders")) p.orders = orders_ref(n.at("orders"));
  try {
    p.scaling = parse_scaling(n.str("coupling_scaling", "sqrt_cavity"));
    p.validate();
  } catch (const ContractError& e) {
    n.fail(e.what());
  }
  return p;
}

std::string spectrum_csv(const Spectrum& s) {
  std::string b = "wavenumber_cm-1,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    b += fmt::format("{},{}\n", csv::format_double(s.wavenumbers()[i]),
                     csv::format_double(s.values()[i]));
  }
  return b;
}

std::string peaks_csv(const std::vector<Peak>& peaks) {
  std::string b = "center_cm-1,height,fwhm_cm-1,prominence\n";
  for (const auto& p : peaks) {
    b += fmt::format("{},{},{},{}\n", csv::format_double(p.center), csv::format_double(p.height),
                     csv::format_double(p.fwhm), csv::format_double(p.prominence));
  }
  return b;
}

// --- commands --------------------------------------------------------------------

void cmd_simulate(Run& run) {
  const Node cfg(run.config, "");
  const auto stack = stack_ref(cfg.at("stack"), run.base_dir);
  const auto grid = grid_ref(cfg.at("grid"));
  const double angle = cfg.number("angle_deg", 0.0);
  const auto pol = polarization_ref(cfg);
  const auto qname = cfg.str("quantity", "transmittance");
  Quantity q = Quantity::transmittance;
  if (qname == "reflectance") {
    q = Quantity::reflectance;
  } else if (qname == "absorptance") {
    q = Quantity::absorptance;
  } else if (qname != "transmittance") {
    cfg.at("quantity").fail("expected transmittance | reflectance | absorptance");
  }
  const auto spec = transmission_spectrum(stack, grid, angle, pol, q);
  run.emit(cfg.str("output", "spectrum.csv"), spectrum_csv(spec));
  if (cfg.has("peaks") && spec.size() >= 5) {
    const auto pk = cfg.at("peaks");
    const double prom = pk.has("prominence") ? pk.at("prominence").number() : default_prominence(spec);
    run.emit(pk.str("output", "peaks.csv"), peaks_csv(detect_peaks(spec, prom)));
  }
}

void cmd_field_map(Run& run) {
  const Node cfg(run.config, "");
  const auto stack = stack_ref(cfg.at("stack"), run.base_dir);
  const auto grid = grid_ref(cfg.at("grid"));
  const auto dz = cfg.at("z_resolution_um");
  if (!(dz.number() > 0.0)) dz.fail("must be > 0");
  const auto map = field_map(stack, grid, dz.number(), cfg.number("angle_deg", 0.0),
                             polarization_ref(cfg));
  std::string b = "z_um,wavenumber_cm-1,intensity\n";
  for (std::size_t ik = 0; ik < map.k.size(); ++ik) {
    for (std::size_t iz = 0; iz < map.z_um.size(); ++iz) {
      b += fmt::format("{},{},{}\n", csv::format_double(map.z_um[iz]), csv::format_double(map.k[ik]),
                       csv::format_double(map.at(ik, iz)));
    }
  }
  run.emit(cfg.str("output", "field_map.csv"), b);
}

CavityGeometry geometry_ref(const Node& g, const fs::path& base) {
  CavityGeometry geo;
  geo.length_um = g.at("length_um").number();
  geo.fill = material_ref(g.at("fill"), base);
  geo.alpha = g.number("alpha", 1.0);
  if (g.has("backing")) geo.backing = material_ref(g.at("backing"), base);
  const auto m = g.at("mirror");
  if (m.raw().is_string() && m.str() == "perfect") {
    geo.perfect_mirror = true;
  } else {
    geo.mirror.material = material_ref(m.at("material"), base);
    geo.mirror.thickness_nm = m.at("thickness_nm").number();
  }
  try {
    geo.validate();
  } catch (const ContractError& e) {
    g.fail(e.what());
  }
  return geo;
}

void cmd_modes(Run& run) {
  const Node cfg(run.config, "");
  const auto geo = geometry_ref(cfg.at("geometry"), run.base_dir);
  const auto range = cfg.at("range");
  ModeSearch search;
  search.k_lo = range.at("start").number();
  search.k_hi = range.at("stop").number();
  search.orders = orders_ref(cfg.at("orders"));
  search.scan_step = cfg.number("scan_step", 0.25);
  if (!(search.k_lo > 0.0) || !(search.k_hi > search.k_lo)) range.fail("need 0 < start < stop");
  const auto modes = find_resonances(geo, search);
  std::string b = "order,branch,wavenumber_cm-1,overdamped\n";
  for (const auto& m : modes) {
    b += fmt::format("{},{},{},{}\n", m.order, m.label(), csv::format_double(m.k),
                     m.overdamped ? "true" : "false");
  }
  run.emit(cfg.str("output", "modes.csv"), b);
  const double step = cfg.number("phase_step", 0.5);
  const auto curve = phase_curve(geo, Grid{search.k_lo, search.k_hi, step}.samples());
  std::string p = "wavenumber_cm-1,round_trip_phase_rad\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    p += fmt::format("{},{}\n", csv::format_double(curve.wavenumbers()[i]),
                     csv::format_double(curve.values()[i]));
  }
  run.emit(cfg.str("phase_output", "phase.csv"), p);
}

std::vector<double> values_ref(const Node& n) {
  std::vector<double> v;
  if (n.raw().is_array()) {
    for (std::size_t i = 0; i < n.size(); ++i) v.push_back(n.at(i).number());
  } else {
    const double a = n.at("start").number(), b = n.at("stop").number(), s = n.at("step").number();
    if (!(s > 0.0) || !(b >= a)) n.fail("need step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / s + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) v.push_back(a + s * double(i));
  }
  if (v.empty()) n.fail("sweep is empty");
  return v;
}

Model model_ref(const Node& cfg, const std::string& key, const std::string& dflt) {
  try {
    return parse_model(cfg.str(key, dflt));
  } catch (const ContractError& e) {
    cfg.at(key).fail(e.what());
  }
}

void cmd_sweep(Run& run) {
  const Node cfg(run.config, "");
  const auto params = hopfield_ref(cfg.at("hopfield"), run.base_dir);
  const auto model = model_ref(cfg, "model", "full");
  const auto sw = cfg.at("sweep");
  ControlKind kind;
  try {
    kind = parse_control(sw.at("kind").str());
  } catch (const ContractError& e) {
    sw.at("kind").fail(e.what());
  }
  const auto values = values_ref(sw.at("values"));
  if (params.orders.empty()) cfg.at("hopfield").fail("orders are required for a sweep");
  const auto branches = polariton_branches(params, kind, values, model);
  std::string b = "control,order,branch,energy_cm-1,photon_fraction,matter_fraction\n";
  for (const auto& br : branches) {
    for (const auto& s : br.samples) {
      b += fmt::format("{},{},{},{},{},{}\n", csv::format_double(s.control), br.order,
                       br.sign < 0 ? "-" : "+", csv::format_double(s.state.energy),
                       csv::format_double(s.state.photon_fraction),
                       csv::format_double(s.state.matter_fraction));
    }
  }
  run.emit(cfg.str("output", "branches.csv"), b);

  if (cfg.has("bandgap")) {
    const auto g = cfg.at("bandgap");
    const double lo = g.at("detuning_lo").number(), hi = g.at("detuning_hi").number();
    if (!(lo < 0.0 && hi > 0.0)) g.fail("need detuning_lo < 0 < detuning_hi");
    std::string gap = "model,detuning_lo_cm-1,detuning_hi_cm-1,gap_cm-1\n";
    for (const auto m : {Model::full, Model::rwa}) {
      gap += fmt::format("{},{},{},{}\n", to_string(m), csv::format_double(lo), csv::format_double(hi),
                         csv::format_double(bandgap(params, lo, hi, m)));
    }
    run.emit(g.str("output", "bandgap.csv"), gap);
  }
}

Spectrum measured_ref(const Node& n, const fs::path& base) {
  fs::path p(n.str());
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) n.fail(fmt::format("spectrum file '{}' does not exist", p.string()));
  return read_spectrum_csv(p.string());
}

std::string residual_csv(const Spectrum& measured, const Spectrum& model) {
  std::string b = "wavenumber_cm-1,measured,model,residual\n";
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double m = measured.values()[i], s = model.values()[i];
    b += fmt::format("{},{},{},{}\n", csv::format_double(measured.wavenumbers()[i]),
                     csv::format_double(m), csv::format_double(s), csv::format_double(m - s));
  }
  return b;
}

void cmd_fit_material(Run& run) {
  const Node cfg(run.config, "");
  const auto measured = measured_ref(cfg.at("measured"), run.base_dir);
  const auto init_mat = material_ref(cfg.at("init"), run.base_dir);
  const auto* set = std::get_if<LorentzSet>(&init_mat.model);
  if (!set) cfg.at("init").fail("initial material must be a Lorentz oscillator set");
  MaterialFitInit init{*set, cfg.at("cell_length_um").number()};
  if (!(init.cell_length_um > 0.0)) cfg.at("cell_length_um").fail("must be > 0");
  MaterialFitOptions opt;
  if (cfg.has("window")) opt.window = material_ref(cfg.at("window"), run.base_dir);
  opt.restarts = static_cast<std::size_t>(cfg.number("restarts", 4));
  opt.max_iterations = static_cast<std::size_t>(cfg.number("max_iterations", 20000));
  opt.seed = run.seed;
  const std::size_t n = set->oscillators.size();
  if (n == 0) cfg.at("init").fail("needs at least one oscillator");
  const auto fit = fit_material(measured, n, init, default_bounds(init), opt);
  run.all_converged = run.all_converged && fit.result.converged;

  run.outputs[cfg.str("report", "fit_report.txt")] =
      run.header() + format_report(fit.result, "material fit");
  json doc;
  doc["name"] = init_mat.name + "_fit";
  doc["model"] = "lorentz";
  doc["n_b"] = fit.set.n_b;
  doc["oscillators"] = json::array();
  for (const auto& o : fit.set.oscillators) {
    doc["oscillators"].push_back({{"id", o.id}, {"f", o.f}, {"k0", o.k0}, {"gamma", o.gamma}});
  }
  // JSON has no comments, so the provenance goes into the description
  doc["description"] =
      fmt::format("fitted with l_cell = {} um; tool: {} {}; command: {}; seed: {}; config: {}",
                  csv::format_double(fit.cell_length_um), kToolName, kToolVersion, run.command, run.seed,
                  run.config.dump());
  run.outputs[cfg.str("material_output", "fitted_material.json")] = doc.dump(2) + "\n";
  const auto model = cell_spectrum(fit.set, fit.cell_length_um, opt.window,
                                   {measured.wavenumbers().begin(), measured.wavenumbers().end()});
  run.emit(cfg.str("residual_output", "residuals.csv"), residual_csv(measured, model));
}

void cmd_fit_length(Run& run) {
  const Node cfg(run.config, "");
  const auto measured = measured_ref(cfg.at("measured"), run.base_dir);
  const auto c = cfg.at("cavity");
  CavityTemplate t;
  if (c.has("entry")) t.entry = material_ref(c.at("entry"), run.base_dir);
  if (c.has("exit")) t.exit = material_ref(c.at("exit"), run.base_dir);
  t.fill = material_ref(c.at("fill"), run.base_dir);
  const auto m = c.at("mirror");
  t.mirror.material = material_ref(m.at("material"), run.base_dir);
  t.mirror.thickness_nm = m.at("thickness_nm").number();
  if (c.has("window_correction")) t.window = window_ref(c.at("window_correction"), run.base_dir);
  t.angle_deg = cfg.number("angle_deg", 0.0);
  t.polarization = polarization_ref(cfg);
  LengthFitOptions opt;
  if (cfg.has("fsr_window")) {
    const auto w = cfg.at("fsr_window");
    if (w.size() != 2) w.fail("expected [lo, hi]");
    opt.fsr_lo = w.at(0).number();
    opt.fsr_hi = w.at(1).number();
  }
  const auto init = cfg.at("init_length_um");
  if (!(init.number() > 0.0)) init.fail("must be > 0");
  const auto fit = fit_cavity_length(measured, t, init.number(), opt);
  run.all_converged = run.all_converged && fit.result.converged;
  run.outputs[cfg.str("report", "fit_report.txt")] =
      run.header() + format_report(fit.result, "cavity length fit");
  const auto model = transmission_spectrum(
      make_cavity_stack(t, fit.length_um),
      {measured.wavenumbers().begin(), measured.wavenumbers().end()}, t.angle_deg, t.polarization);
  run.emit(cfg.str("residual_output", "residuals.csv"), residual_csv(measured, model));
}

void cmd_fit_rabi(Run& run) {
  const Node cfg(run.config, "");
  const auto dpath = cfg.at("dataset");
  fs::path p(dpath.str());
  if (p.is_relative()) p = run.base_dir / p;
  if (!fs::exists(p)) dpath.fail(fmt::format("dataset file '{}' does not exist", p.string()));
  const auto data = read_dataset_csv(p.string());
  const auto params = hopfield_ref(cfg.at("hopfield"), run.base_dir);
  std::vector<Model> models{Model::full, Model::rwa};
  if (cfg.has("models")) {
    models.clear();
    const auto ms = cfg.at("models");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      try {
        models.push_back(parse_model(ms.at(i).str()));
      } catch (const ContractError& e) {
        ms.at(i).fail(e.what());
      }
    }
    if (models.empty()) ms.fail("at least one model is required");
  }
  RabiFitOptions opt;
  if (cfg.has("bracket")) {
    const auto b = cfg.at("bracket");
    if (b.size() != 2) b.fail("expected [lo, hi]");
    opt.lo = b.at(0).number();
    opt.hi = b.at(1).number();
  }
  opt.grid_points = static_cast<std::size_t>(cfg.number("grid_points", 1000));

  std::string report;
  std::string resid =
      "model,control,control_kind,order,sign,observed_cm-1,predicted_cm-1,residual_cm-1\n";
  for (const auto model : models) {
    const auto r = fit_rabi(data, params, model, opt);
    run.all_converged = run.all_converged && r.converged;
    if (!report.empty()) report += "\n";
    report += format_report(r, fmt::format("rabi fit ({})", to_string(model)));
    auto best = params;
    best.omega_R = r.value("omega_R");
    const auto e = predict(data, best, model);
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto& o = data.observations[i];
      resid += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(model), csv::format_double(o.control),
                           to_string(o.kind), o.order, o.sign < 0 ? "-" : "+",
                           csv::format_double(o.energy), csv::format_double(e[i]),
                           csv::format_double(o.energy - e[i]));
    }
  }
  run.outputs[cfg.str("report", "fit_report.txt")] = run.header() + report;
  run.emit(cfg.str("residual_output", "residuals.csv"), resid);
}

void write_outputs(const Run& run, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [name, body] : run.outputs) {
    const auto target = dir / name;
    const auto tmp = dir / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
      out << body;
      if (!out) throw Error(fmt::format("write to {} failed", tmp.string()));
    }
    fs::rename(tmp, target);
  }
}

using Handler = void (*)(Run&);

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fabry-Perot microcavity simulation and polariton fitting"};
  app.set_version_flag("--version", fmt::format("{} {}", kToolName, kToolVersion));
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
  } flags;

  const std::vector<std::tuple<std::string, std::string, Handler>> commands{
      {"simulate", "transmission spectrum of a layer stack", &cmd_simulate},
      {"field-map", "intensity map |E(z, k)|^2 through a stack", &cmd_field_map},
      {"modes", "round-trip phase resonances of a cavity", &cmd_modes},
      {"sweep", "polariton branches over thickness or angle", &cmd_sweep},
      {"fit-material", "Lorentz oscillator fit of a flow-cell spectrum", &cmd_fit_material},
      {"fit-length", "cavity length fit and FSR calibration", &cmd_fit_length},
      {"fit-rabi", "Rabi frequency fit of dispersion data", &cmd_fit_rabi},
  };
  for (const auto& [name, help, _] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "run configuration (JSON)")->required();
    sub->add_option("--out", flags.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", flags.seed, "random seed for fit restarts");
    sub->add_option("--threads", flags.threads, "worker threads (0 = all cores)")
        ->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Run r;
  Handler handler = nullptr;
  for (const auto& [name, help, fn] : commands) {
    if (app.got_subcommand(name)) {
      r.command = name;
      handler = fn;
    }
  }
  set_thread_count(flags.threads);

  try {
    r.config_file = flags.config;
    r.base_dir = fs::path(flags.config).parent_path();
    r.config = parse_json(read_file(flags.config), flags.config);
    if (!r.config.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", flags.config));
    apply_env_overrides(r.config);
    if (r.config.contains("command")) {
      const auto& c = r.config.at("command");
      if (!c.is_string() || c.get<std::string>() != r.command) {
        err << fmt::format("error: config is for command {} but '{}' was invoked\n", c.dump(), r.command);
        return kUsage;
      }
    }
    if (flags.seed) {
      r.seed = *flags.seed;
    } else if (r.config.contains("seed")) {
      const auto& s = r.config.at("seed");
      if (!s.is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
      r.seed = s.get<std::uint64_t>();
    }
    r.config["seed"] = r.seed;
    r.config["command"] = r.command;
    handler(r);
    write_outputs(r, flags.out_dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  for (const auto& [name, _] : r.outputs) out << (fs::path(flags.out_dir) / name).string() << '\n';
  if (!r.all_converged) {
    err << "warning: at least one fit did not converge (see report)\n";
    return kNotConverged;
  }
  return kOk;
}

}  // namespace vusc::cli
