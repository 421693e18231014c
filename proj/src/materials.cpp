#include "vusc/materials.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "vusc/csv.hpp"
#include "vusc/errors.hpp"
#include "vusc/units.hpp"

namespace vusc {
namespace {

using nlohmann::json;

bool finite(double x) { return std::isfinite(x); }

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ContractError(fmt::format("{}: {}", field, what));
}

struct Validator {
  const std::string& name;

  void operator()(const ConstantIndex& c) const {
    require(finite(c.n.real()) && c.n.real() > 0.0, "n", "must be a finite value > 0");
    require(finite(c.n.imag()) && c.n.imag() >= 0.0, "kappa", "must be >= 0 (passive medium)");
  }

  void operator()(const LorentzSet& s) const {
    require(finite(s.n_b) && s.n_b >= 1.0, "n_b", fmt::format("must be >= 1 (got {})", s.n_b));
    std::set<std::string> ids;
    for (std::size_t i = 0; i < s.oscillators.size(); ++i) {
      const auto& o = s.oscillators[i];
      const auto at = fmt::format("oscillators[{}]", i);
      require(finite(o.f) && o.f >= 0.0, at + ".f", fmt::format("must be >= 0 (got {})", o.f));
      require(finite(o.k0) && o.k0 > 0.0, at + ".k0", fmt::format("must be > 0 (got {})", o.k0));
      require(finite(o.gamma) && o.gamma > 0.0, at + ".gamma",
              fmt::format("must be > 0 (got {})", o.gamma));
      if (!o.id.empty()) {
        require(ids.insert(o.id).second, at + ".id", fmt::format("duplicate id '{}'", o.id));
      }
    }
  }

  void operator()(const DrudeLorentz& d) const {
    require(finite(d.eps_inf), "eps_inf", "must be finite");
    require(finite(d.omega_p) && d.omega_p > 0.0, "omega_p", "must be > 0");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < d.terms.size(); ++i) {
      const auto& t = d.terms[i];
      const auto at = fmt::format("terms[{}]", i);
      require(finite(t.f) && t.f >= 0.0, at + ".f", "must be >= 0");
      require(finite(t.omega) && t.omega >= 0.0, at + ".omega", "must be >= 0");
      require(finite(t.gamma) && t.gamma > 0.0, at + ".gamma", "must be > 0");
      if (!t.id.empty()) {
        require(ids.insert(t.id).second, at + ".id", fmt::format("duplicate id '{}'", t.id));
      }
    }
  }

  void operator()(const TabulatedIndex& t) const {
    require(t.k.size() == t.n.size(), "table", "wavenumber and index columns differ in length");
    require(t.k.size() >= 2, "table", "needs at least two rows");
    for (std::size_t i = 0; i < t.k.size(); ++i) {
      require(finite(t.k[i]) && t.k[i] > 0.0, fmt::format("table[{}].wavenumber", i), "must be > 0");
      require(i == 0 || t.k[i] > t.k[i - 1], fmt::format("table[{}].wavenumber", i),
              "grid must be strictly increasing");
      require(finite(t.n[i].real()) && finite(t.n[i].imag()) && t.n[i].imag() >= 0.0,
              fmt::format("table[{}].kappa", i), "must be finite and >= 0");
    }
  }
};

cplx eval_model(const ConstantIndex& c, double) { return c.n; }

cplx eval_model(const LorentzSet& s, double k) {
  cplx eps = s.n_b * s.n_b;
  for (const auto& o : s.oscillators) eps -= o.f / cplx(k * k - o.k0 * o.k0, k * o.gamma);
  return passive_sqrt(eps);
}

cplx eval_model(const DrudeLorentz& d, double k) {
  const double w = units::wavenumber_to_ev(k);
  const double wp2 = d.omega_p * d.omega_p;
  cplx eps = d.eps_inf;
  for (const auto& t : d.terms) eps -= t.f * wp2 / cplx(w * w - t.omega * t.omega, w * t.gamma);
  return passive_sqrt(eps);
}

cplx eval_model(const TabulatedIndex& t, double k) {
  if (k < t.k.front() || k > t.k.back()) {
    throw DomainError(fmt::format("wavenumber {} outside tabulated range [{}, {}]", k,
                                  t.k.front(), t.k.back()));
  }
  const auto it = std::lower_bound(t.k.begin(), t.k.end(), k);
  const auto i = static_cast<std::size_t>(it - t.k.begin());
  if (t.k[i] == k) return t.n[i];
  const double s = (k - t.k[i - 1]) / (t.k[i] - t.k[i - 1]);
  return t.n[i - 1] + s * (t.n[i] - t.n[i - 1]);
}

// --- document parsing -------------------------------------------------------

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return fmt::format("{}:{}", line, col);
}

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  double number(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.contains(key)) fail(path + key, "missing required field");
    return as_number(obj.at(key), path + key);
  }

  double number_or(const json& obj, const std::string& key, const std::string& path,
                   double dflt) const {
    return obj.contains(key) ? as_number(obj.at(key), path + key) : dflt;
  }

  double as_number(const json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, fmt::format("expected a number, found {}", v.type_name()));
    return v.get<double>();
  }

  std::string string_or(const json& obj, const std::string& key, const std::string& path,
                        const std::string& dflt) const {
    if (!obj.contains(key)) return dflt;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(path + key, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.contains(key)) fail(path + key, "missing required field");
    const auto& v = obj.at(key);
    if (!v.is_array()) fail(path + key, "expected an array");
    return v;
  }

  void only_keys(const json& obj, std::initializer_list<const char*> allowed,
                 const std::string& path) const {
    if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
      const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                  [&](const char* a) { return key == a; });
      if (!ok) fail(path + key, "unknown field");
    }
  }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ParseError(origin_, fmt::format("field '{}': {}", field, what));
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
};

LorentzSet parse_lorentz(const json& doc, const Reader& rd) {
  LorentzSet s;
  s.n_b = rd.number(doc, "n_b", "");
  const auto& list = doc.contains("oscillators") ? rd.array(doc, "oscillators", "") : json::array();
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto path = fmt::format("oscillators[{}].", i);
    const auto& o = list[i];
    rd.only_keys(o, {"id", "f", "k0", "gamma"}, path);
    s.oscillators.push_back({rd.string_or(o, "id", path, fmt::format("osc{}", i + 1)),
                             rd.number(o, "f", path), rd.number(o, "k0", path),
                             rd.number(o, "gamma", path)});
  }
  return s;
}

DrudeLorentz parse_drude(const json& doc, const Reader& rd) {
  const auto unit = rd.string_or(doc, "units", "", "eV");
  if (unit != "eV") rd.fail("units", fmt::format("only 'eV' is supported (got '{}')", unit));
  DrudeLorentz d;
  d.eps_inf = rd.number_or(doc, "eps_inf", "", 1.0);
  d.omega_p = rd.number(doc, "omega_p", "");
  const auto& list = rd.array(doc, "terms", "");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto path = fmt::format("terms[{}].", i);
    const auto& t = list[i];
    rd.only_keys(t, {"id", "f", "omega", "gamma"}, path);
    d.terms.push_back({rd.string_or(t, "id", path, fmt::format("term{}", i + 1)),
                       rd.number(t, "f", path), rd.number(t, "omega", path),
                       rd.number(t, "gamma", path)});
  }
  if (doc.contains("film")) {
    const auto& film = doc.at("film");
    rd.only_keys(film, {"thickness_nm", "fermi_velocity_m_per_s"}, "film.");
    const double d_nm = rd.number(film, "thickness_nm", "film.");
    const double vf =
        rd.number_or(film, "fermi_velocity_m_per_s", "film.", presets::kGoldFermiVelocity);
    if (!(d_nm > 0.0)) rd.fail("film.thickness_nm", "must be > 0");
    if (!(vf >= 0.0)) rd.fail("film.fermi_velocity_m_per_s", "must be >= 0");
    try {
      d = with_film_damping(std::move(d), d_nm, vf);
    } catch (const ContractError& e) {
      rd.fail("film", e.what());
    }
  }
  return d;
}

cplx parse_scale(const json& v, const Reader& rd) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  rd.fail("index_scale", "expected a number or [re, im]");
}

}  // namespace

cplx passive_sqrt(cplx eps) {
  cplx n = std::sqrt(eps);
  if (n.imag() < 0.0) n = -n;
  return n;
}

void validate(const DispersiveMaterial& m) {
  std::visit(Validator{m.name}, m.model);
  require(finite(m.index_scale.real()) && finite(m.index_scale.imag()) &&
              std::abs(m.index_scale) > 0.0,
          "index_scale", "must be finite and nonzero");
}

void validate(const MetalMirror& m) {
  validate(m.material);
  require(finite(m.thickness_nm) && m.thickness_nm > 0.0, "thickness_nm",
          fmt::format("must be > 0 (got {})", m.thickness_nm));
}

cplx eval_index(const DispersiveMaterial& m, double k) {
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw DomainError(fmt::format("wavenumber must be > 0 (got {})", k));
  }
  const cplx n = std::visit([k](const auto& model) { return eval_model(model, k); }, m.model);
  return n * m.index_scale;
}

bool is_dispersive(const DispersiveMaterial& m) {
  if (std::holds_alternative<ConstantIndex>(m.model)) return false;
  if (const auto* s = std::get_if<LorentzSet>(&m.model)) return !s->oscillators.empty();
  return true;
}

double background_index(const DispersiveMaterial& m) {
  if (const auto* s = std::get_if<LorentzSet>(&m.model)) return s->n_b * m.index_scale.real();
  if (const auto* c = std::get_if<ConstantIndex>(&m.model)) return (c->n * m.index_scale).real();
  if (const auto* t = std::get_if<TabulatedIndex>(&m.model)) {
    return (t->n.back() * m.index_scale).real();
  }
  const auto& d = std::get<DrudeLorentz>(m.model);
  return (passive_sqrt(d.eps_inf) * m.index_scale).real();
}

DrudeLorentz with_film_damping(DrudeLorentz model, double thickness_nm,
                               double fermi_velocity_m_per_s) {
  require(thickness_nm > 0.0, "film.thickness_nm", "must be > 0");
  auto it = std::find_if(model.terms.begin(), model.terms.end(),
                         [](const DrudeLorentzTerm& t) { return t.omega == 0.0; });
  require(it != model.terms.end(), "terms", "no Drude (omega = 0) term to correct");
  const double extra = units::rate_to_wavenumber(fermi_velocity_m_per_s, thickness_nm * 1e-9);
  it->gamma += units::wavenumber_to_ev(extra);
  return model;
}

AbsorptionBand absorption_band(const DispersiveMaterial& m, double lo, double hi, double step) {
  if (!(lo > 0.0) || !(hi > lo) || !(step > 0.0)) {
    throw ContractError(fmt::format("absorption_band: bad range [{}, {}] step {}", lo, hi, step));
  }
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step)) + 1;
  std::vector<double> kap(n);
  for (std::size_t i = 0; i < n; ++i) kap[i] = eval_index(m, lo + step * double(i)).imag();
  const auto imax = static_cast<std::size_t>(std::max_element(kap.begin(), kap.end()) - kap.begin());
  AbsorptionBand band;
  band.center = lo + step * double(imax);
  band.peak_kappa = kap[imax];
  if (imax > 0 && imax + 1 < n) {
    const double a = kap[imax - 1], b = kap[imax], c = kap[imax + 1];
    const double den = a - 2.0 * b + c;
    if (den < 0.0) {
      const double off = 0.5 * (a - c) / den;
      band.center += off * step;
      band.peak_kappa = b - 0.25 * (a - c) * off;
    }
  }
  const double half = 0.5 * band.peak_kappa;
  std::size_t l = imax, r = imax;
  while (l > 0 && kap[l] >= half) --l;
  while (r + 1 < n && kap[r] >= half) ++r;
  if (kap[l] >= half || kap[r] >= half) {
    throw DomainError(fmt::format("absorption band at {} not resolved within [{}, {}]",
                                  band.center, lo, hi));
  }
  const double kl = lo + step * (double(l) + (half - kap[l]) / (kap[l + 1] - kap[l]));
  const double kr = lo + step * (double(r - 1) + (kap[r - 1] - half) / (kap[r - 1] - kap[r]));
  band.fwhm = kr - kl;
  return band;
}

TabulatedIndex read_index_table(const std::string& path) {
  const auto table = csv::read_numeric(path, 2);
  TabulatedIndex t;
  for (const auto& row : table.rows) {
    t.k.push_back(row.values[0]);
    t.n.emplace_back(row.values[1], row.values.size() > 2 ? row.values[2] : 0.0);
  }
  try {
    Validator{path}(t);
  } catch (const ContractError& e) {
    throw ParseError(path, e.what());
  }
  return t;
}

DispersiveMaterial parse_material(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}:{}", origin, line_col(text, e.byte > 0 ? e.byte - 1 : 0)),
                     e.what());
  }
  Reader rd(origin);
  rd.only_keys(doc,
               {"name", "model", "n_b", "oscillators", "n", "kappa", "units", "eps_inf", "omega_p",
                "terms", "film", "file", "index_scale", "description"},
               "");
  DispersiveMaterial m;
  const auto stem = std::filesystem::path(origin).stem().string();
  m.name = rd.string_or(doc, "name", "", stem);
  const auto model = rd.string_or(doc, "model", "", "lorentz");
  if (model == "lorentz") {
    m.model = parse_lorentz(doc, rd);
  } else if (model == "constant") {
    m.model = ConstantIndex{{rd.number(doc, "n", ""), rd.number_or(doc, "kappa", "", 0.0)}};
  } else if (model == "drude_lorentz") {
    m.model = parse_drude(doc, rd);
  } else if (model == "tabulated") {
    const auto file = rd.string_or(doc, "file", "", "");
    if (file.empty()) rd.fail("file", "missing required field");
    auto p = std::filesystem::path(file);
    if (p.is_relative()) p = std::filesystem::path(origin).parent_path() / p;
    m.model = read_index_table(p.string());
  } else {
    rd.fail("model", fmt::format("unknown model '{}' (constant | lorentz | drude_lorentz | tabulated)",
                                 model));
  }
  if (doc.contains("index_scale")) m.index_scale = parse_scale(doc.at("index_scale"), rd);
  try {
    validate(m);
  } catch (const ContractError& e) {
    throw ParseError(origin, fmt::format("invariant violated: {}", e.what()));
  }
  return m;
}

DispersiveMaterial load_material(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open material file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_material(ss.str(), path);
}

namespace presets {

DispersiveMaterial iron_pentacarbonyl() {
  LorentzSet s;
  s.n_b = 1.46;
  s.oscillators = {
      {"co1", 3.02e5, 1980.0, 5.31},  {"co2", 0.69e5, 2020.0, 22.2},
      {"co3", 0.16e5, 1950.0, 15.4},  {"co4", 0.70e5, 1990.0, 41.6},
      {"co5", 0.36e5, 2000.0, 9.43},  {"co6", 0.01e5, 2100.0, 20.0},
      {"uv", 4.32e5, 19800.0, 4.17e4},
  };
  return {"fe_co5_liquid", s, {1.0, 0.0}};
}

DispersiveMaterial gold_bulk() {
  DrudeLorentz d;
  d.eps_inf = 1.0;
  d.omega_p = 9.03;
  d.terms = {
      {"drude", 0.760, 0.0, 0.053}, {"l1", 0.024, 0.415, 0.241}, {"l2", 0.010, 0.830, 0.345},
      {"l3", 0.071, 2.969, 0.870},  {"l4", 0.601, 4.304, 2.494}, {"l5", 4.384, 13.32, 2.214},
  };
  return {"au_rakic_ld", d, {1.0, 0.0}};
}

DispersiveMaterial gold_film(double thickness_nm) {
  auto m = gold_bulk();
  m.model = with_film_damping(std::get<DrudeLorentz>(m.model), thickness_nm, kGoldFermiVelocity);
  m.name = fmt::format("au_film_{}nm", thickness_nm);
  return m;
}

DispersiveMaterial znse() { return constant(2.43, "znse"); }
DispersiveMaterial baf2() { return constant(1.45, "baf2"); }

DispersiveMaterial constant(double n, const std::string& name) {
  return {name, ConstantIndex{{n, 0.0}}, {1.0, 0.0}};
}

}  // namespace presets

}  // namespace vusc
