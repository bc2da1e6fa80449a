#include "soltrunc/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace soltrunc {

using nlohmann::json;

namespace {

template <int Dim>
Vec<Dim> vec_of(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  if (j.size() != static_cast<std::size_t>(Dim))
    throw DimensionError(std::string(what) + " has " + std::to_string(j.size()) + " entries, expected " +
                         std::to_string(Dim));
  Vec<Dim> v;
  for (int a = 0; a < Dim; ++a) v(a) = j[static_cast<std::size_t>(a)].get<double>();
  return v;
}

template <int Dim>
Mat<Dim> mat_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(Dim))
    throw DimensionError(std::string(what) + " must have " + std::to_string(Dim) + " rows");
  Mat<Dim> m;
  for (int a = 0; a < Dim; ++a) m.row(a) = vec_of<Dim>(j[static_cast<std::size_t>(a)], what).transpose();
  return m;
}

double number(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

template <int Dim>
std::shared_ptr<const ScalarFunction<Dim>> make_scalar(const json& s) {
  const std::string type = s.value("type", "");
  const Vec<Dim> zero = Vec<Dim>::Zero();
  if (type == "gaussian")
    return std::make_shared<Gaussian<Dim>>(s.contains("center") ? vec_of<Dim>(s["center"], "center") : zero,
                                           number(s, "amplitude", 1.0), number(s, "sigma", 1.0));
  if (type == "bump")
    return std::make_shared<CompactBump<Dim>>(s.contains("center") ? vec_of<Dim>(s["center"], "center") : zero,
                                              number(s, "amplitude", 1.0), number(s, "width", 1.0));
  if (type == "trig")
    return std::make_shared<TrigProduct<Dim>>(number(s, "amplitude", 1.0), vec_of<Dim>(s.at("wavenumber"), "wavenumber"),
                                              s.contains("phase") ? vec_of<Dim>(s["phase"], "phase") : zero);
  if (type == "polynomial") {
    std::vector<Monomial<Dim>> terms;
    for (const auto& t : s.at("terms")) {
      Monomial<Dim> m;
      m.coefficient = t.at("coefficient").get<double>();
      const auto& pw = t.at("powers");
      if (pw.size() != static_cast<std::size_t>(Dim)) throw DimensionError("monomial powers have the wrong length");
      for (int a = 0; a < Dim; ++a) m.powers[static_cast<std::size_t>(a)] = pw[static_cast<std::size_t>(a)].get<int>();
      terms.push_back(m);
    }
    return std::make_shared<Polynomial<Dim>>(std::move(terms));
  }
  throw ConfigError("unknown scalar function type '" + type + "'");
}

// {"family": f, "params": {...}} becomes {"type": t, ...params}.
json normalize_field(const json& spec) {
  if (!spec.is_object()) throw ConfigError("field description must be an object");
  if (!spec.contains("family")) return spec;
  json out = spec.value("params", json::object());
  const std::string family = spec.at("family").get<std::string>();
  if (family == "trigonometric")
    out["type"] = "abc";
  else if (family == "curl-of-potential")
    out["type"] = "curl_potential";
  else if (family == "polynomial")
    out["type"] = out.contains("matrix") ? "linear" : "curl_potential";
  else
    out["type"] = family;
  return out;
}

}  // namespace

AnalyticField<3> make_field3(const json& raw) {
  try {
    const json spec = normalize_field(raw);
    const std::string type = spec.value("type", "");
    if (type == "zero") return affine_field<3>(Vec3::Zero(), Mat3::Zero());
    if (type == "linear")
      return affine_field<3>(spec.contains("offset") ? vec_of<3>(spec["offset"], "offset") : Vec3::Zero(),
                             mat_of<3>(spec.at("matrix"), "matrix"));
    if (type == "spike")
      return spike_field(spec.contains("center") ? vec_of<3>(spec["center"], "center") : Vec3::Zero(),
                         number(spec, "amplitude", 1.0), number(spec, "width", 1.0),
                         spec.contains("direction") ? vec_of<3>(spec["direction"], "direction") : Vec3::UnitZ());
    if (type == "abc")
      return abc_flow(number(spec, "A", 1.0), number(spec, "B", 1.0), number(spec, "C", 1.0), number(spec, "k", 1.0));
    if (type == "curl_potential") {
      VectorPotential pot;
      for (const auto& t : spec.at("terms"))
        pot.terms.push_back({make_scalar<3>(t.at("function")), vec_of<3>(t.at("direction"), "direction")});
      const bool all_polynomial = std::all_of(spec.at("terms").begin(), spec.at("terms").end(), [](const json& t) {
        return t.at("function").value("type", "") == "polynomial";
      });
      if (all_polynomial) pot.family = FieldFamily::polynomial;
      return make_curl_field(pot);
    }
    if (type == "gradient") return gradient_field<3>(make_scalar<3>(spec.at("potential")));
    if (type == "sum") {
      AnalyticField<3> acc;
      for (const auto& t : spec.at("terms")) acc = acc.valid() ? acc + make_field3(t) : make_field3(t);
      if (!acc.valid()) throw ConfigError("empty field sum");
      return acc;
    }
    throw ConfigError("unknown field type '" + type + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad field description: ") + e.what());
  }
}

AnalyticField<2> make_field2(const json& raw) {
  try {
    const json spec = normalize_field(raw);
    const std::string type = spec.value("type", "");
    if (type == "zero") return affine_field<2>(Vec2::Zero(), Mat2::Zero());
    if (type == "linear")
      return affine_field<2>(spec.contains("offset") ? vec_of<2>(spec["offset"], "offset") : Vec2::Zero(),
                             mat_of<2>(spec.at("matrix"), "matrix"));
    if (type == "gradient") return gradient_field<2>(make_scalar<2>(spec.at("potential")));
    if (type == "spike" || type == "abc" || type == "curl_potential" || type == "sum")
      throw DimensionError("field type '" + type + "' needs three dimensions");
    throw ConfigError("unknown field type '" + type + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad field description: ") + e.what());
  }
}

void ExperimentConfig::validate() const {
  if (dim != 2 && dim != 3) throw DimensionError("dim must be 2 or 3");
  if (lambdas.empty()) throw ConfigError("lambda ladder is empty");
  for (double l : lambdas)
    if (!(l > 0)) throw ConfigError("lambda must be positive");
  if (resolutions.empty()) throw ConfigError("no grid resolution given");
  for (int r : resolutions)
    if (r < 8) throw ConfigError("grid resolution must be at least 8");
  if (!(epsilon > 0 && epsilon < 1.0 / 32)) throw ConfigError("epsilon out of range (0, 1/32)");
  if (rules.segment_degree < 2 || rules.triangle_degree < 2 || rules.tetra_degree < 2 || rules.mu_order < 2)
    throw ConfigError("quadrature degrees must be at least 2");
  if (!(p >= 1)) throw ConfigError("p must be at least 1");
  if (!((box_hi - box_lo).minCoeff() > 0)) throw ConfigError("empty domain box");
  if (samples < 1 || mc_samples < 16 || mc_configs < 1) throw ConfigError("sample counts too small");
  static const std::set<std::string> known = {"stokes", "divfree", "bounds", "helper", "classical"};
  for (const auto& s : suites)
    if (!known.count(s)) throw ConfigError("unknown suite '" + s + "'");
}

ExperimentConfig parse_config(const json& j) {
  static const std::set<std::string> keys = {"field",   "dim",        "lambda",  "lambda_ladder", "p",
                                             "box",     "resolution", "resolutions", "epsilon",   "degrees",
                                             "samples", "mc_samples", "mc_configs", "seed",      "output",
                                             "suites"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
  ExperimentConfig c;
  try {
    if (j.contains("field")) c.field = j["field"];
    c.dim = j.value("dim", 3);
    if (j.contains("lambda_ladder")) c.lambdas = j["lambda_ladder"].get<std::vector<double>>();
    if (j.contains("lambda")) c.lambdas = {j["lambda"].get<double>()};
    c.p = j.value("p", c.p);
    if (j.contains("box")) {
      const auto& b = j["box"];
      if (c.dim == 2 && b.at("lo").size() == 2 && b.at("hi").size() == 2) {
        c.box_lo << vec_of<2>(b["lo"], "box.lo"), -1.0;
        c.box_hi << vec_of<2>(b["hi"], "box.hi"), 1.0;
      } else {
        c.box_lo = vec_of<3>(b.at("lo"), "box.lo");
        c.box_hi = vec_of<3>(b.at("hi"), "box.hi");
      }
    }
    if (j.contains("resolutions")) c.resolutions = j["resolutions"].get<std::vector<int>>();
    if (j.contains("resolution")) c.resolutions = {j["resolution"].get<int>()};
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.contains("degrees")) {
      const auto& d = j["degrees"];
      c.rules.segment_degree = d.value("segment", c.rules.segment_degree);
      c.rules.triangle_degree = d.value("triangle", c.rules.triangle_degree);
      c.rules.tetra_degree = d.value("tetra", c.rules.tetra_degree);
      c.rules.mu_order = d.value("mu", c.rules.mu_order);
    }
    c.samples = j.value("samples", c.samples);
    c.mc_samples = j.value("mc_samples", c.mc_samples);
    c.mc_configs = j.value("mc_configs", c.mc_configs);
    c.seed = j.value("seed", c.seed);
    c.output = j.value("output", c.output);
    if (j.contains("suites")) c.suites = j["suites"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  // Fail early on field descriptions that cannot be built.
  if (c.dim == 3)
    make_field3(c.field);
  else
    make_field2(c.field);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["field"] = c.field;
  j["dim"] = c.dim;
  j["lambda_ladder"] = c.lambdas;
  j["p"] = c.p;
  j["box"] = {{"lo", {c.box_lo(0), c.box_lo(1), c.box_lo(2)}}, {"hi", {c.box_hi(0), c.box_hi(1), c.box_hi(2)}}};
  j["resolutions"] = c.resolutions;
  j["epsilon"] = c.epsilon;
  j["degrees"] = {{"segment", c.rules.segment_degree},
                  {"triangle", c.rules.triangle_degree},
                  {"tetra", c.rules.tetra_degree},
                  {"mu", c.rules.mu_order}};
  j["samples"] = c.samples;
  j["mc_samples"] = c.mc_samples;
  j["mc_configs"] = c.mc_configs;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["suites"] = c.suites;
  return j;
}

}  // namespace soltrunc
