#ifndef SOLTRUNC_CONFIG_HPP
#define SOLTRUNC_CONFIG_HPP

#include "soltrunc/fields.hpp"
#include "soltrunc/truncation.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace soltrunc {

// Field description, e.g. {"type": "spike", "amplitude": 6, "width": 0.4},
// or {"family": "spike", "params": {"amplitude": 6, "width": 0.4}}.
// Types: zero, linear, gradient, spike, abc, curl_potential, sum; the last
// four need three dimensions. Families trigonometric, curl-of-potential and
// polynomial map to abc, curl_potential and linear / curl_potential.
AnalyticField<3> make_field3(const nlohmann::json& spec);
AnalyticField<2> make_field2(const nlohmann::json& spec);

struct ExperimentConfig {
  nlohmann::json field = {{"type", "spike"}, {"amplitude", 6.0}, {"width", 0.4}};
  int dim = 3;
  std::vector<double> lambdas = {1.0, 2.0, 4.0};
  double p = 2.0;
  Vec3 box_lo = Vec3::Constant(-3.0);
  Vec3 box_hi = Vec3::Constant(3.0);
  std::vector<int> resolutions = {16, 24};
  double epsilon = 1.0 / 64;
  TruncationRules rules;
  int samples = 1000;
  int mc_samples = 4000;
  int mc_configs = 20;
  std::uint64_t seed = 20240611;
  std::string output = "out";
  std::vector<std::string> suites = {"stokes", "divfree", "bounds", "helper", "classical"};

  double lambda() const { return lambdas.front(); }
  int resolution() const { return resolutions.front(); }
  Box<3> box() const { return Box<3>(box_lo, box_hi); }
  // Throws ConfigError.
  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace soltrunc

#endif
