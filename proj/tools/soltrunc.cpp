#include "soltrunc/verify.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

using namespace soltrunc;
namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

ExperimentConfig load(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? parse_config(nlohmann::json::object()) : load_config(o.config);
  if (o.lambda) c.lambdas = {*o.lambda};
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output = *o.out;
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  f << text;
}

void write_cover_csv2(const WhitneyCover<2>& cover, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path);
  std::fprintf(f, "index,level,center_x,center_y,sidelength,dist_to_X,proj_x,proj_y,neighbor_count\n");
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const Vec2 c = cover.cubes[i].center();
    const Vec2& z = cover.projections[i];
    std::fprintf(f, "%zu,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", i, cover.cubes[i].level, c(0), c(1),
                 cover.cubes[i].side, cover.distances[i], z(0), z(1), cover.neighbours[i].size());
  }
  std::fclose(f);
}

template <int Dim>
int run_cover(const AnalyticField<Dim>& u, const Box<Dim>& box, const ExperimentConfig& cfg) {
  const fs::path out(cfg.output);
  fs::create_directories(out);
  auto good = std::make_shared<GoodSet<Dim>>(good_set<Dim>(u, cfg.lambda(), box, cfg.resolution()));
  good->write_mask((out / "good_mask.bin").string());
  if (good->bad_count() == 0) {
    std::cout << "empty bad set; 0 cubes\n";
    return 0;
  }
  auto geo = std::make_shared<VoxelBadSet<Dim>>(good);
  const auto cover = build_cover<Dim>(geo, cfg.epsilon);
  if constexpr (Dim == 3)
    write_cover_csv(cover, (out / "cover.csv").string());
  else
    write_cover_csv2(cover, (out / "cover.csv").string());
  const double h = good->grid.spacing;
  const auto samples = interior_bad_samples(cover, cfg.samples, cfg.seed, sample_exclusion(cover, h));
  const auto r = check_cover_invariants(cover, samples, h / 4, 152);

  const std::pair<const char*, std::int64_t> rows[] = {
      {"(i*)   disjoint interiors", r.disjointness},
      {"(ii*)  union covers the bad set", r.covering},
      {"(iii*) side comparable to distance", r.distance_comparability},
      {"(iv*)  touching cubes comparable", r.neighbour_comparability},
      {"(v*)   bounded overlap", r.bounded_overlap},
      {"       projection point distance", r.projection},
      {"       enlarged cubes stay in the bad set", r.enlarged}};
  std::printf("lambda %g, resolution %d: %zu cubes, %lld dropped, %lld samples\n", cfg.lambda(), cfg.resolution(),
              cover.size(), static_cast<long long>(cover.dropped), static_cast<long long>(r.samples));
  for (const auto& [name, v] : rows)
    std::printf("%-4s  %-42s %lld violations\n", v == 0 ? "PASS" : "FAIL", name, static_cast<long long>(v));
  std::printf("max neighbours %d, max multiplicity %d, dist/side in [%.3f, %.3f]\n", r.max_neighbours,
              r.max_multiplicity, r.min_distance_ratio, r.max_distance_ratio);

  nlohmann::json j = {{"cubes", cover.size()},
                      {"dropped", cover.dropped},
                      {"samples", r.samples},
                      {"disjointness", r.disjointness},
                      {"covering", r.covering},
                      {"distance_comparability", r.distance_comparability},
                      {"neighbour_comparability", r.neighbour_comparability},
                      {"bounded_overlap", r.bounded_overlap},
                      {"projection", r.projection},
                      {"enlarged", r.enlarged},
                      {"max_neighbours", r.max_neighbours},
                      {"max_multiplicity", r.max_multiplicity},
                      {"min_distance_ratio", r.min_distance_ratio},
                      {"max_distance_ratio", r.max_distance_ratio}};
  write_text(out / "cover_invariants.json", j.dump(2) + "\n");
  return r.violations() == 0 ? 0 : 1;
}

int cmd_cover(const Overrides& o) {
  const auto cfg = load(o);
  if (cfg.dim == 2)
    return run_cover<2>(make_field2(cfg.field), Box<2>(cfg.box_lo.head<2>(), cfg.box_hi.head<2>()), cfg);
  return run_cover<3>(make_field3(cfg.field), cfg.box(), cfg);
}

int cmd_truncate(const Overrides& o) {
  const auto cfg = load(o);
  if (cfg.dim != 3) throw DimensionError("truncate needs dim 3");
  const fs::path out(cfg.output);
  fs::create_directories(out);
  const auto u = make_field3(cfg.field);
  const auto c = build_case(u, cfg.box(), cfg.lambda(), cfg.resolution(), cfg.epsilon, cfg.rules);
  const auto& tr = *c.truncator;
  // Bad nodes closer to X than the smallest admitted cube reaches lie in no
  // enlarged cube; they are written as NaN.
  std::atomic<std::int64_t> uncovered{0};
  const auto grid = sample_to_grid(
      [&](const Vec3& y) -> Vec3 {
        try {
          return tr.value(y);
        } catch (const CoverDefectError&) {
          ++uncovered;
          return Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
        }
      },
      c.good->grid);
  grid.write((out / "truncated.bin").string());
  tr.write_pair_csv((out / "pairs.csv").string());
  tr.write_triple_csv((out / "triples.csv").string());
  std::printf("lambda %g, resolution %d: %zu cubes, %zu pairs, %zu triples, %lld grid nodes, %lld uncovered (NaN)\n",
              c.lambda, c.resolution, c.cover->size(), tr.pair_count(), tr.triple_count(),
              static_cast<long long>(grid.grid.size()), static_cast<long long>(uncovered.load()));
  return 0;
}

int cmd_verify(const Overrides& o) {
  const auto cfg = load(o);
  const fs::path out(cfg.output);
  fs::create_directories(out);
  const auto rep = verify_experiment(cfg);
  write_text(out / "report.json", rep.json_text());
  write_text(out / "report.csv", rep.csv_text());
  std::cout << rep.summary_table();
  std::cout << (rep.passed() ? "all checks passed\n" : "some checks failed\n");
  return rep.passed() ? 0 : 1;
}

int cmd_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read report " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed report " + path + ": " + e.what());
  }
  const auto rep = VerificationReport::from_json(j);
  std::cout << rep.summary_table();
  for (const auto& r : rep.records())
    if (!r.pass) std::cout << r.check_id << ": " << r.note << "\n";
  return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solenoidal Lipschitz truncation: covers, truncations and verification reports"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment JSON config")->check(CLI::ExistingFile);
    sub->add_option("--lambda", o.lambda, "override the lambda ladder with one value");
    sub->add_option("--seed", o.seed, "override the seed");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* cover = app.add_subcommand("cover", "Whitney cover CSV and invariant summary");
  auto* truncate = app.add_subcommand("truncate", "grid samples of T u and corrector tables");
  auto* verify = app.add_subcommand("verify", "run the verification suites");
  add_common(cover);
  add_common(truncate);
  add_common(verify);
  auto* report = app.add_subcommand("report", "print a saved report");
  std::string report_path = "out/report.json";
  report->add_option("path", report_path, "report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*cover) return cmd_cover(o);
    if (*truncate) return cmd_truncate(o);
    if (*verify) return cmd_verify(o);
    return cmd_report(report_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
