#include "cli.hpp"

#include "p2m/config.hpp"
#include "p2m/corrupt.hpp"
#include "p2m/io.hpp"
#include "p2m/metrics.hpp"
#include "p2m/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <map>

namespace p2m {

namespace {

struct RunArgs {
  std::string config;
  std::map<std::string, std::string> values;
};

void add_run_options(CLI::App& cmd, RunArgs& args) {
  cmd.add_option("--config", args.config, "key = value settings file; flags override it")->check(CLI::ExistingFile);
  for (const ConfigKey& key : config_keys()) {
    cmd.add_option("--" + key.name, args.values[key.name], key.help)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
}

RunConfig resolve(const CLI::App& cmd, const RunArgs& args) {
  RunConfig cfg;
  if (!args.config.empty()) apply_config_file(cfg, args.config);
  for (const ConfigKey& key : config_keys()) {
    if (cmd.count("--" + key.name) > 0) apply_setting(cfg, key.name, args.values.at(key.name));
  }
  if (cfg.output.empty()) throw ConfigError("no output mesh given (--out)");
  cfg.validate();
  return cfg;
}

int run(const RunConfig& cfg, bool direct) {
  PointCloud cloud = io::read_point_cloud(cfg.input);
  cloud.oriented = cfg.oriented_normals;
  spdlog::info("read {} points{} from {}", cloud.size(), cloud.has_normals() ? " with normals" : "", cfg.input.string());

  InitConfig init;
  init.mode = cfg.init;
  init.shell = cfg.shell;
  if (cfg.init == InitMode::File) init.file_mesh = io::read_mesh(cfg.init_mesh);

  const bool timing = cfg.timing;
  const IterationObserver progress = [timing](const IterationRecord& r) {
    if (r.iteration % 50 == 0) spdlog::info("{}", RunLog::format(r, timing));
  };
  const Reconstruction result =
      direct ? run_direct(cloud, init, cfg.schedule, progress) : run_reconstruction(cloud, init, cfg.schedule, progress);

  io::write_mesh(result.mesh, cfg.output);
  if (!cfg.log.empty()) {
    std::ofstream log(cfg.log, std::ios::binary | std::ios::trunc);
    if (!log) throw Error("cannot write log " + cfg.log.string());
    std::string header = to_config_text(cfg);
    for (std::size_t pos = 0; pos < header.size(); pos = header.find('\n', pos) + 1) header.insert(pos, "# ");
    log << header;
    result.log.write(log, timing);
  }

  fmt::print("{:>5} {:>8} {:>6} {:>13} {:>10} {:>14} {:>14} {:>9}\n", "level", "faces", "parts", "samples",
             "iterations", "chamfer_first", "chamfer_last", "seconds");
  for (const LevelRecord& l : result.log.levels) {
    fmt::print("{:>5} {:>8} {:>6} {:>13} {:>10} {:>14.6g} {:>14.6g} {:>9.2f}\n", l.level, l.faces, l.parts,
               fmt::format("{}..{}", l.samples_start, l.samples_end), l.iterations, l.first_chamfer, l.last_chamfer,
               timing ? l.seconds : 0.0);
  }
  const Mesh& m = result.mesh;
  const bool closed = is_watertight(m);
  fmt::print("mode={} vertices={} faces={} watertight={} genus={} output={}\n", direct ? "direct" : "network",
             m.vertex_count(), m.face_count(), closed ? "yes" : "no", closed ? std::to_string(genus(m)) : "n/a",
             cfg.output.string());
  return 0;
}

Vec3 parse_point(const std::string& text) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    try {
      std::size_t used = 0;
      const std::string item = text.substr(pos, comma - pos);
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("expected x,y,z but got '" + text + "'");
    }
    pos = comma + 1;
  }
  if (v.size() != 3) throw ConfigError("expected x,y,z but got '" + text + "'");
  return {v[0], v[1], v[2]};
}

struct EvalArgs {
  std::string recon, truth, missing_center;
  double tau = 0.01;
  double missing_radius = 0.0;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
};

int eval(const EvalArgs& a) {
  const Mesh recon = io::read_mesh(a.recon);
  const Mesh truth = io::read_mesh(a.truth);
  fmt::print("{:>10} {:>8} {:>10} {:>10} {:>10} {:>9} {:>10}\n", "metric", "tau", "precision", "recall", "f_score",
             "samples", "watertight");
  const auto row = [&](const char* name, const FScoreReport& r) {
    fmt::print("{:>10} {:>8.4g} {:>10.2f} {:>10.2f} {:>10.2f} {:>9} {:>10}\n", name, r.tau, r.precision, r.recall,
               r.f_score, r.recall_samples, is_watertight(recon) ? "yes" : "no");
  };
  row("f_score", f_score(recon, truth, a.tau, a.samples, a.seed));
  if (!a.missing_center.empty()) {
    const double radius = a.missing_radius * truth.bounds().diagonal();
    const std::vector<int> faces = faces_within(truth, parse_point(a.missing_center), radius);
    row("completion", f_score_completion(recon, truth, faces, a.tau, a.samples, a.seed));
  }
  return 0;
}

struct CorruptArgs {
  std::string input, output;
  CorruptionSpec spec;
};

int corrupt(const CorruptArgs& a) {
  const PointCloud cloud = io::read_point_cloud(a.input);
  const CorruptedCloud out = corrupt_cloud(cloud, a.spec);
  io::write_point_cloud(out.cloud, a.output);
  fmt::print("points_in={} points_out={} normals={} output={}\n", cloud.size(), out.cloud.size(),
             out.cloud.has_normals() ? "yes" : "no", a.output);
  for (std::size_t i = 0; i < out.region_centers.size(); ++i) {
    const Vec3& c = out.region_centers[i];
    fmt::print("region={} center={:.17g},{:.17g},{:.17g} radius={:.17g}\n", i, c.x(), c.y(), c.z(), out.region_radius);
  }
  return 0;
}

int info(const std::string& input, bool as_mesh) {
  const auto print_box = [](const BoundingBox& b) {
    fmt::print("bbox_min={:.9g},{:.9g},{:.9g}\nbbox_max={:.9g},{:.9g},{:.9g}\ndiagonal={:.9g}\n", b.min.x(), b.min.y(),
               b.min.z(), b.max.x(), b.max.y(), b.max.z(), b.diagonal());
  };
  if (as_mesh) {
    const Mesh m = io::read_mesh(input);
    const bool closed = is_watertight(m);
    fmt::print("vertices={}\nfaces={}\nwatertight={}\ngenus={}\n", m.vertex_count(), m.face_count(),
               closed ? "yes" : "no", closed ? std::to_string(genus(m)) : "n/a");
    print_box(m.bounds());
    return 0;
  }
  const PointCloud cloud = io::read_point_cloud(input);
  fmt::print("points={}\nnormals={}\n", cloud.size(), cloud.normals.size());
  print_box(cloud.bounds());
  if (cloud.size() >= 2) fmt::print("mean_spacing={:.9g}\n", mean_spacing(PointIndex(cloud.points)));
  return 0;
}

void use_stderr_logger() {
  auto logger = spdlog::get("p2m");
  if (!logger) logger = spdlog::stderr_logger_mt("p2m");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  use_stderr_logger();
  CLI::App app("Watertight surface reconstruction from point clouds", "p2m");
  app.require_subcommand(1);

  RunArgs recon_args, direct_args;
  CLI::App* reconstruct = app.add_subcommand("reconstruct", "Fit a mesh with the network prior");
  add_run_options(*reconstruct, recon_args);
  CLI::App* direct = app.add_subcommand("direct", "Fit a mesh by optimizing vertex offsets directly");
  add_run_options(*direct, direct_args);

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "F-score of a reconstruction against a reference mesh");
  eval_cmd->add_option("--recon", eval_args.recon, "reconstructed mesh")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", eval_args.truth, "reference mesh")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--tau", eval_args.tau, "threshold as a fraction of the reference diagonal")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--samples", eval_args.samples, "surface samples per mesh")->check(CLI::Range(10000, 100000000));
  eval_cmd->add_option("--seed", eval_args.seed, "sampling seed");
  eval_cmd->add_option("--missing-center", eval_args.missing_center, "x,y,z of a removed region (completion recall)");
  eval_cmd->add_option("--missing-radius", eval_args.missing_radius, "removed region radius as a fraction of the diagonal")
      ->check(CLI::PositiveNumber);

  CorruptArgs corrupt_args;
  CLI::App* corrupt_cmd = app.add_subcommand("corrupt", "Add noise, remove regions or flip normals");
  corrupt_cmd->add_option("--input", corrupt_args.input, "input point cloud")->required()->check(CLI::ExistingFile);
  corrupt_cmd->add_option("--out", corrupt_args.output, "output point cloud")->required();
  corrupt_cmd->add_option("--noise", corrupt_args.spec.noise_sigma, "noise sigma as a fraction of the diagonal");
  corrupt_cmd->add_option("--regions", corrupt_args.spec.regions, "number of low-density regions");
  corrupt_cmd->add_option("--region-radius", corrupt_args.spec.region_radius, "region radius as a fraction of the diagonal");
  corrupt_cmd->add_option("--region-keep", corrupt_args.spec.region_keep, "probability of keeping a point inside a region");
  corrupt_cmd->add_option("--normal-flip", corrupt_args.spec.normal_flip, "probability of flipping each normal");
  corrupt_cmd->add_option("--seed", corrupt_args.spec.seed, "random seed");

  std::string info_input;
  bool info_mesh = false;
  CLI::App* info_cmd = app.add_subcommand("info", "Summarize a point cloud or mesh");
  info_cmd->add_option("--input", info_input, "point cloud or mesh file")->required()->check(CLI::ExistingFile);
  info_cmd->add_flag("--mesh", info_mesh, "read the file as a triangle mesh");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (reconstruct->parsed()) return run(resolve(*reconstruct, recon_args), false);
    if (direct->parsed()) return run(resolve(*direct, direct_args), true);
    if (eval_cmd->parsed()) return eval(eval_args);
    if (corrupt_cmd->parsed()) return corrupt(corrupt_args);
    if (info_cmd->parsed()) return info(info_input, info_mesh);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 1;
}

}  // namespace p2m
