#include "p2m/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace p2m {

namespace {

namespace fs = std::filesystem;

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return !std::isspace(static_cast<unsigned char>(c)); };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const std::string& expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": expected " + expected);
}

template <class T>
T parse_number(std::string_view key, std::string_view s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    bad_value(key, s, std::is_integral_v<T> ? "an integer" : "a number");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) bad_value(key, s, "a finite number");
  }
  return v;
}

double positive(std::string_view key, std::string_view s) {
  const double v = parse_number<double>(key, s);
  if (!(v > 0.0)) bad_value(key, s, "a positive number");
  return v;
}

double non_negative(std::string_view key, std::string_view s) {
  const double v = parse_number<double>(key, s);
  if (v < 0.0) bad_value(key, s, "a non-negative number");
  return v;
}

std::size_t count(std::string_view key, std::string_view s) {
  if (!s.empty() && s.front() == '-') bad_value(key, s, "a non-negative integer");
  return parse_number<std::size_t>(key, s);
}

bool boolean(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, s, "true or false");
}

std::string number_text(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

const char* init_name(InitMode m) {
  switch (m) {
    case InitMode::ConvexHull: return "convex-hull";
    case InitMode::CoarseShell: return "coarse-shell";
    case InitMode::File: return "file";
  }
  return "";
}

const char* direction_name(loss::BeamDirection d) {
  switch (d) {
    case loss::BeamDirection::Forward: return "forward";
    case loss::BeamDirection::Backward: return "backward";
    case loss::BeamDirection::Both: return "both";
  }
  return "";
}

struct Entry {
  ConfigKey key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Entry>& entries() {
  using S = std::string_view;
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    auto add = [&](std::string name, std::string help, std::function<void(RunConfig&, S)> set,
                   std::function<std::string(const RunConfig&)> get) {
      t.push_back({{std::move(name), std::move(help)}, std::move(set), std::move(get)});
    };
#define P2M_COUNT(name, help, field)                                                                 \
  add(name, help, [](RunConfig& c, S v) { c.field = count(name, v); },                               \
      [](const RunConfig& c) { return std::to_string(c.field); })
#define P2M_INT(name, help, field)                                                                   \
  add(name, help, [](RunConfig& c, S v) { c.field = parse_number<int>(name, v); },                   \
      [](const RunConfig& c) { return std::to_string(c.field); })
#define P2M_REAL(name, help, field, check)                                                           \
  add(name, help, [](RunConfig& c, S v) { c.field = check(name, v); },                               \
      [](const RunConfig& c) { return number_text(c.field); })
#define P2M_BOOL(name, help, field)                                                                  \
  add(name, help, [](RunConfig& c, S v) { c.field = boolean(name, v); },                             \
      [](const RunConfig& c) { return bool_text(c.field); })
#define P2M_PATH(name, help, field)                                                                  \
  add(name, help, [](RunConfig& c, S v) { c.field = fs::path(std::string(v)); },                     \
      [](const RunConfig& c) { return c.field.string(); })

    P2M_PATH("input", "input point cloud (.ply, .obj, .xyz)", input);
    P2M_PATH("out", "output mesh (.obj, .ply)", output);
    P2M_PATH("log", "per-iteration loss log", log);
    add("init", "initial mesh: convex-hull, coarse-shell or file",
        [](RunConfig& c, S v) {
          if (v == "convex-hull") {
            c.init = InitMode::ConvexHull;
          } else if (v == "coarse-shell") {
            c.init = InitMode::CoarseShell;
          } else if (v == "file") {
            c.init = InitMode::File;
          } else {
            bad_value("init", v, "convex-hull, coarse-shell or file");
          }
        },
        [](const RunConfig& c) { return std::string(init_name(c.init)); });
    P2M_PATH("init-mesh", "initial mesh file for init = file", init_mesh);
    add("seed", "random seed", [](RunConfig& c, S v) { c.schedule.seed = parse_number<std::uint64_t>("seed", v); },
        [](const RunConfig& c) { return std::to_string(c.schedule.seed); });
    P2M_BOOL("oriented-normals", "trust normal signs in the normal penalty", oriented_normals);
    P2M_INT("iterations", "optimizer steps per level", schedule.iterations);
    P2M_COUNT("initial-faces", "face count of the initial mesh", schedule.initial_faces);
    P2M_REAL("face-growth", "face count factor between levels", schedule.face_growth, positive);
    P2M_COUNT("max-faces", "face budget", schedule.max_faces);
    P2M_INT("max-levels", "maximum number of levels", schedule.max_levels);
    P2M_COUNT("samples-start", "surface samples at the start of a level", schedule.samples_start);
    P2M_COUNT("samples-end", "surface samples at the end of a level", schedule.samples_end);
    P2M_REAL("learning-rate", "Adam step size", schedule.learning_rate, positive);
    P2M_REAL("chamfer-weight", "weight of the Chamfer term", schedule.weights.chamfer, non_negative);
    P2M_REAL("beam-weight", "weight of the beam-gap term", schedule.weights.beam, non_negative);
    P2M_REAL("normal-weight", "weight of the normal term", schedule.weights.normal, non_negative);
    P2M_INT("beam-cadence", "beam-gap term every this many iterations", schedule.weights.beam_cadence);
    P2M_INT("beam-first-level", "first level (zero-based) using the beam-gap term", schedule.weights.beam_first_level);
    P2M_REAL("beam-radius", "beam radius in units of the mean point spacing", schedule.beam_spacing_factor, positive);
    add("beam-direction", "beam direction: forward, backward or both",
        [](RunConfig& c, S v) {
          if (v == "forward") {
            c.schedule.beam_direction = loss::BeamDirection::Forward;
          } else if (v == "backward") {
            c.schedule.beam_direction = loss::BeamDirection::Backward;
          } else if (v == "both") {
            c.schedule.beam_direction = loss::BeamDirection::Both;
          } else {
            bad_value("beam-direction", v, "forward, backward or both");
          }
        },
        [](const RunConfig& c) { return std::string(direction_name(c.schedule.beam_direction)); });
    P2M_COUNT("mutual-k", "k of the mutual nearest-neighbour fit test", schedule.mutual_k);
    P2M_BOOL("squared-chamfer", "use squared distances in the Chamfer term", schedule.squared_chamfer);
    P2M_INT("part-grid", "parts per axis once the mesh is large", schedule.part_grid);
    P2M_COUNT("part-threshold", "face count above which the mesh is split", schedule.part_threshold);
    P2M_REAL("part-margin", "part overlap as a fraction of the extent", schedule.part_margin, non_negative);
    P2M_COUNT("remesh-budget", "voxels crossing the surface when remeshing", schedule.remesh_budget);
    P2M_REAL("min-improvement", "stop once saturated and a level gains less than this", schedule.min_improvement,
             non_negative);
    add("precision", "network arithmetic: single or double",
        [](RunConfig& c, S v) {
          if (v == "single") {
            c.schedule.precision = Precision::Single;
          } else if (v == "double") {
            c.schedule.precision = Precision::Double;
          } else {
            bad_value("precision", v, "single or double");
          }
        },
        [](const RunConfig& c) { return std::string(c.schedule.precision == Precision::Single ? "single" : "double"); });
    add("net-channels", "comma-separated channels per encoder stage",
        [](RunConfig& c, S v) {
          std::vector<std::size_t> ch;
          while (!v.empty()) {
            const std::size_t comma = v.find(',');
            const S item = trim(v.substr(0, comma));
            const std::size_t n = count("net-channels", item);
            if (n == 0) bad_value("net-channels", item, "a positive channel count");
            ch.push_back(n);
            v = comma == S::npos ? S() : v.substr(comma + 1);
          }
          if (ch.empty()) bad_value("net-channels", v, "at least one stage");
          c.schedule.net.channels = std::move(ch);
        },
        [](const RunConfig& c) {
          std::string s;
          for (std::size_t ch : c.schedule.net.channels) s += (s.empty() ? "" : ",") + std::to_string(ch);
          return s;
        });
    P2M_REAL("net-pool", "share of edges removed per encoder stage", schedule.net.pool_fraction, non_negative);
    P2M_INT("net-residual", "residual blocks per stage", schedule.net.residual_blocks);
    P2M_COUNT("shell-voxels", "occupied voxel budget of the coarse shell", shell.leaf_budget);
    P2M_REAL("shell-dilation", "coarse shell dilation in voxels", shell.dilation_voxels, non_negative);
    P2M_REAL("tau", "F-score threshold as a fraction of the truth diagonal", tau, positive);
    P2M_COUNT("eval-samples", "surface samples per mesh for the F-score", eval_samples);
    P2M_BOOL("timing", "record wall-clock times in the log", timing);
#undef P2M_COUNT
#undef P2M_INT
#undef P2M_REAL
#undef P2M_BOOL
#undef P2M_PATH
    return t;
  }();
  return table;
}

void check_writable(const fs::path& path, const char* what) {
  if (path.empty()) return;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw ConfigError(std::string(what) + " directory does not exist: " + dir.string());
  }
}

void check_readable(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string(what) + " is not readable: " + path.string());
}

}  // namespace

void RunConfig::validate() const {
  try {
    schedule.validate();
    shell.validate();
    if (schedule.net.channels.empty()) throw NumericError("net-channels needs at least one stage");
    if (!(schedule.net.pool_fraction < 1.0)) throw NumericError("net-pool must be below 1");
    if (schedule.net.residual_blocks < 0) throw NumericError("net-residual must be non-negative");
    if (eval_samples < 10000) throw NumericError("eval-samples must be at least 10000");
  } catch (const NumericError& e) {
    throw ConfigError(e.what());
  }
  if (input.empty()) throw ConfigError("no input given");
  check_readable(input, "input");
  if (init == InitMode::File) {
    if (init_mesh.empty()) throw ConfigError("init = file needs init-mesh");
    check_readable(init_mesh, "initial mesh");
  }
  check_writable(output, "output");
  check_writable(log, "log");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Entry& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const Entry& e : entries()) {
    if (e.key.name == key) {
      e.set(cfg, trim(value));
      return;
    }
  }
  throw ConfigError("unknown key '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& source) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  for (const Entry& e : entries()) out += e.key.name + " = " + e.get(cfg) + '\n';
  return out;
}

}  // namespace p2m
