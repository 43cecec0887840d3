#include "p2m/config.hpp"
#include "p2m/corrupt.hpp"
#include "p2m/io.hpp"
#include "p2m/losses.hpp"
#include "p2m/nn/prior_net.hpp"
#include "p2m/shapes.hpp"

#include <gtest/gtest.h>
#include <spdlog/spdlog.h>

#include <cstring>
#include <fstream>
#include <sstream>

using namespace p2m;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / "p2m_io";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool bit_equal(const Vec3& a, const Vec3& b) { return std::memcmp(a.data(), b.data(), sizeof(double) * 3) == 0; }

PointCloud random_cloud(std::size_t n, std::uint64_t seed, bool normals) {
  Rng rng(seed);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    // Mixed magnitudes exercise the shortest-representation printer.
    const double scale = std::pow(10.0, rng.uniform(-8.0, 8.0));
    c.points.emplace_back(scale * rng.normal(), rng.normal(), 1e-300 * rng.normal());
    if (normals) c.normals.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
  }
  return c;
}

void expect_same_cloud(const PointCloud& a, const PointCloud& b) {
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a.normals.size(), b.normals.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(bit_equal(a.points[i], b.points[i])) << i;
    if (a.has_normals()) {
      EXPECT_TRUE(bit_equal(a.normals[i], b.normals[i])) << i;
    }
  }
}

void expect_same_mesh(const Mesh& a, const Mesh& b) {
  ASSERT_EQ(a.vertex_count(), b.vertex_count());
  ASSERT_EQ(a.faces(), b.faces());
  for (std::size_t i = 0; i < a.vertex_count(); ++i) EXPECT_TRUE(bit_equal(a.vertices()[i], b.vertices()[i])) << i;
}

std::size_t parse_error_line(const fs::path& path, bool mesh) {
  try {
    if (mesh) {
      io::read_mesh(path);
    } else {
      io::read_point_cloud(path);
    }
  } catch (const io::ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ParseError for " << path;
  return 0;
}

}  // namespace

TEST(ReadPointCloud, AsciiPlyWithNormals) {
  const fs::path path = scratch("three.ply");
  write_text(path,
             "ply\nformat ascii 1.0\ncomment three points\nelement vertex 3\n"
             "property float x\nproperty float y\nproperty float z\n"
             "property float nx\nproperty float ny\nproperty float nz\nend_header\n"
             "0 0 0 0 0 2\n1 0 0 3 4 0\n0 1 0 0 1 0\n");
  const PointCloud c = io::read_point_cloud(path);
  ASSERT_EQ(c.size(), 3u);
  ASSERT_EQ(c.normals.size(), 3u);
  EXPECT_EQ(c.normals[0], Vec3(0, 0, 1));
  EXPECT_NEAR((c.normals[1] - Vec3(0.6, 0.8, 0)).norm(), 0.0, 1e-15);
  for (const Vec3& n : c.normals) EXPECT_NEAR(n.norm(), 1.0, 1e-15);
  EXPECT_EQ(c.points[1], Vec3(1, 0, 0));
}

TEST(ReadPointCloud, XyzWithoutNormals) {
  const fs::path path = scratch("two.xyz");
  write_text(path, "0 0 0\n1 0 0");
  const PointCloud c = io::read_point_cloud(path);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_FALSE(c.has_normals());
}

TEST(ReadPointCloud, MixedNormalsAreDropped) {
  const fs::path path = scratch("mixed.xyz");
  write_text(path, "# comment\n0 0 0 0 0 1\n\n1 0 0\r\n2 0 0 1 0 0\n");
  const PointCloud c = io::read_point_cloud(path);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_FALSE(c.has_normals());

  const fs::path obj = scratch("mixed.obj");
  write_text(obj, "v 0 0 0\nv 1 0 0\nvn 0 0 1\n");
  EXPECT_FALSE(io::read_point_cloud(obj).has_normals());
}

TEST(ReadPointCloud, ZeroNormalDropsAll) {
  const fs::path path = scratch("zero_normal.xyz");
  write_text(path, "0 0 0 0 0 1\n1 0 0 0 0 0\n");
  EXPECT_FALSE(io::read_point_cloud(path).has_normals());
}

TEST(ReadPointCloud, ObjVertexAndNormalLines) {
  const fs::path path = scratch("cloud.obj");
  write_text(path, "# obj\nv 0 0 0\nvn 0 0 1\nv 1 2 3 1.0\nvn 0 1 0\nf 1 2 1\n");
  const PointCloud c = io::read_point_cloud(path);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[1], Vec3(1, 2, 3));
  ASSERT_TRUE(c.has_normals());
  EXPECT_EQ(c.normals[1], Vec3(0, 1, 0));
}

TEST(ReadPointCloud, ThirdPartyBinaryPly) {
  // float32 coordinates, an extra property, and an unrelated element after the vertices.
  std::string data =
      "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nproperty uchar red\nelement edge 1\nproperty int vertex1\nproperty int vertex2\nend_header\n";
  const float xyz[2][3] = {{0.5f, -1.25f, 2.0f}, {3.0f, 4.0f, 5.0f}};
  for (const auto& p : xyz) {
    data.append(reinterpret_cast<const char*>(p), sizeof(p));
    data.push_back(static_cast<char>(200));
  }
  const std::int32_t edge[2] = {0, 1};
  data.append(reinterpret_cast<const char*>(edge), sizeof(edge));
  const fs::path path = scratch("third_party.ply");
  write_text(path, data);
  const PointCloud c = io::read_point_cloud(path);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[0], Vec3(0.5, -1.25, 2.0));
  EXPECT_EQ(c.points[1], Vec3(3, 4, 5));
}

TEST(ReadPointCloud, ErrorsCarryLineNumbers) {
  const fs::path xyz = scratch("bad.xyz");
  write_text(xyz, "0 0 0\n1 0\n");
  EXPECT_EQ(parse_error_line(xyz, false), 2u);
  write_text(xyz, "0 0 0\n1 0 0\n1 0 zz\n");
  EXPECT_EQ(parse_error_line(xyz, false), 3u);
  write_text(xyz, "0 0 nan\n");
  EXPECT_EQ(parse_error_line(xyz, false), 1u);

  const fs::path ply = scratch("bad.ply");
  write_text(ply, "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\n"
                  "end_header\n0 0 0\n1 1\n");
  EXPECT_EQ(parse_error_line(ply, false), 9u);
  write_text(ply, "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty banana y\nend_header\n0 0\n");
  EXPECT_EQ(parse_error_line(ply, false), 5u);
  write_text(ply, "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n");
  EXPECT_EQ(parse_error_line(ply, false), 2u);
}

TEST(ReadPointCloud, RejectsEmptyAndUnknown) {
  const fs::path empty = scratch("empty.xyz");
  write_text(empty, "# nothing\n");
  EXPECT_THROW(io::read_point_cloud(empty), io::ParseError);
  const fs::path unknown = scratch("cloud.las");
  write_text(unknown, "0 0 0\n");
  EXPECT_THROW(io::read_point_cloud(unknown), io::ParseError);
  EXPECT_THROW(io::read_point_cloud(scratch("missing.ply")), io::ParseError);
}

TEST(PointCloudRoundTrip, EveryFormatIsBitExact) {
  const PointCloud with = random_cloud(500, 3, true);
  const PointCloud without = random_cloud(300, 4, false);
  for (const char* name : {"rt.ply", "rt.xyz", "rt.obj"}) {
    for (auto enc : {io::PlyEncoding::Ascii, io::PlyEncoding::BinaryLittleEndian}) {
      for (const PointCloud* c : {&with, &without}) {
        const fs::path path = scratch(name);
        io::write_point_cloud(*c, path, enc);
        SCOPED_TRACE(name);
        expect_same_cloud(*c, io::read_point_cloud(path));
      }
    }
  }
}

TEST(PointCloudRoundTrip, BinaryWriterIsByteStable) {
  const PointCloud c = random_cloud(2000, 5, true);
  const fs::path a = scratch("stable_a.ply"), b = scratch("stable_b.ply");
  io::write_point_cloud(c, a);
  io::write_point_cloud(io::read_point_cloud(a), b);
  EXPECT_EQ(read_bytes(a), read_bytes(b));
}

TEST(MeshRoundTrip, Tetrahedron) {
  const Mesh t = shapes::tetrahedron();
  for (const char* name : {"tet.obj", "tet.ply"}) {
    for (auto enc : {io::PlyEncoding::Ascii, io::PlyEncoding::BinaryLittleEndian}) {
      const fs::path path = scratch(name);
      io::write_mesh(t, path, enc);
      expect_same_mesh(t, io::read_mesh(path));
    }
  }
}

TEST(MeshRoundTrip, TenThousandFaces) {
  Mesh m = shapes::torus(1.0, 0.3, 100, 50);
  ASSERT_EQ(m.face_count(), 10000u);
  Rng rng(9);
  std::vector<Vec3> v = m.vertices();
  for (Vec3& p : v) p += 1e-3 * Vec3(rng.normal(), rng.normal(), rng.normal());
  m = m.with_vertices(v);
  for (const char* name : {"big.obj", "big.ply"}) {
    for (auto enc : {io::PlyEncoding::Ascii, io::PlyEncoding::BinaryLittleEndian}) {
      const fs::path a = scratch(std::string("a_") + name), b = scratch(std::string("b_") + name);
      io::write_mesh(m, a, enc);
      const Mesh back = io::read_mesh(a);
      expect_same_mesh(m, back);
      io::write_mesh(back, b, enc);
      EXPECT_EQ(read_bytes(a), read_bytes(b));
    }
  }
}

TEST(MeshRoundTrip, EmptyMeshRejected) {
  EXPECT_THROW(io::write_mesh(Mesh(), scratch("empty.obj")), MeshError);
  const fs::path path = scratch("no_faces.obj");
  write_text(path, "v 0 0 0\nv 1 0 0\nv 0 1 0\n");
  EXPECT_THROW(io::read_mesh(path), io::ParseError);
}

TEST(ReadMesh, ObjFaceSyntax) {
  const fs::path path = scratch("syntax.obj");
  write_text(path,
             "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nvt 0 0\nvn 0 0 1\n"
             "f 1/1/1 3/1/1 2/1/1\nf 1//1 2//1 4//1\nf -3 -1 -2\nf 1 4 3\n");
  const Mesh m = io::read_mesh(path);
  ASSERT_EQ(m.face_count(), 4u);
  EXPECT_EQ(m.faces()[2], (Face{1, 3, 2}));
  EXPECT_TRUE(is_watertight(m));
}

TEST(ReadMesh, PolygonsRejectedWithLine) {
  const fs::path obj = scratch("quad.obj");
  write_text(obj, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  EXPECT_EQ(parse_error_line(obj, true), 5u);
  const fs::path ply = scratch("quad.ply");
  write_text(ply,
             "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
             "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
  EXPECT_EQ(parse_error_line(ply, true), 14u);
}

TEST(ReadMesh, IndexOutOfRange) {
  const fs::path obj = scratch("range.obj");
  write_text(obj, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
  EXPECT_EQ(parse_error_line(obj, true), 4u);
  write_text(obj, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 0\n");
  EXPECT_EQ(parse_error_line(obj, true), 4u);
  const fs::path ply = scratch("range.ply");
  write_text(ply,
             "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
             "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 -1\n");
  EXPECT_EQ(parse_error_line(ply, true), 13u);
}

// Truncations and byte corruptions of valid files must produce an error or a
// valid result, never a crash or a foreign exception.
TEST(ParserFuzz, TruncatedAndCorruptedInputs) {
  const Mesh m = shapes::icosphere(1);
  const PointCloud c = random_cloud(40, 11, true);
  std::vector<std::pair<std::string, std::string>> seeds;  // (extension, bytes)
  for (auto enc : {io::PlyEncoding::Ascii, io::PlyEncoding::BinaryLittleEndian}) {
    const fs::path mp = scratch("seed_mesh.ply"), cp = scratch("seed_cloud.ply");
    io::write_mesh(m, mp, enc);
    io::write_point_cloud(c, cp, enc);
    seeds.push_back({".ply", read_bytes(mp)});
    seeds.push_back({".ply", read_bytes(cp)});
  }
  io::write_mesh(m, scratch("seed.obj"));
  seeds.push_back({".obj", read_bytes(scratch("seed.obj"))});
  io::write_point_cloud(c, scratch("seed.xyz"));
  seeds.push_back({".xyz", read_bytes(scratch("seed.xyz"))});

  const auto level = spdlog::get_level();
  spdlog::set_level(spdlog::level::err);
  Rng rng(21);
  std::size_t accepted = 0, rejected = 0;
  auto attempt = [&](const std::string& ext, const std::string& bytes) {
    const fs::path path = scratch("fuzz" + ext);
    write_text(path, bytes);
    for (bool as_mesh : {false, true}) {
      if (as_mesh && ext == ".xyz") continue;
      try {
        if (as_mesh) {
          io::read_mesh(path);
        } else {
          io::read_point_cloud(path);
        }
        ++accepted;
      } catch (const Error&) {
        ++rejected;
      } catch (const std::exception& e) {
        ADD_FAILURE() << "foreign exception: " << e.what();
      }
    }
  };
  const char specials[] = {'\0', '\n', ' ', '-', '9', 'e', '/', '\xff', '.', 'x'};
  for (const auto& [ext, bytes] : seeds) {
    for (std::size_t cut = 0; cut < bytes.size(); cut += std::max<std::size_t>(1, bytes.size() / 150)) {
      attempt(ext, bytes.substr(0, cut));
    }
    for (int trial = 0; trial < 150; ++trial) {
      std::string mutated = bytes;
      const int edits = 1 + static_cast<int>(rng.below(4));
      for (int e = 0; e < edits; ++e) {
        // Corrupt the header more often than the payload.
        const std::size_t span = rng.uniform() < 0.6 ? std::min<std::size_t>(mutated.size(), 200) : mutated.size();
        const std::size_t pos = rng.below(span);
        mutated[pos] = rng.uniform() < 0.5 ? specials[rng.below(sizeof specials)] : static_cast<char>(rng.below(256));
      }
      attempt(ext, mutated);
    }
  }
  spdlog::set_level(level);
  EXPECT_GT(rejected, 100u);
  EXPECT_GT(accepted, 0u);
}

TEST(CorruptCloud, ZeroSigmaIsIdentity) {
  const PointCloud c = random_cloud(200, 1, true);
  CorruptionSpec spec;
  spec.seed = 5;
  const CorruptedCloud out = corrupt_cloud(c, spec);
  expect_same_cloud(c, out.cloud);
  EXPECT_TRUE(out.region_centers.empty());
}

TEST(CorruptCloud, RegionWithZeroFrequencyIsEmpty) {
  const Mesh sphere = shapes::icosphere(4);
  PointCloud c;
  c.points = sphere.vertices();
  CorruptionSpec spec;
  spec.regions = 1;
  spec.region_radius = 0.15;
  spec.region_keep = 0.0;
  spec.seed = 3;
  const CorruptedCloud out = corrupt_cloud(c, spec);
  ASSERT_EQ(out.region_centers.size(), 1u);
  const double r = 0.15 * c.bounds().diagonal();
  EXPECT_DOUBLE_EQ(out.region_radius, r);
  std::size_t inside = 0;
  for (const Vec3& p : c.points) inside += (p - out.region_centers[0]).norm() <= r ? 1 : 0;
  EXPECT_GT(inside, 20u);
  EXPECT_EQ(out.cloud.size(), c.size() - inside);
  for (const Vec3& p : out.cloud.points) EXPECT_GT((p - out.region_centers[0]).norm(), r);
}

TEST(CorruptCloud, KeepFrequencyThinsRegion) {
  PointCloud c;
  c.points = shapes::icosphere(5).vertices();
  CorruptionSpec spec;
  spec.regions = 1;
  spec.region_radius = 0.3;
  spec.region_keep = 0.25;
  const CorruptedCloud out = corrupt_cloud(c, spec);
  const double r = out.region_radius;
  std::size_t before = 0, after = 0;
  for (const Vec3& p : c.points) before += (p - out.region_centers[0]).norm() <= r ? 1 : 0;
  for (const Vec3& p : out.cloud.points) after += (p - out.region_centers[0]).norm() <= r ? 1 : 0;
  const double rate = static_cast<double>(after) / before;
  EXPECT_NEAR(rate, 0.25, 4.0 * std::sqrt(0.25 * 0.75 / before));
}

TEST(CorruptCloud, NoiseScalesWithDiagonal) {
  PointCloud c;
  c.points.assign(20000, Vec3::Zero());
  c.points[0] = Vec3(3, 4, 0);  // diagonal 5
  CorruptionSpec spec;
  spec.noise_sigma = 0.01;
  spec.seed = 8;
  const CorruptedCloud out = corrupt_cloud(c, spec);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 1; i < out.cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      sum += out.cloud.points[i][k];
      sum2 += out.cloud.points[i][k] * out.cloud.points[i][k];
    }
  }
  const double n = 3.0 * (out.cloud.size() - 1);
  EXPECT_NEAR(sum / n, 0.0, 0.002);
  EXPECT_NEAR(std::sqrt(sum2 / n - (sum / n) * (sum / n)), 0.05, 0.001);
}

TEST(CorruptCloud, FlippedNormalsLeaveUnorientedPenaltyUnchanged) {
  const Mesh sphere = shapes::icosphere(3);
  PointCloud c;
  c.points = sphere.vertices();
  for (const Vec3& p : c.points) c.normals.push_back(p.normalized());
  CorruptionSpec spec;
  spec.normal_flip = 1.0;
  const CorruptedCloud out = corrupt_cloud(c, spec);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(out.cloud.normals[i], -c.normals[i]);

  ad::Tape<double> tape;
  const auto verts = tape.constant(nn::vertex_tensor<double>(sphere));
  Rng rng(2);
  const auto batch = loss::sample_surface(verts, sphere.faces(), 500, rng);
  const PointIndex index(c.points);
  const auto ch = loss::chamfer(index, batch, false);
  const auto a = loss::normal_penalty(c.normals, batch, ch.cloud_to_sample, false);
  const auto b = loss::normal_penalty(out.cloud.normals, batch, ch.cloud_to_sample, false);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->value()[0], b->value()[0]);
}

TEST(CorruptCloud, DeterministicAndValidated) {
  const PointCloud c = random_cloud(300, 2, true);
  CorruptionSpec spec;
  spec.noise_sigma = 0.01;
  spec.regions = 2;
  spec.region_keep = 0.3;
  spec.normal_flip = 0.5;
  spec.seed = 77;
  expect_same_cloud(corrupt_cloud(c, spec).cloud, corrupt_cloud(c, spec).cloud);
  spec.seed = 78;
  EXPECT_NE(corrupt_cloud(c, spec).cloud.points[0], corrupt_cloud(c, {0.01, 2, 0.1, 0.3, 0.5, 77}).cloud.points[0]);

  CorruptionSpec all;
  all.regions = 1;
  all.region_radius = 10.0;
  EXPECT_THROW(corrupt_cloud(c, all), NumericError);
  CorruptionSpec bad;
  bad.normal_flip = 1.5;
  EXPECT_THROW(corrupt_cloud(c, bad), NumericError);
}

TEST(Config, ParsesTypedValues) {
  RunConfig cfg;
  apply_config_text(cfg,
                    "# experiment\niterations = 250\nface-growth=1.25\ninit = coarse-shell  # shell\n"
                    "beam-direction = forward\nsquared-chamfer = true\nnet-channels = 16, 32,64\nprecision = double\n"
                    "seed = 12345678901\n",
                    "exp.cfg");
  EXPECT_EQ(cfg.schedule.iterations, 250);
  EXPECT_EQ(cfg.schedule.face_growth, 1.25);
  EXPECT_EQ(cfg.init, InitMode::CoarseShell);
  EXPECT_EQ(cfg.schedule.beam_direction, loss::BeamDirection::Forward);
  EXPECT_TRUE(cfg.schedule.squared_chamfer);
  EXPECT_EQ(cfg.schedule.net.channels, (std::vector<std::size_t>{16, 32, 64}));
  EXPECT_EQ(cfg.schedule.precision, Precision::Double);
  EXPECT_EQ(cfg.schedule.seed, 12345678901u);
}

TEST(Config, ErrorsNameLineAndKey) {
  RunConfig cfg;
  auto message = [&](const std::string& text) {
    try {
      apply_config_text(cfg, text, "x.cfg");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("iterations = 5\nitterations = 3\n").find("x.cfg:2: unknown key 'itterations'"), std::string::npos);
  EXPECT_NE(message("face-growth = -1\n").find("face-growth"), std::string::npos);
  EXPECT_NE(message("iterations = 1.5\n").find("x.cfg:1"), std::string::npos);
  EXPECT_NE(message("max-faces = -3\n").find("max-faces"), std::string::npos);
  EXPECT_NE(message("init = sphere\n").find("convex-hull"), std::string::npos);
  EXPECT_NE(message("timing\n").find("key = value"), std::string::npos);
  EXPECT_NE(message("tau = inf\n").find("finite"), std::string::npos);
}

TEST(Config, TextRoundTripAndOverride) {
  RunConfig cfg;
  apply_setting(cfg, "learning-rate", "0.0003");
  apply_setting(cfg, "samples-end", "12345");
  apply_setting(cfg, "oriented-normals", "yes");
  RunConfig copy;
  apply_config_text(copy, to_config_text(cfg), "dump");
  EXPECT_EQ(to_config_text(copy), to_config_text(cfg));
  EXPECT_EQ(copy.schedule.learning_rate, 0.0003);
  EXPECT_TRUE(copy.oriented_normals);
  const std::string text = to_config_text(cfg);
  EXPECT_EQ(config_keys().size(), static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
}

TEST(Config, ValidateChecksRangesAndPaths) {
  RunConfig cfg;
  EXPECT_THROW(cfg.validate(), ConfigError);  // no input
  const fs::path input = scratch("valid.xyz");
  write_text(input, "0 0 0\n1 0 0\n");
  cfg.input = input;
  cfg.output = scratch("out.obj");
  EXPECT_NO_THROW(cfg.validate());
  cfg.schedule.samples_end = 10;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.schedule.samples_end = 25000;
  cfg.output = scratch("no_such_dir") / "out.obj";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.output = scratch("out.obj");
  cfg.init = InitMode::File;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.init_mesh = scratch("missing.obj");
  EXPECT_THROW(cfg.validate(), ConfigError);
}
