#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sgsg/scene.hpp"
#include "support/gradcheck.hpp"
#include "support/synthetic.hpp"

using namespace sgsg;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "sgsg_scene_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

SceneEncoderVars<double> bind_encoder(Tape<double>& tape, ParamStore<double>& ps) {
  return {ps.bind(tape, "c1w"), ps.bind(tape, "c1b"), ps.bind(tape, "c2w"),
          ps.bind(tape, "c2b"), ps.bind(tape, "fcw"), ps.bind(tape, "fcb")};
}

// Biases drawn away from zero: finite differences across a ReLU kink would
// otherwise poison the gradient comparison.
ParamStore<double> encoder_params(int channels, int size, int c1, int c2, int out,
                                  std::uint64_t seed, bool zeros = false) {
  ParamStore<double> ps;
  std::mt19937_64 rng(seed);
  auto weights = [&](Shape shape, int fan_in) {
    return zeros ? Tensor<double>(shape) : uniform_fan_in<double>(shape, fan_in, rng);
  };
  auto biases = [&](int n) {
    Tensor<double> t(Shape{n});
    if (!zeros) {
      std::uniform_real_distribution<double> dist(0.05, 0.4);
      std::bernoulli_distribution sign(0.5);
      for (int i = 0; i < n; ++i) t.data[i] = (sign(rng) ? 1.0 : -1.0) * dist(rng);
    }
    return t;
  };
  ps.add("c1w", weights(Shape{c1, channels, 3, 3}, channels * 9));
  ps.add("c1b", biases(c1));
  ps.add("c2w", weights(Shape{c2, c1, 3, 3}, c1 * 9));
  ps.add("c2b", biases(c2));
  const int flat = c2 * (size / 4) * (size / 4);
  ps.add("fcw", weights(Shape{out, flat}, flat));
  ps.add("fcb", biases(out));
  return ps;
}

}  // namespace

TEST_CASE("raster from text: all-walkable and obstacle counting") {
  {
    std::string grid;
    for (int r = 0; r < 64; ++r) grid += std::string(64, '0') + "\n";
    std::istringstream in(grid);
    const auto raster = raster_from_text(in, "t", 3, 0.25, {0, 0});
    CHECK(raster.grid.head(64 * 64).sum() == doctest::Approx(64 * 64));
    CHECK(raster.grid.tail(2 * 64 * 64).sum() == doctest::Approx(0.0));
  }
  {
    std::vector<std::string> lines(64, std::string(64, '0'));
    for (int r = 20; r < 30; ++r)
      for (int c = 40; c < 50; ++c) lines[r][c] = '1';
    std::string grid;
    for (const auto& l : lines) grid += l + "\n";
    std::istringstream in(grid);
    const auto raster = raster_from_text(in, "t", 3, 0.25, {0, 0});
    CHECK(raster.grid.segment(64 * 64, 64 * 64).sum() == doctest::Approx(100.0));
  }
  {
    std::istringstream in("012\n345\n");  // class 3+ exceed channels
    CHECK_THROWS_AS(raster_from_text(in, "t", 3, 1.0, {0, 0}), FormatError);
  }
}

TEST_CASE("raster validation rejects non-one-hot cells") {
  SceneRaster r = make_uniform_raster(3, 4, 4);
  r.grid[0] = 1.0f;
  r.grid[4 * 4] = 1.0f;  // cell (0,0) now sums to 2
  CHECK_THROWS_AS(r.validate(), FormatError);
  SceneRaster r2 = make_uniform_raster(3, 4, 4);
  r2.grid[0] = 0.0f;  // sums to 0
  CHECK_THROWS_AS(r2.validate(), FormatError);
}

TEST_CASE("raster save/load roundtrip and corrupt files") {
  const auto dir = temp_dir();
  const auto raster = sgsg::test::obstacle_raster(16, 31);
  const auto path = dir / "a.raster";
  save_raster(path, raster);
  const auto loaded = load_raster(path);
  CHECK(loaded.channels == raster.channels);
  CHECK(loaded.height == raster.height);
  CHECK(loaded.width == raster.width);
  CHECK(loaded.meters_per_cell == raster.meters_per_cell);
  CHECK(loaded.grid == raster.grid);

  {
    std::ofstream bad(dir / "bad.raster", std::ios::binary);
    bad << "NOTMAGIC" << std::string(64, '\0');
  }
  CHECK_THROWS_AS(load_raster(dir / "bad.raster"), FormatError);

  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(dir / "trunc.raster", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_raster(dir / "trunc.raster"), FormatError);
}

TEST_CASE("raster rotation preserves one-hot and matches point rotation") {
  const auto raster = sgsg::test::obstacle_raster(16, 77);
  const auto rotated = rotate90_raster(raster);
  rotated.validate();

  // fourfold rotation returns the original grid
  auto r4 = raster;
  for (int i = 0; i < 4; ++i) r4 = rotate90_raster(r4);
  CHECK(r4.grid == raster.grid);

  // the class under a world point is invariant when both rotate
  auto class_at = [](const SceneRaster& r, const Eigen::Vector2d& world) {
    const int col = static_cast<int>((world.x() - r.origin.x()) / r.meters_per_cell);
    const int row = static_cast<int>((world.y() - r.origin.y()) / r.meters_per_cell);
    REQUIRE(col >= 0);
    REQUIRE(row >= 0);
    REQUIRE(col < r.width);
    REQUIRE(row < r.height);
    for (int c = 0; c < r.channels; ++c) {
      if (r.at(c, row, col) == 1.0f) return c;
    }
    return -1;
  };
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.5, 15.5);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d p(u(rng), u(rng));
    CHECK(class_at(raster, p) == class_at(rotated, rotate90(p)));
  }
}

TEST_CASE("encode_scene: zeros, purity, and sensitivity to the map") {
  const int size = 16;
  const auto raster = sgsg::test::obstacle_raster(size, 3);
  {
    auto ps = encoder_params(3, size, 4, 8, 32, 1, /*zeros=*/true);
    Tape<double> tape;
    const auto s = encode_scene(tape, bind_encoder(tape, ps), raster);
    CHECK(s.value().numel() == 32);
    CHECK(s.value().data.isZero(0));
  }
  {
    auto ps = encoder_params(3, size, 4, 8, 32, 2);
    Tape<double> tape;
    const auto s1 = encode_scene(tape, bind_encoder(tape, ps), raster);
    const auto s2 = encode_scene(tape, bind_encoder(tape, ps), raster);
    CHECK(s1.value().data == s2.value().data);  // purity, bitwise

    SceneRaster changed = raster;
    // move one obstacle cell
    for (int c = 0; c < 3; ++c) {
      changed.grid[(static_cast<Eigen::Index>(c) * size + 8) * size + 8] = c == 1 ? 1.0f : 0.0f;
    }
    const auto s3 = encode_scene(tape, bind_encoder(tape, ps), changed);
    CHECK((s1.value().data - s3.value().data).cwiseAbs().maxCoeff() > 1e-12);
  }
}

TEST_CASE("encode_scene gradients match finite differences on a small raster") {
  const int size = 8;
  const auto raster = sgsg::test::obstacle_raster(size, 13);
  auto ps = encoder_params(3, size, 2, 3, 4, 7);
  auto eval = [&]() {
    Tape<double> tape;
    return sum_squares(encode_scene(tape, bind_encoder(tape, ps), raster)).value().data[0];
  };
  Tape<double> tape;
  const auto s = encode_scene(tape, bind_encoder(tape, ps), raster);
  tape.backward(sum_squares(s).id());
  ps.zero_grad();
  ps.collect(tape);
  const auto res = sgsg::test::check_gradients(ps, eval);
  CAPTURE(res.worst);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("gate: sigmoid gating, saturation, annihilation, contraction") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  VecX<double> gv(32);
  for (int i = 0; i < 32; ++i) {
    gv[i] = dist(rng);
    if (gv[i] == 0.0) gv[i] = 0.5;
  }
  Tape<double> tape;
  Var<double> g = make_vec(tape, gv);

  {
    Var<double> s = make_zeros(tape, 32);
    const auto out = merge_features(s, g, MergeMode::gating);
    CHECK((out.value().data - 0.5 * gv).cwiseAbs().maxCoeff() < 1e-15);
  }
  {
    Var<double> s = make_vec(tape, VecX<double>(VecX<double>::Constant(32, 50.0)));
    const auto out = merge_features(s, g, MergeMode::gating);
    CHECK((out.value().data - gv).cwiseAbs().maxCoeff() < 1e-9);
  }
  {
    Var<double> s = make_vec(tape, VecX<double>(VecX<double>::Constant(32, 0.3)));
    Var<double> zero = make_zeros(tape, 32);
    const auto out = merge_features(s, zero, MergeMode::gating);
    CHECK(out.value().data.isZero(0));
  }
  {
    // strict contraction for nonzero g, any finite s within sigmoid's open range
    VecX<double> sv(32);
    for (int i = 0; i < 32; ++i) sv[i] = dist(rng) * 10.0;
    const auto out = merge_features(make_vec(tape, sv), g, MergeMode::gating);
    for (int i = 0; i < 32; ++i) {
      CHECK(std::abs(out.value().data[i]) < std::abs(gv[i]));
    }
  }
  {
    // gating is monotone in s per coordinate when g > 0
    VecX<double> gpos = gv.cwiseAbs();
    VecX<double> lo = VecX<double>::Constant(32, -1.0);
    VecX<double> hi = VecX<double>::Constant(32, 1.0);
    const auto out_lo = merge_features(make_vec(tape, lo), make_vec(tape, gpos), MergeMode::gating);
    const auto out_hi = merge_features(make_vec(tape, hi), make_vec(tape, gpos), MergeMode::gating);
    for (int i = 0; i < 32; ++i) CHECK(out_lo.value().data[i] < out_hi.value().data[i]);
  }
}

TEST_CASE("gate: add identity and concat projection shape") {
  Tape<double> tape;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  VecX<double> gv(32);
  for (int i = 0; i < 32; ++i) gv[i] = dist(rng);
  Var<double> g = make_vec(tape, gv);
  {
    const auto out = merge_features(make_zeros(tape, 32), g, MergeMode::add);
    CHECK(out.value().data == gv);
  }
  {
    std::mt19937_64 wrng(3);
    Var<double> w = make_leaf(tape, uniform_fan_in<double>(Shape{32, 64}, 64, wrng));
    Var<double> b = make_zeros(tape, 32);
    const auto out = merge_features(make_zeros(tape, 32), g, MergeMode::concat,
                                    std::optional<Var<double>>(w), std::optional<Var<double>>(b));
    CHECK(out.value().numel() == 32);
    CHECK_THROWS_AS(merge_features(make_zeros(tape, 32), g, MergeMode::concat), ShapeError);
  }
  CHECK(parse_merge_mode("gating") == MergeMode::gating);
  CHECK(parse_merge_mode("add") == MergeMode::add);
  CHECK(parse_merge_mode("concat") == MergeMode::concat);
  CHECK_THROWS_AS(parse_merge_mode("mean"), ConfigError);
}
