#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sgsg/checkpoint.hpp"
#include "sgsg/cli.hpp"
#include "sgsg/scene.hpp"
#include "support/synthetic.hpp"

using namespace sgsg;

namespace {

std::filesystem::path temp_dir(const std::string& leaf) {
  const auto dir = std::filesystem::temp_directory_path() / "sgsg_cli_tests" / leaf;
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Three tiny scenes on disk plus a config; enough for end-to-end CLI runs.
std::filesystem::path small_fixture(const std::filesystem::path& dir) {
  const int size = 16;
  std::string config;
  int i = 0;
  for (const char* name : {"A", "B", "C"}) {
    const auto rows = sgsg::test::tracks_to_annotations(
        sgsg::test::crowd_scene_tracks(100 + 31 * i, 6));
    sgsg::test::write_annotations(dir / (std::string(name) + ".txt"), rows);
    save_raster(dir / (std::string(name) + ".raster"),
                sgsg::test::obstacle_raster(size, 200 + i));
    config += std::string("scene.") + name + ".annotations=" + name + ".txt\n";
    config += std::string("scene.") + name + ".raster=" + name + ".raster\n";
    ++i;
  }
  config +=
      "held_out=C\n"
      "epochs=2\n"
      "batch_size=32\n"
      "scene_size=16\n"
      "val_fraction=0.2\n"
      "seed=3\n";
  const auto path = dir / "run.cfg";
  std::ofstream out(path);
  out << config;
  return path;
}

}  // namespace

TEST_CASE("cli usage errors exit with code 2") {
  CHECK(run_cli({"no-such-subcommand"}) == 2);
  CHECK(run_cli({"train"}) == 2);                          // missing required --config
  CHECK(run_cli({"train", "--config", "x", "--bogus"}) == 2);
  CHECK(run_cli({"evaluate", "--config", "x"}) == 2);      // missing --checkpoint
}

TEST_CASE("cli runtime errors exit with code 1") {
  CHECK(run_cli({"plot", "--input", "/nonexistent/dump.csv"}) == 1);
  CHECK(run_cli({"rasterize-scene", "--grid", "/nonexistent.grid", "--out", "/tmp/x.raster"}) ==
        1);
}

TEST_CASE("rasterize-scene builds a loadable raster from a label grid") {
  const auto dir = temp_dir("raster");
  {
    std::ofstream grid(dir / "map.grid");
    grid << "0011\n0011\n2200\n0000\n";
  }
  const auto out_path = dir / "map.raster";
  CHECK(run_cli({"rasterize-scene", "--grid", (dir / "map.grid").string(), "--out",
                 out_path.string(), "--meters-per-cell", "0.5"}) == 0);
  const auto raster = load_raster(out_path);
  CHECK(raster.height == 4);
  CHECK(raster.width == 4);
  CHECK(raster.meters_per_cell == 0.5);
  CHECK(raster.at(1, 0, 2) == 1.0f);
  CHECK(raster.at(2, 2, 0) == 1.0f);
  CHECK(raster.at(0, 3, 3) == 1.0f);
}

TEST_CASE("cli end-to-end: train, evaluate twice, predict, plot, graph-stats") {
  const auto dir = temp_dir("e2e");
  const auto config = small_fixture(dir);
  const auto run_dir = (dir / "run").string();

  REQUIRE(run_cli({"train", "--config", config.string(), "--out", run_dir}) == 0);
  const auto checkpoint = dir / "run" / "checkpoint.bin";
  REQUIRE(std::filesystem::exists(checkpoint));
  CHECK(std::filesystem::exists(dir / "run" / "train_log.csv"));

  const auto eval1 = (dir / "eval1").string();
  const auto eval2 = (dir / "eval2").string();
  REQUIRE(run_cli({"evaluate", "--checkpoint", checkpoint.string(), "--config", config.string(),
                   "--k", "5", "--seed", "7", "--out", eval1}) == 0);
  REQUIRE(run_cli({"evaluate", "--checkpoint", checkpoint.string(), "--config", config.string(),
                   "--k", "5", "--seed", "7", "--out", eval2}) == 0);
  const auto csv1 = read_file(dir / "eval1" / "metrics.csv");
  CHECK(csv1 == read_file(dir / "eval2" / "metrics.csv"));
  CHECK(csv1.rfind("scene,k,ade_m,fde_m,baseline_ade_m,baseline_fde_m,n_windows\n", 0) == 0);
  CHECK(csv1.find("C,5,") != std::string::npos);

  const auto pred_dir = (dir / "pred").string();
  REQUIRE(run_cli({"predict", "--checkpoint", checkpoint.string(), "--config", config.string(),
                   "--k", "3", "--seed", "7", "--out", pred_dir}) == 0);
  const auto dump = dir / "pred" / "predictions.csv";
  REQUIRE(std::filesystem::exists(dump));

  const auto plot_dir = dir / "plots";
  REQUIRE(run_cli({"plot", "--input", dump.string(), "--out", plot_dir.string()}) == 0);
  const auto svg = read_file(plot_dir / "C.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("class=\"obs\"") != std::string::npos);
  CHECK(svg.find("class=\"gt\"") != std::string::npos);
  CHECK(svg.find("class=\"pred\"") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);

  const auto stats_csv = dir / "stats.csv";
  REQUIRE(run_cli({"graph-stats", "--config", config.string(), "--out", stats_csv.string()}) ==
          0);
  const auto stats = read_file(stats_csv);
  CHECK(stats.rfind("scene,timestep,N,star_edges,complete_edges\n", 0) == 0);
  CHECK(stats.find("\nA,") != std::string::npos);
}
