#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "vsf/config.hpp"
#include "vsf/errors.hpp"

using namespace vsf;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream f(path, std::ios::trunc);
  f << body;
  return path;
}

}  // namespace

TEST_CASE("defaults match the struct defaults") {
  ExperimentConfig c;
  const SceneConfig sc;
  const TrainConfig tc;
  CHECK(c.get_double("scene.checker_period") ==
        doctest::Approx(sc.checker_period));
  CHECK(c.get_int("scene.groups") == sc.n_groups);
  CHECK(c.get("scene.state_schema") == sc.state_schema);
  CHECK(c.get_int("train.epochs") == tc.epochs);
  CHECK(c.get_double("train.learning_rate") ==
        doctest::Approx(tc.learning_rate));
  CHECK(c.get_bool("train.halt_on_patience") == tc.halt_on_patience);
  CHECK(c.get_int("eval.batch_size") == 256);
}

TEST_CASE("file parsing with comments and whitespace") {
  const auto path = write_temp("vsf_cfg_ok.txt",
                               "# leading comment\n"
                               "\n"
                               "train.epochs = 7   # trailing comment\n"
                               "  scene.groups=3\n"
                               "train.halt_on_patience = false\n");
  ExperimentConfig c;
  c.load_file(path);
  CHECK(c.get_int("train.epochs") == 7);
  CHECK(c.get_int("scene.groups") == 3);
  CHECK_FALSE(c.get_bool("train.halt_on_patience"));
  // untouched keys keep their defaults
  CHECK(c.get_int("train.batch_size") == TrainConfig{}.batch_size);
  std::remove(path.c_str());
}

TEST_CASE("unknown keys are rejected") {
  ExperimentConfig c;
  CHECK_THROWS_AS(c.set("train.optimiser", "sgd"), FormatError);
  CHECK_THROWS_AS(c.get("no.such.key"), FormatError);
  const auto path = write_temp("vsf_cfg_bad.txt", "bogus.key = 1\n");
  CHECK_THROWS_AS(c.load_file(path), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("malformed lines and missing files are format errors") {
  ExperimentConfig c;
  const auto path = write_temp("vsf_cfg_noeq.txt", "train.epochs 7\n");
  CHECK_THROWS_AS(c.load_file(path), FormatError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(c.load_file("/nonexistent/vsf_cfg.txt"), FormatError);
}

TEST_CASE("typed getters validate their values") {
  ExperimentConfig c;
  c.set("train.epochs", "2.5");
  CHECK_THROWS_AS(c.get_int("train.epochs"), FormatError);
  c.set("scene.focal", "fast");
  CHECK_THROWS_AS(c.get_double("scene.focal"), FormatError);
  c.set("train.halt_on_patience", "maybe");
  CHECK_THROWS_AS(c.get_bool("train.halt_on_patience"), FormatError);
  c.set("scene.seed", "-3");
  CHECK_THROWS_AS(c.get_u64("scene.seed"), FormatError);
  c.set("scene.state_schema", "yaw");
  CHECK_THROWS_AS(c.scene_config(), FormatError);
}

TEST_CASE("render/echo round-trips through load_file") {
  ExperimentConfig a;
  a.set("train.epochs", "9");
  a.set("scene.groups", "5");
  a.set("augment.copies", "4");
  const auto path = write_temp("vsf_cfg_echo.txt", "");
  a.echo(path);

  ExperimentConfig b;
  b.load_file(path);
  REQUIRE(a.items().size() == b.items().size());
  for (std::size_t i = 0; i < a.items().size(); ++i) {
    CHECK(a.items()[i].first == b.items()[i].first);
    CHECK(a.items()[i].second == b.items()[i].second);
  }
  CHECK(a.render() == b.render());
  std::remove(path.c_str());
}

TEST_CASE("struct converters reflect overrides") {
  ExperimentConfig c;
  c.set("scene.image_size", "96");
  c.set("scene.focal", "120");
  c.set("augment.copies", "6");
  c.set("train.qat_epochs", "2");
  const CameraIntrinsics in = c.intrinsics();
  CHECK(in.width == 96);
  CHECK(in.height == 96);
  CHECK(in.f == doctest::Approx(120.0));
  CHECK(in.cx == doctest::Approx(48.0));
  CHECK(c.augment_config().copies == 6);
  CHECK(c.train_config().qat.epochs == 2);
}
