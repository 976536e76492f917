#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "twincl/checkpoint.hpp"
#include "twincl/io.hpp"

using namespace twincl;

namespace {

Checkpoint sample(bool with_optimizer) {
  std::mt19937_64 rng(1);
  auto twins = TwinState::from_initial(init_embeddings(3, 4, 5, 9), 0.85);
  twins.phi.values = test::random_matrix(7, 5, rng);
  twins.iteration = 17;
  Checkpoint c{twins, std::nullopt};
  if (with_optimizer) {
    auto adam = AdamState::for_params(twins.theta.values, 0.02);
    adam.m = test::random_matrix(7, 5, rng);
    adam.v = test::random_matrix(7, 5, rng);
    adam.step = 17;
    c.optimizer = adam;
  }
  return c;
}

}  // namespace

TEST_CASE("round trip") {
  for (bool opt : {false, true}) {
    auto c = sample(opt);
    std::stringstream buf;
    write_checkpoint(buf, c);
    CHECK(buf.str().rfind("TWINCL-CKPT-1\n", 0) == 0);
    auto back = read_checkpoint(buf);
    CHECK(back.twins.theta == c.twins.theta);
    CHECK(back.twins.phi == c.twins.phi);
    CHECK(back.twins.beta == c.twins.beta);
    CHECK(back.twins.iteration == 17);
    REQUIRE(back.optimizer.has_value() == opt);
    if (opt) {
      CHECK(back.optimizer->m == c.optimizer->m);
      CHECK(back.optimizer->v == c.optimizer->v);
      CHECK(back.optimizer->step == 17);
      CHECK(back.optimizer->lr == 0.02);
    }
  }
}

TEST_CASE("bad input is rejected") {
  std::stringstream wrong("NOT-A-CKPT\n");
  CHECK_THROWS_WITH(read_checkpoint(wrong), doctest::Contains("TWINCL-CKPT-1"));
  std::stringstream buf;
  write_checkpoint(buf, sample(true));
  const std::string full = buf.str();
  std::stringstream cut(full.substr(0, full.size() - 9));
  CHECK_THROWS_WITH(read_checkpoint(cut), "checkpoint truncated");
  auto mismatched = sample(false);
  mismatched.twins.phi.values = Matrix(2, 5);
  std::stringstream sink;
  CHECK_THROWS_AS(write_checkpoint(sink, mismatched), Error);
}

TEST_CASE("files are written atomically") {
  const auto dir = std::filesystem::temp_directory_path() / "twincl_ckpt_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.ckpt";
  save_checkpoint(path, sample(false));
  CHECK(std::filesystem::exists(path));
  CHECK_FALSE(std::filesystem::exists(dir / "model.ckpt.tmp"));
  CHECK(load_checkpoint(path).twins.iteration == 17);
  CHECK_THROWS_AS(load_checkpoint(dir / "absent.ckpt"), Error);

  {
    AtomicFile f(dir / "partial.txt");
    f.stream() << "half";
  }
  CHECK_FALSE(std::filesystem::exists(dir / "partial.txt"));
  CHECK_FALSE(std::filesystem::exists(dir / "partial.txt.tmp"));
  std::filesystem::remove_all(dir);
}
