#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "threec/cli.hpp"
#include "threec/encoding.hpp"
#include "threec/volume.hpp"

using namespace threec;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "threec");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<double> fields(const std::string& line) {
  std::istringstream in(line);
  std::vector<double> v;
  for (double d; in >> d;) v.push_back(d);
  return v;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"eval", "--pred", "a.vol"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("runtime errors exit with 2 and leave no output directory") {
  TempDir dir;
  auto r = cli({"run", "--config", (dir / "missing.json").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("error:") != std::string::npos);

  std::ofstream(dir / "cfg.json") << R"({"elevation": "nope.vol", "classifier": "geodesic", "output": "out"})";
  CHECK(cli({"run", "--config", (dir / "cfg.json").string()}).code == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("gen, seed, run and eval compose") {
  TempDir dir;
  auto gt = (dir / "gt.vol").string(), elev = (dir / "elev.vol").string();
  REQUIRE(cli({"gen", "--gt", gt, "--elev", elev, "--z", "6", "--y", "64", "--x", "64",
               "--objects", "6", "--seed", "3"})
              .code == 0);
  CHECK(load_labels(gt).dims() == Dims{6, 64, 64});

  auto seeds = (dir / "seeds.vol").string();
  auto s = cli({"seed", "--elev", elev, "--out", seeds, "--h", "0.05", "--workers", "2"});
  REQUIRE(s.code == 0);
  CHECK(s.err.find("seeds: ") != std::string::npos);

  // a stack scored against itself is perfect
  auto self = fields(cli({"eval", "--pred", gt, "--gt", gt}).out);
  REQUIRE(self.size() == 6);
  CHECK(self[0] == 0.0);
  CHECK(self[3] == 0.0);

  std::ofstream(dir / "cfg.json") << R"({"elevation": "elev.vol", "gt": "gt.vol",
    "seeds": "seeds.vol", "output": "run"})";
  auto r = cli({"run", "--config", (dir / "cfg.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("n_components\t") != std::string::npos);

  auto e = cli({"eval", "--pred", (dir / "run" / "segmentation.vol").string(), "--gt", gt,
                "--seeded-only"});
  REQUIRE(e.code == 0);
  auto m = fields(e.out);
  REQUIRE(m.size() == 6);
  CHECK(m[0] <= 0.01);
  CHECK(m[3] <= 0.05);
}

TEST_CASE("cost subcommand prints one row per rho") {
  TempDir dir;
  LabelStack labels(Dims{1, 16, 16});
  for (uint32_t y = 0; y < 16; ++y)
    for (uint32_t x = 0; x < 16; ++x) labels.at(0, y, x) = (y % 8) * 8 + (x % 8) + 1;
  save_stack(labels, dir / "l.vol");
  auto r = cli({"cost", "--labels", (dir / "l.vol").string(), "--rho", "1,0.5"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header.rfind("rho\t", 0) == 0);
  CHECK(fields(row1)[0] == 1.0);
  CHECK(fields(row2)[0] == 0.5);
  CHECK(fields(row2)[1] == 2 * fields(row1)[1]);
  CHECK(cli({"cost", "--labels", (dir / "l.vol").string(), "--rho", "0"}).code == 2);
}

TEST_CASE("codebook subcommand") {
  TempDir dir;
  auto path = dir / "cb.txt";
  REQUIRE(cli({"codebook", "--n", "10", "--l", "4", "--out", path.string()}).code == 0);
  auto cb = load_codebook(path);
  CHECK(cb.n_labels() == 10);
  CHECK(cb.digits() == 3);
  CHECK(cli({"codebook", "--n", "17", "--l", "4", "--k", "2", "--out", path.string()}).code == 2);
}
