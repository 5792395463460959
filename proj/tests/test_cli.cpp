#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "damp/image.hpp"
#include "damp/space.hpp"

using namespace damp;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "damp_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(DAMP_CLI_PATH) + " " + args + " >" + (kRoot / "stdout.txt").string() +
                          " 2>" + (kRoot / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct Workspace {
  Workspace() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    write_file(kRoot / "small.json", R"({"gradient": {"angles": 8, "moduli": 8}})");
  }
  ~Workspace() { fs::remove_all(kRoot); }
  std::string path(const std::string& name) const { return (kRoot / name).string(); }
};

}  // namespace

TEST_CASE("cli exit codes") {
  Workspace w;
  CHECK(run("--help") == 0);
  CHECK(run("") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("encode --encoder scalar 0.5") == 0);
  CHECK(slurp(w.path("stdout.txt")).find(';') != std::string::npos);
  CHECK(run("encode --encoder nope 1") == 2);

  write_file(w.path("unknown.json"), R"({"layout": {"phases": [{"lambda_x": 1}]}})");
  CHECK(run("--config " + w.path("unknown.json") + " gradient-space --out " + w.path("x")) == 2);
  CHECK(slurp(w.path("stderr.txt")).find("layout.phases[0].lambda_x") != std::string::npos);

  CHECK(run("layout --input " + w.path("missing.jsonl") + " --out " + w.path("x")) == 4);
  write_file(w.path("broken.jsonl"), "{\"not\": \"a header\"}\n");
  CHECK(run("energy-map --input " + w.path("broken.jsonl") + " --out " + w.path("x")) == 4);
}

TEST_CASE("gradient space is reproducible and layout copies through at zero steps") {
  Workspace w;
  const std::string cfg = "--config " + w.path("small.json") + " --seed 5 ";
  REQUIRE(run(cfg + "gradient-space --out " + w.path("a")) == 0);
  REQUIRE(run(cfg + "gradient-space --out " + w.path("b")) == 0);
  const std::string space = slurp(w.path("a/space.jsonl"));
  CHECK_FALSE(space.empty());
  CHECK(space == slurp(w.path("b/space.jsonl")));
  CHECK(slurp(w.path("a/resolution.json")) == slurp(w.path("b/resolution.json")));
  CHECK(slurp(w.path("a/run.json")).find("\"seed\": 5") != std::string::npos);

  REQUIRE(run(cfg + "layout --steps 0 --input " + w.path("a/space.jsonl") + " --out " + w.path("c")) == 0);
  CHECK(slurp(w.path("c/space.jsonl")) == space);
  CHECK(slurp(w.path("c/layout.csv")) == "step,swaps,quality,lambda,radius\n");

  CHECK(run(cfg + "layout --steps 3 --input " + w.path("a/space.jsonl") + " --out " + w.path("d")) == 3);
  REQUIRE(run(cfg + "layout --steps 3 --input " + w.path("a/space.jsonl") + " --out " + w.path("e")) == 3);
  CHECK(slurp(w.path("d/space.jsonl")) == slurp(w.path("e/space.jsonl")));
  CHECK(slurp(w.path("d/layout.csv")) == slurp(w.path("e/layout.csv")));

  const std::string ppm = slurp(w.path("c/composite.ppm"));
  CHECK(ppm.rfind("P6\n8 8\n255\n", 0) == 0);
  CHECK(ppm.size() == 11 + 8 * 8 * 3);

  CHECK(run("--config " + w.path("small.json") + " gradient-space --out " + w.path("f")) == 0);
  CHECK(slurp(w.path("stderr.txt")).find("damp: generated seed") != std::string::npos);
}

TEST_CASE("an all-zero energy map renders black") {
  Workspace w;
  CodeSpace s(3, 3, PointKind::bit, 16);
  for (std::size_t i = 0; i < 8; ++i) s.set(i, BitCode::from_indices(16, {2 * i, 2 * i + 1}));
  save_space(w.path("sparse.jsonl"), s);
  REQUIRE(run("viz --input " + w.path("sparse.jsonl") + " --out " + w.path("v")) == 0);
  std::ifstream pgm(w.path("v/energy.pgm"), std::ios::binary);
  const auto gray = read_pgm(pgm);
  CHECK(gray.width == 3);
  CHECK(std::all_of(gray.pixels.begin(), gray.pixels.end(), [](std::uint16_t v) { return v == 0; }));
  std::ifstream ppm(w.path("v/composite.ppm"), std::ios::binary);
  const auto rgb = read_ppm(ppm);
  CHECK(std::all_of(rgb.pixels.begin(), rgb.pixels.end(), [](std::uint8_t v) { return v == 0; }));
  REQUIRE(run("energy-map --input " + w.path("sparse.jsonl") + " --out " + w.path("v")) == 0);
  CHECK(slurp(w.path("stdout.txt")).find("\"quality\":0.0") != std::string::npos);
}

TEST_CASE("fuzzy store and query through the cli") {
  Workspace w;
  const auto a = to_literal(BitCode::from_indices(128, {1, 2, 3, 4, 5, 6, 7, 8}));
  const auto b = to_literal(BitCode::from_indices(128, {60, 61, 62, 63, 64, 65, 66, 67}));
  write_file(w.path("codes.txt"), a + "\talpha\n" + b + "\tbeta\n");
  REQUIRE(run("fuzzy-store --codes " + w.path("codes.txt") + " --out " + w.path("s")) == 0);
  REQUIRE(run("fuzzy-query --store " + w.path("s/store.jsonl") + " --probe " + a + " --epsilon 0.2") == 0);
  const auto out = slurp(w.path("stdout.txt"));
  CHECK(out.find("alpha") != std::string::npos);
  CHECK(out.find("beta") == std::string::npos);
}

TEST_CASE("netpbm round-trip and hsv primaries") {
  Gray16Image g{2, 1, {0, 65535}};
  std::stringstream gs;
  write_pgm(gs, g);
  CHECK(gs.str().rfind("P5\n2 1\n65535\n", 0) == 0);
  const auto gb = read_pgm(gs);
  CHECK(gb.pixels == g.pixels);
  RgbImage c{1, 1, {1, 2, 3}};
  std::stringstream cs;
  write_ppm(cs, c);
  CHECK(read_ppm(cs).pixels == c.pixels);
  std::uint8_t rgb[3];
  hsv_to_rgb(0.0, 1.0, 1.0, rgb);
  CHECK((rgb[0] == 255 && rgb[1] == 0 && rgb[2] == 0));
  hsv_to_rgb(120.0, 1.0, 1.0, rgb);
  CHECK((rgb[0] == 0 && rgb[1] == 255 && rgb[2] == 0));
  hsv_to_rgb(240.0, 1.0, 0.0, rgb);
  CHECK((rgb[0] == 0 && rgb[1] == 0 && rgb[2] == 0));
  std::stringstream bad("P3\n1 1\n255\n");
  CHECK_THROWS_AS(read_pgm(bad), FormatError);
}
