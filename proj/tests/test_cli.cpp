#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pcert/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = pcert::cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pcert_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("masks gen and verify") {
  const Result gen = run({"masks", "gen", "--n", "224", "--patch-frac", "0.03", "--k", "3"});
  CHECK(gen.code == 0);
  CHECK(gen.out == "s=62 m=100 positions 0,62,124\n");

  const fs::path dir = scratch("masks");
  CHECK(run({"masks", "gen", "--n", "224", "--patch-frac", "0.03", "--k", "6", "--out", dir.string()}).code == 0);
  CHECK(fs::exists(dir / "masks.txt"));
  CHECK(fs::exists(dir / "masks-gen.manifest.json"));
  const Result verify = run({"masks", "verify", "--in", (dir / "masks.txt").string()});
  CHECK(verify.code == 0);
  CHECK(verify.out == "covering: OK\n");

  // A descriptor with a gap between masks.
  std::ofstream(dir / "gap.txt") << "32 5 2 16 16\n0\n16\n";
  const Result gap = run({"masks", "verify", "--in", (dir / "gap.txt").string(), "--patch-size", "5"});
  CHECK(gap.code == 1);
  CHECK(gap.out.find("FAILED") != std::string::npos);
}

TEST_CASE("usage and domain errors") {
  CHECK(run({}).code == 2);
  const Result unknown = run({"masks", "gen", "--bogus"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({"train", "--strategy", "greedy9", "--out", "x"}).code == 2);
  CHECK(run({"certify", "--model", "/nonexistent/model.bin"}).code == 1);
  CHECK(run({"masks", "gen", "--n", "10", "--patch-size", "11"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"--version"}).out == std::string(pcert::kToolVersion) + "\n");
}

TEST_CASE("augment rows") {
  const Result r = run({"augment", "--strategy", "rand", "--count", "4", "--patch-size", "5"});
  CHECK(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "image_id,strategy,mask_ids,losses,scheduled_passes,unique_passes");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    CHECK(line.find(",rand,3x3:") != std::string::npos);
    CHECK(line.find("|6x6:") != std::string::npos);
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(run({"augment", "--strategy", "greedy3", "--count", "2"}).code == 2);
}

TEST_CASE("train, certify, report and replay") {
  const fs::path dir = scratch("pipeline");
  const std::string greedy = (dir / "greedy").string();
  const std::string random = (dir / "random").string();
  const std::vector<std::string> common{"--count", "32", "--patch-size", "5", "--epochs", "2",
                                        "--batch", "8", "--hidden", "8", "--seed", "4"};
  auto with = [&](std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  };
  REQUIRE(run(with({"train", "--strategy", "multisize", "--out", greedy}, common)).code == 0);
  REQUIRE(run(with({"train", "--strategy", "random", "--out", random}, common)).code == 0);

  const std::string log = slurp(fs::path(greedy) / "train_log.csv");
  CHECK(log.rfind("epoch,lr,mean_loss,scheduled_passes,unique_passes\n0,0.010000,", 0) == 0);
  CHECK(log.find(",832,") != std::string::npos);  // 32 images x 26 passes

  for (const std::string& d : {greedy, random}) {
    const Result c = run({"certify", "--model", d + "/model.bin", "--count", "16", "--data-seed", "9",
                          "--patch-size", "5", "--out", d});
    REQUIRE(c.code == 0);
    const std::string csv = slurp(fs::path(d) / "certify.csv");
    CHECK(csv.rfind("image_id,true_label,defended_label,case,certified,witness,unique_passes\n", 0) == 0);
    CHECK(csv.find("# clean_accuracy=") != std::string::npos);
  }

  const Result report = run({"report", "--runs", greedy, random, "--out", dir.string()});
  REQUIRE(report.code == 0);
  CHECK(report.out.find("| multisize | 26 |") != std::string::npos);
  CHECK(report.out.find("| random | - | - |") != std::string::npos);
  CHECK(slurp(dir / "report.md") == report.out);

  // Replays reproduce every CSV byte for byte.
  const nlohmann::json manifest = nlohmann::json::parse(slurp(fs::path(greedy) / "train.manifest.json"));
  CHECK(manifest["subcommand"] == "train");
  CHECK(manifest["params"]["dataset_size"] == 32);
  const std::string replay = (dir / "replay").string();
  REQUIRE(run({"--manifest", (fs::path(greedy) / "train.manifest.json").string(), "--threads", "3",
               "--out", replay}).code == 0);
  CHECK(slurp(fs::path(replay) / "train_log.csv") == log);
  CHECK(slurp(fs::path(replay) / "model.bin") == slurp(fs::path(greedy) / "model.bin"));
  CHECK(run({"--manifest", (dir / "missing.json").string()}).code == 1);
}
