#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include "support.h"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult cli(const std::string& args) {
  const std::string cmd = std::string(HFG_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Column values of a CSV keyed by the first column.
std::map<std::string, std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string c; std::getline(hs, c, ',');) header.push_back(c);
  std::map<std::string, std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::vector<std::string> cells;
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    for (std::size_t i = 0; i < cells.size() && i < header.size(); ++i) rows[cells[0]][header[i]] = cells[i];
  }
  return rows;
}

const std::string kSmall = "gen --kind hetero --users 200 --items 100 --categories 8 --feat-dim 6 --seed 4";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = hfg::testing::temp_dir("cli"); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CliTest, GenIsByteDeterministic) {
  ASSERT_EQ(cli(kSmall + " --out " + at("a")).code, 0);
  ASSERT_EQ(cli(kSmall + " --out " + at("b")).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename())) << e.path().filename();
    ++files;
  }
  EXPECT_GE(files, 3u);
}

TEST_F(CliTest, PartitionReportsCut) {
  ASSERT_EQ(cli("gen --kind cliques --clique-size 6 --out " + at("cq")).code, 0);
  const CliResult one = cli("partition --data " + at("cq") + " --out " + at("p1") + " -k 1");
  ASSERT_EQ(one.code, 0) << one.out;
  EXPECT_NE(one.out.find("edge cut: 0 of"), std::string::npos) << one.out;
  const CliResult two = cli("partition --data " + at("cq") + " --out " + at("p2") + " -k 2");
  ASSERT_EQ(two.code, 0) << two.out;
  EXPECT_NE(two.out.find("edge cut: 1 of"), std::string::npos) << two.out;
  const CliResult ins = cli("inspect " + at("p1"));
  ASSERT_EQ(ins.code, 0) << ins.out;
  EXPECT_NE(ins.out.find("0.0000"), std::string::npos) << ins.out;
}

TEST_F(CliTest, UsageAndConfigErrorsExitTwo) {
  EXPECT_EQ(cli("partition --data " + at("missing") + " --out " + at("x")).code, 2);
  EXPECT_EQ(cli("no-such-command").code, 2);
  EXPECT_EQ(cli(kSmall + " --out " + at("d") + " --kind bogus").code, 2);
  ASSERT_EQ(cli(kSmall + " --out " + at("d")).code, 0);
  ASSERT_EQ(cli("partition --data " + at("d") + " --out " + at("p") + " -k 1 -t 2").code, 0);
  const CliResult r = cli("train --part " + at("p") + " --out " + at("r") + " --trainers 3");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("trainers"), std::string::npos);
  EXPECT_EQ(cli("train --part " + at("p") + " --out " + at("r") + " --capacities 1,0,1").code, 2);
}

TEST_F(CliTest, InspectRejectsCorruptInput) {
  fs::create_directories(dir_ / "bad");
  std::ofstream(dir_ / "bad" / "schema.json") << "{ not json";
  EXPECT_EQ(cli("inspect " + at("bad")).code, 1);
}

TEST_F(CliTest, TrainAcrossProcessesAndSerialPipelineMatches) {
  ASSERT_EQ(cli(kSmall + " --out " + at("d")).code, 0);
  ASSERT_EQ(cli("partition --data " + at("d") + " --out " + at("p") + " -k 2 -t 1").code, 0);
  const std::string common = "train --part " + at("p") + " --epochs 2 --batch-size 8 --hidden 8 --seed 5";
  const CliResult a = cli(common + " --out " + at("ra"));
  ASSERT_EQ(a.code, 0) << a.out;
  const CliResult b = cli(common + " --serial-pipeline --out " + at("rb"));
  ASSERT_EQ(b.code, 0) << b.out;
  for (const char* f : {"rank0_trainer0_steps.csv", "rank1_trainer1_steps.csv"}) {
    const auto csv_a = read_csv(dir_ / "ra" / f);
    const auto csv_b = read_csv(dir_ / "rb" / f);
    ASSERT_FALSE(csv_a.empty()) << f;
    std::ifstream ia(dir_ / "ra" / f), ib(dir_ / "rb" / f);
    std::string la, lb;
    while (std::getline(ia, la)) {
      ASSERT_TRUE(std::getline(ib, lb));
      // Loss columns agree; the trailing wall time does not.
      EXPECT_EQ(la.substr(0, la.rfind(',')), lb.substr(0, lb.rfind(',')));
    }
  }
  EXPECT_TRUE(fs::exists(dir_ / "ra" / "model.ckpt"));
}

TEST_F(CliTest, BenchShowsPartitioningAblations) {
  ASSERT_EQ(cli("gen --kind hetero --users 800 --items 400 --categories 16 --feat-dim 8 --seed 9 --out " + at("d"))
                .code,
            0);
  const CliResult r = cli("bench --data " + at("d") + " -k 2 -t 2 --batch-size 16 --max-batches 8 --rpc-latency-us 0 --out " +
                    at("bench.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto rows = read_csv(dir_ / "bench.csv");
  ASSERT_EQ(rows.size(), 4u);
  auto num = [&](const char* row, const char* col) { return std::stod(rows.at(row).at(col)); };
  EXPECT_GT(num("random-partition", "remote_bytes"), num("full", "remote_bytes"));
  EXPECT_GT(num("one-level", "mean_unique_vertices"), num("full", "mean_unique_vertices"));
  EXPECT_EQ(num("serial-pipeline", "remote_bytes"), num("full", "remote_bytes"));
  EXPECT_EQ(rows.at("serial-pipeline").at("pipeline"), "serial");
}

}  // namespace
