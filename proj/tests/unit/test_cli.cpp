#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "cli_helpers.hpp"
#include "fpid/bench/cluster.hpp"
#include "fpid/bench/synth.hpp"
#include "helpers.hpp"

using namespace fpid;
using nlohmann::json;

namespace {

std::string master_arg(const bench::LocalCluster& c) {
  return "--master " + c.client_address().to_string();
}

bench::ClusterOptions cluster_options(const test::TempDir& dir, std::size_t workers) {
  bench::ClusterOptions o;
  o.binary = test::fpid_binary();
  o.store = dir.path() / "store";
  o.work_dir = dir.path() / "run";
  o.workers = workers;
  return o;
}

}  // namespace

TEST_CASE("status on a fresh master") {
  test::TempDir dir("cli");
  bench::LocalCluster c(cluster_options(dir, 0));
  const auto r = test::fpid("status " + master_arg(c));
  CHECK(r.exit_code == 0);
  CHECK(r.out == "0 records, 0 workers\n");
  const auto j = test::fpid("status --json " + master_arg(c));
  REQUIRE(j.exit_code == 0);
  const auto st = json::parse(j.out);
  CHECK(st.at("records") == 0);
  CHECK(st.at("workers") == 0);
}

TEST_CASE("enroll then query by name") {
  test::TempDir dir("cli");
  const auto data = dir.path() / "data";
  REQUIRE(test::fpid("synth --count 3 --seed 7 --out " + data.string()).exit_code == 0);
  const auto ds = bench::load_dataset(data);
  REQUIRE(ds.entries.size() == 3);

  bench::LocalCluster c(cluster_options(dir, 1));
  for (const auto& e : ds.entries) {
    const auto r = test::fpid("enroll " + (data / e.gallery_image).string() + " --name '" + e.name + "' --meta synthId=" +
                              e.id + " " + master_arg(c));
    REQUIRE(r.exit_code == 0);
    CHECK_FALSE(r.out.empty());
  }
  CHECK(test::fpid("status " + master_arg(c)).out == "3 records, 1 workers\n");

  const auto& target = ds.entries[1];
  const auto q = test::fpid("query --wait " + (data / target.probe_image).string() + " " + master_arg(c));
  REQUIRE(q.exit_code == 0);
  CHECK(q.out.find(target.name) != std::string::npos);
  CHECK(q.out.find("total running time") != std::string::npos);

  const auto qj = test::fpid("query --wait --json " + (data / target.probe_image).string() + " " + master_arg(c));
  REQUIRE(qj.exit_code == 0);
  const auto snap = json::parse(qj.out);
  CHECK(snap.at("state") == "done");
  REQUIRE(snap.at("answers").size() == 1);
  CHECK(snap.at("answers")[0].at("person").at("name") == target.name);
}

TEST_CASE("exit codes") {
  test::TempDir dir("cli");
  CHECK(test::fpid("").exit_code == 1);
  CHECK(test::fpid("no-such-command").exit_code == 1);
  CHECK(test::fpid("enroll --name x").exit_code == 1);
  // nothing listens on port 1
  CHECK(test::fpid("status --master 127.0.0.1:1").exit_code == 2);

  bench::LocalCluster c(cluster_options(dir, 0));
  CHECK(test::fpid("query " + (dir.path() / "missing.pgm").string() + " " + master_arg(c)).exit_code == 3);
  const auto bad = dir.path() / "bad.pgm";
  std::ofstream(bad) << "not an image";
  // a rejected upload is a usage error
  CHECK(test::fpid("enroll " + bad.string() + " --name x " + master_arg(c)).exit_code == 1);
  CHECK(test::fpid("enroll " + bad.string() + " --name x --meta novalue " + master_arg(c)).exit_code == 1);
}

TEST_CASE("bench workers prints four rows") {
  test::TempDir dir("cli");
  const auto csv = dir.path() / "w.csv";
  const auto r = test::fpid("bench workers --simulate 50 --fixed 8 --reps 1 --out " + csv.string() +
                            " --work-dir " + (dir.path() / "work").string());
  REQUIRE(r.exit_code == 0);
  std::vector<std::string> lines;
  std::istringstream in(r.out);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "workers,run_seconds,stddev");
  const char* xs[] = {"1,", "2,", "4,", "8,"};
  for (int i = 0; i < 4; ++i) {
    CHECK(lines[i + 1].rfind(xs[i], 0) == 0);
    CHECK(lines[i + 1].find(",,") == std::string::npos);
  }
  std::ifstream f(csv);
  std::stringstream file;
  file << f.rdbuf();
  CHECK(file.str() == r.out);
}
