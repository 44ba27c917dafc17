#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <set>
#include <vector>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/io.hpp"
#include "robustrl/common/parallel.hpp"
#include "robustrl/common/rng.hpp"

using namespace robustrl;

TEST_CASE("rng streams are reproducible and seed-sensitive") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(43);
  int differing = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() != c.next_u64()) differing += 1;
  }
  CHECK(differing > 60);
}

TEST_CASE("uniform draws stay inside their ranges") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform(-2.5, 4.0);
    CHECK(v >= -2.5);
    CHECK(v < 4.0);
  }
}

TEST_CASE("uniform_index covers every value below the bound") {
  Rng rng(11);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::size_t k = rng.uniform_index(7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("normal draws have the right first two moments") {
  Rng rng(123);
  const int n = 200000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  // Standard error of the mean is 1/sqrt(n) ~ 0.0022; allow 4 sigma.
  CHECK(std::abs(mean) < 0.009);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("derive_seed separates domains and indices") {
  const std::uint64_t master = 99;
  CHECK(derive_seed(master, "rollout") == derive_seed(master, "rollout"));
  CHECK(derive_seed(master, "rollout") != derive_seed(master, "eval"));
  CHECK(derive_seed(master, "lane", 0) != derive_seed(master, "lane", 1));
  CHECK(derive_seed(master, "lane", 0) != derive_seed(master, "lane"));
  CHECK(derive_seed(master, "lane", 3) != derive_seed(master + 1, "lane", 3));
}

TEST_CASE("rng state round-trips and resumes the same stream") {
  Rng rng(5);
  for (int i = 0; i < 17; ++i) rng.next_u64();
  const auto saved = rng.state();
  std::vector<std::uint64_t> expected;
  for (int i = 0; i < 32; ++i) expected.push_back(rng.next_u64());

  Rng resumed(0);
  resumed.set_state(saved);
  for (int i = 0; i < 32; ++i) CHECK(resumed.next_u64() == expected[static_cast<std::size_t>(i)]);
}

TEST_CASE("format_double round-trips exactly") {
  Rng rng(2024);
  std::vector<double> cases = {0.0,    -0.0,   1.0,     -1.0,   0.1,
                               1.0 / 3.0, 1e-300, 1e300,  500.0,  2.4,
                               0.2094395102393195, 1e-8,  123456789.123456789};
  for (int i = 0; i < 10000; ++i) {
    cases.push_back(rng.normal() * std::pow(10.0, rng.uniform(-12.0, 12.0)));
  }
  for (double v : cases) {
    const double back = parse_double(format_double(v));
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
  CHECK(format_double(500.0) == "500");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("format_csv_row joins values with commas") {
  const double values[] = {1.0, 2.5, -3.0};
  CHECK(format_csv_row(values) == "1,2.5,-3");
}

TEST_CASE("atomic_write_file leaves only the final file") {
  const auto dir = std::filesystem::temp_directory_path() / "robustrl_io_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "a.csv";
  atomic_write_file(path, "hello\n");
  CHECK(read_file(path) == "hello\n");
  atomic_write_file(path, "replaced\n");
  CHECK(read_file(path) == "replaced\n");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) entries += 1;
  CHECK(entries == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("parse_csv splits header, rows, and metadata") {
  const CsvTable t = parse_csv("# run=alpha\n# note=x=y\na,b,c\n1,2,3\n4,5,6\n");
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == std::vector<std::string>{"1", "2", "3"});
  CHECK(t.rows[1] == std::vector<std::string>{"4", "5", "6"});
  CHECK(t.metadata.at("run") == "alpha");
  CHECK(t.metadata.at("note") == "x=y");
}

TEST_CASE("csv writer and reader round-trip a numeric table") {
  std::string text = "x,y\n";
  Rng rng(8);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) {
    rows.push_back({rng.normal(), rng.normal() * 1e-7});
    text += format_csv_row(rows.back()) + "\n";
  }
  const CsvTable t = parse_csv(text);
  REQUIRE(t.rows.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(parse_double(t.rows[i][0]) == rows[i][0]);
    CHECK(parse_double(t.rows[i][1]) == rows[i][1]);
  }
}

TEST_CASE("parallel_for visits each index once for any worker count") {
  for (int workers : {1, 2, 3, 8}) {
    std::vector<std::atomic<int>> hits(101);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i] += 1; });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("parallel_for propagates exceptions from workers") {
  CHECK_THROWS_AS(
      parallel_for(16, 4,
                   [&](std::size_t i) {
                     if (i == 9) throw InvalidInputError("boom");
                   }),
      InvalidInputError);
}

TEST_CASE("worker resolution honors the thread cap variable") {
  CHECK(resolve_workers(3) >= 1);
  setenv("ROBUSTRL_THREADS", "2", 1);
  CHECK(resolve_workers(8) == 2);
  CHECK(resolve_workers(1) == 1);
  unsetenv("ROBUSTRL_THREADS");
  CHECK(resolve_workers(8) == 8);
}

TEST_CASE("error hierarchy keeps messages and the common base") {
  const ConfigError e("config: bad key");
  CHECK(std::string(e.what()) == "config: bad key");
  CHECK_THROWS_AS(throw EnvDivergedError("x"), Error);
  CHECK_THROWS_AS(throw CheckpointError("x"), Error);
}
