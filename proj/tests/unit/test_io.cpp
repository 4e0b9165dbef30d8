#include <doctest.h>

#include <cmath>
#include <sstream>

#include "reflectmc/csv.hpp"
#include "reflectmc/digest.hpp"
#include "reflectmc/trace_io.hpp"

using namespace reflectmc;

TEST_CASE("doubles round-trip through text") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv write and read") {
  std::ostringstream os;
  os << "# a comment\n";
  write_csv_header(os, {"x", "n", "label"});
  CsvRow row;
  row << 0.25 << std::uint64_t{3} << "abc";
  row.write(os);
  std::istringstream is(os.str());
  auto t = read_csv(is);
  CHECK(t.comments.size() == 1);
  CHECK(t.columns == std::vector<std::string>{"x", "n", "label"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.number(0, t.column("x")) == 0.25);
  CHECK(t.rows[0][2] == "abc");
  CHECK_THROWS_AS((void)t.column("y"), std::out_of_range);
  CHECK_THROWS_AS((void)t.number(0, 2), std::invalid_argument);
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("trace csv layout") {
  CHECK(trace_columns(2, false) == std::vector<std::string>{"t", "particle_id", "q_0", "q_1", "branch"});
  CHECK(trace_columns(1, true) == std::vector<std::string>{"t", "particle_id", "q_0", "p_0", "branch"});

  SeededStream rng(3);
  GmcParams params{0.4, 5, {3, 1}, true};
  auto tr = evolve_ensemble(PointVec{0.0, 0.5}, 2, params, Volume::cube(2), rng);
  std::ostringstream os;
  write_trace_csv(os, tr, {{"seed", 3}});
  std::istringstream is(os.str());
  auto t = read_csv(is);
  CHECK(t.rows.size() == 8);
  CHECK(t.rows[0][t.column("branch")] == "none");
  CHECK(t.number(2, t.column("t")) == 1.0);
  CHECK(t.number(3, t.column("q_1")) == tr.snapshots[1].positions[3]);
}
