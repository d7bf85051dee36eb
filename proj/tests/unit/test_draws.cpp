#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bwf/draws.hpp"
#include "bwf/error.hpp"
#include "bwf/rng.hpp"
#include "helpers.hpp"

using namespace bwf;
namespace fs = std::filesystem;

namespace {

Draws random_draws() {
  RngStream rng(17);
  std::vector<std::vector<double>> rows(40, std::vector<double>(3));
  for (auto& r : rows) {
    for (auto& v : r) v = rng.normal() * 1e3 / 7.0;
  }
  Draws d = test::make_draws({"beta0", "sigma", "b1[2]"}, rows);
  for (std::size_t s = 0; s < d.size(); ++s) {
    d.chain[s] = static_cast<int>(s / 20);
    d.iteration[s] = static_cast<int>(s % 20);
    d.divergent[s] = s % 7 == 3;
    d.energy[s] = rng.normal();
    d.accept_stat[s] = rng.uniform();
  }
  return d;
}

}  // namespace

TEST_CASE("draws csv and jsonl round trips are exact") {
  const Draws d = random_draws();
  const auto csv = fs::temp_directory_path() / "bwf_draws.csv";
  const auto jsonl = fs::temp_directory_path() / "bwf_draws.jsonl";
  write_draws_csv(csv, d);
  write_draws_jsonl(jsonl, d);
  CHECK(read_draws_csv(csv) == d);
  CHECK(read_draws_jsonl(jsonl) == d);
  fs::remove(csv);
  fs::remove(jsonl);
}

TEST_CASE("draws accessors") {
  const Draws d = random_draws();
  CHECK(d.n_chains() == 2);
  CHECK(d.divergent_count() == 6);
  CHECK(d.chain_values("sigma", 1).size() == 20);
  CHECK(d.has("b1[2]"));
  CHECK_THROWS_AS(d.index_of("tau"), ValidationError);
  Draws pos = test::make_draws({"tau"}, {{2.0}, {0.5}});
  CHECK(pos.column("log(tau)")[1] == doctest::Approx(std::log(0.5)));
}

TEST_CASE("draws csv header is checked") {
  const auto path = fs::temp_directory_path() / "bwf_bad_draws.csv";
  std::ofstream(path) << "chain,iteration,energy\n0,0,1\n";
  CHECK_THROWS_AS(read_draws_csv(path), ValidationError);
  fs::remove(path);
}
