#ifndef BWF_TEST_HELPERS_HPP
#define BWF_TEST_HELPERS_HPP

#include <vector>

#include "bwf/dataset.hpp"
#include "bwf/draws.hpp"
#include "bwf/rng.hpp"

namespace bwf::test {

// Single-chain Draws from explicit constrained rows.
inline Draws make_draws(const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& rows) {
  Draws d;
  d.names = names;
  d.params = Matrix(rows.size(), names.size());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (std::size_t p = 0; p < names.size(); ++p) d.params(s, p) = rows[s][p];
    d.chain.push_back(0);
    d.iteration.push_back(static_cast<int>(s));
    d.divergent.push_back(false);
    d.energy.push_back(0.0);
    d.accept_stat.push_back(1.0);
  }
  return d;
}

// Small grouped dataset with x in (0, 4) and unit-scale noise.
inline Dataset toy_grouped(std::size_t n_groups, std::size_t per_group, std::uint64_t seed) {
  RngStream rng(seed);
  Dataset d;
  for (std::size_t j = 0; j < n_groups; ++j) {
    d.group_names.push_back("g" + std::to_string(j));
    const double shift = rng.normal();
    for (std::size_t k = 0; k < per_group; ++k) {
      const double x = 4.0 * rng.uniform();
      d.x.push_back(x);
      d.y.push_back(0.5 + shift + 0.8 * x + 0.3 * rng.normal());
      d.group.push_back(static_cast<int>(j));
    }
  }
  return d;
}

}  // namespace bwf::test

#endif
