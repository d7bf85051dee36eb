#ifndef BWF_DRAWS_HPP
#define BWF_DRAWS_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "bwf/matrix.hpp"

namespace bwf {

/// Post-warmup posterior sample store, constrained scale, ordered by chain
/// and then iteration.
struct Draws {
  std::vector<std::string> names;
  Matrix params;  // S_total x P
  std::vector<int> chain;
  std::vector<int> iteration;
  std::vector<bool> divergent;
  std::vector<double> energy;
  std::vector<double> accept_stat;

  std::size_t size() const noexcept { return params.rows(); }
  std::size_t n_chains() const;

  /// Column index of a parameter; throws ValidationError if absent.
  std::size_t index_of(const std::string& name) const;
  bool has(const std::string& name) const;

  /// Values of a parameter across draws. "log(name)" returns the log of a
  /// positive parameter, which is how scale parameters are plotted.
  std::vector<double> column(const std::string& name) const;

  /// Draws belonging to one chain, in iteration order.
  std::vector<double> chain_values(const std::string& name, int chain_id) const;

  std::size_t divergent_count() const;

  /// Throws ValidationError if the per-iteration lists disagree in length.
  void validate() const;

  friend bool operator==(const Draws&, const Draws&) = default;
};

/// Header: chain,iteration,divergent,energy,accept_stat,<param names...>
void write_draws_csv(const std::filesystem::path& path, const Draws& draws);
Draws read_draws_csv(const std::filesystem::path& path);

/// One JSON object per draw with the CSV columns as keys, in CSV order.
void write_draws_jsonl(const std::filesystem::path& path, const Draws& draws);
Draws read_draws_jsonl(const std::filesystem::path& path);

}  // namespace bwf

#endif  // BWF_DRAWS_HPP
