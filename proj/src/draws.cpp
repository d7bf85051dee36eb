#include "bwf/draws.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bwf/error.hpp"

namespace bwf {

namespace {

constexpr const char* kFixedColumns[] = {"chain", "iteration", "divergent", "energy",
                                         "accept_stat"};

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || ptr != last) {
    // from_chars does not accept "inf"/"nan" spellings in every libstdc++.
    if (text == "inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    if (text == "nan") return NAN;
    throw ValidationError(where + ": malformed number '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& text, const std::string& where) {
  int v = 0;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || ptr != last) {
    throw ValidationError(where + ": malformed integer '" + text + "'");
  }
  return v;
}

// Rows accumulate in the flat buffer; the shape is fixed once all are read.
void append_row(Draws& d, const std::vector<double>& params) {
  auto& data = d.params.data();
  data.insert(data.end(), params.begin(), params.end());
}

}  // namespace

std::size_t Draws::n_chains() const {
  return std::set<int>(chain.begin(), chain.end()).size();
}

bool Draws::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::size_t Draws::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("draws have no parameter '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> Draws::column(const std::string& name) const {
  if (name.size() > 5 && name.rfind("log(", 0) == 0 && name.back() == ')') {
    auto values = params.column(index_of(name.substr(4, name.size() - 5)));
    for (auto& v : values) {
      if (!(v > 0)) throw ValidationError("log of non-positive parameter in " + name);
      v = std::log(v);
    }
    return values;
  }
  return params.column(index_of(name));
}

std::vector<double> Draws::chain_values(const std::string& name, int chain_id) const {
  const auto all = column(name);
  std::vector<double> out;
  for (std::size_t s = 0; s < all.size(); ++s) {
    if (chain[s] == chain_id) out.push_back(all[s]);
  }
  return out;
}

std::size_t Draws::divergent_count() const {
  return static_cast<std::size_t>(std::count(divergent.begin(), divergent.end(), true));
}

void Draws::validate() const {
  const std::size_t S = params.rows();
  if (params.cols() != names.size() || chain.size() != S || iteration.size() != S ||
      divergent.size() != S || energy.size() != S || accept_stat.size() != S) {
    throw ValidationError("draws: per-iteration columns disagree in length");
  }
}

void write_draws_csv(const std::filesystem::path& path, const Draws& draws) {
  draws.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "chain,iteration,divergent,energy,accept_stat";
  for (const auto& n : draws.names) out << ',' << n;
  out << '\n';
  for (std::size_t s = 0; s < draws.size(); ++s) {
    out << draws.chain[s] << ',' << draws.iteration[s] << ',' << (draws.divergent[s] ? 1 : 0)
        << ',' << format_double(draws.energy[s]) << ',' << format_double(draws.accept_stat[s]);
    for (double v : draws.params.row(s)) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Draws read_draws_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty draws file");
  const auto header = split(line);
  if (header.size() < 5 || !std::equal(std::begin(kFixedColumns), std::end(kFixedColumns),
                                       header.begin())) {
    throw ValidationError(path.string() +
                          ":1: header must start with chain,iteration,divergent,energy,accept_stat");
  }
  Draws d;
  d.names.assign(header.begin() + 5, header.end());
  const std::size_t P = d.names.size();
  std::vector<double> row(P);
  std::size_t line_no = 1, S = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != P + 5) throw ValidationError(where + ": wrong number of fields");
    d.chain.push_back(parse_int(f[0], where));
    d.iteration.push_back(parse_int(f[1], where));
    const int div = parse_int(f[2], where);
    if (div != 0 && div != 1) throw ValidationError(where + ": divergent must be 0 or 1");
    d.divergent.push_back(div == 1);
    d.energy.push_back(parse_number(f[3], where));
    d.accept_stat.push_back(parse_number(f[4], where));
    for (std::size_t p = 0; p < P; ++p) row[p] = parse_number(f[p + 5], where);
    append_row(d, row);
    ++S;
  }
  Matrix m(S, P);
  m.data() = std::move(d.params.data());
  d.params = std::move(m);
  d.validate();
  return d;
}

void write_draws_jsonl(const std::filesystem::path& path, const Draws& draws) {
  draws.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t s = 0; s < draws.size(); ++s) {
    nlohmann::ordered_json j;
    j["chain"] = draws.chain[s];
    j["iteration"] = draws.iteration[s];
    j["divergent"] = static_cast<bool>(draws.divergent[s]);
    j["energy"] = draws.energy[s];
    j["accept_stat"] = draws.accept_stat[s];
    const auto row = draws.params.row(s);
    for (std::size_t p = 0; p < draws.names.size(); ++p) j[draws.names[p]] = row[p];
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Draws read_draws_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Draws d;
  std::string line;
  std::size_t line_no = 0, S = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!j.is_object() || j.size() < 5) throw ValidationError(where + ": expected a draw object");
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    if (!std::equal(std::begin(kFixedColumns), std::end(kFixedColumns), keys.begin())) {
      throw ValidationError(where + ": keys must start with the fixed draw columns");
    }
    if (S == 0) {
      d.names.assign(keys.begin() + 5, keys.end());
      row.resize(d.names.size());
    } else if (!std::equal(d.names.begin(), d.names.end(), keys.begin() + 5, keys.end())) {
      throw ValidationError(where + ": parameter names differ from the first line");
    }
    try {
      d.chain.push_back(j["chain"].get<int>());
      d.iteration.push_back(j["iteration"].get<int>());
      d.divergent.push_back(j["divergent"].get<bool>());
      d.energy.push_back(j["energy"].get<double>());
      d.accept_stat.push_back(j["accept_stat"].get<double>());
      for (std::size_t p = 0; p < d.names.size(); ++p) row[p] = j[d.names[p]].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    append_row(d, row);
    ++S;
  }
  Matrix m(S, d.names.size());
  m.data() = std::move(d.params.data());
  d.params = std::move(m);
  d.validate();
  return d;
}

}  // namespace bwf
