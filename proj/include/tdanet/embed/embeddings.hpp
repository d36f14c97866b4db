#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdanet/embed/catalog.hpp"

namespace tdanet::embed {

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Immutable class-name -> vector map. Every vector has length dim().
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::map<std::string, std::vector<double>> vectors)
      : dim_(dim), vectors_(std::move(vectors)) {
    for (const auto& [name, v] : vectors_) {
      if (v.size() != dim_) {
        throw EmbeddingError("EmbeddingTable: vector for '" + name + "' has length " + std::to_string(v.size()) +
                             ", expected " + std::to_string(dim_));
      }
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(std::string_view name) const { return vectors_.find(std::string(name)) != vectors_.end(); }

  std::span<const double> at(std::string_view name) const {
    const auto it = vectors_.find(std::string(name));
    if (it == vectors_.end()) throw EmbeddingError("EmbeddingTable: unknown class '" + std::string(name) + "'");
    return it->second;
  }

  std::vector<std::string> classes() const {
    std::vector<std::string> out;
    for (const auto& [name, v] : vectors_) out.push_back(name);
    return out;
  }

  const std::map<std::string, std::vector<double>>& entries() const { return vectors_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, std::vector<double>> vectors_;
};

inline std::span<const double> embedding_of(const EmbeddingTable& table, std::string_view cls) { return table.at(cls); }

namespace detail {

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::string joined_token(std::string_view name) {
  std::string out(name);
  for (char& ch : out) {
    if (ch == ' ') ch = '_';
  }
  return out;
}

}  // namespace detail

// Reads `token v1 ... vE` lines. A class name resolves to the token with its
// spaces replaced by underscores when that token exists; otherwise to the
// mean of its whitespace-separated words.
inline EmbeddingTable load_text_embeddings(std::istream& in, const std::vector<std::string>& wanted) {
  std::set<std::string> needed;
  for (const auto& cls : wanted) {
    needed.insert(detail::joined_token(cls));
    for (auto& w : detail::split_words(cls)) needed.insert(w);
  }

  std::map<std::string, std::vector<double>> tokens;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> values;
    std::string field;
    while (fields >> field) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') {
        throw EmbeddingError("embedding parse error at line " + std::to_string(line_no) + ": bad number '" + field + "'");
      }
      values.push_back(v);
    }
    if (values.empty()) {
      throw EmbeddingError("embedding parse error at line " + std::to_string(line_no) + ": no vector values");
    }
    if (dim == 0) {
      dim = values.size();
    } else if (values.size() != dim) {
      throw EmbeddingError("embedding parse error at line " + std::to_string(line_no) + ": dimension " +
                           std::to_string(values.size()) + ", expected " + std::to_string(dim));
    }
    if (needed.count(token) != 0 && tokens.count(token) == 0) tokens.emplace(token, std::move(values));
  }

  std::map<std::string, std::vector<double>> table;
  std::vector<std::string> missing;
  for (const auto& cls : wanted) {
    if (const auto it = tokens.find(detail::joined_token(cls)); it != tokens.end()) {
      table[cls] = it->second;
      continue;
    }
    const auto words = detail::split_words(cls);
    bool ok = !words.empty();
    std::vector<double> acc(dim, 0.0);
    for (const auto& w : words) {
      const auto it = tokens.find(w);
      if (it == tokens.end()) {
        ok = false;
        break;
      }
      for (std::size_t k = 0; k < dim; ++k) acc[k] += it->second[k];
    }
    if (!ok) {
      missing.push_back(cls);
      continue;
    }
    for (double& v : acc) v /= static_cast<double>(words.size());
    table[cls] = std::move(acc);
  }
  if (!missing.empty()) {
    std::string msg = "embedding file lacks tokens for classes:";
    for (const auto& m : missing) msg += " '" + m + "'";
    throw EmbeddingError(msg);
  }
  return EmbeddingTable(dim, std::move(table));
}

inline EmbeddingTable load_text_embeddings(const std::filesystem::path& path, const std::vector<std::string>& wanted) {
  std::ifstream in(path);
  if (!in) throw EmbeddingError("cannot open embedding file " + path.string());
  return load_text_embeddings(in, wanted);
}

// Writes the table in the loader's format, using underscore-joined tokens for
// multi-word names so a reload reproduces every vector exactly.
inline void save_text_embeddings(const EmbeddingTable& table, std::ostream& out) {
  char buf[40];
  for (const auto& [name, vec] : table.entries()) {
    out << detail::joined_token(name);
    for (double v : vec) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

// One orthonormalised prototype per semantic cluster; each class vector is
// its prototype plus isotropic gaussian noise, renormalised.
inline EmbeddingTable synth_embeddings(const ClassCatalog& catalog, std::size_t dim, double sigma, std::uint64_t seed) {
  if (dim < 2) throw EmbeddingError("synth_embeddings: dimension must be at least 2");
  if (!(sigma >= 0.0)) throw EmbeddingError("synth_embeddings: noise sigma must be non-negative");
  const std::vector<int> protos = catalog.prototype_ids();
  if (protos.size() > dim) {
    throw EmbeddingError("synth_embeddings: " + std::to_string(protos.size()) + " prototypes cannot be orthogonal in " +
                         std::to_string(dim) + " dimensions");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto normalize = [](std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-12) throw EmbeddingError("synth_embeddings: degenerate vector");
    for (double& x : v) x /= n;
  };

  std::map<int, std::vector<double>> basis;
  std::vector<std::vector<double>> accepted;
  for (int id : protos) {
    std::vector<double> v(dim);
    for (;;) {
      for (double& x : v) x = normal(rng);
      for (const auto& b : accepted) {
        double d = 0.0;
        for (std::size_t k = 0; k < dim; ++k) d += v[k] * b[k];
        for (std::size_t k = 0; k < dim; ++k) v[k] -= d * b[k];
      }
      double n = 0.0;
      for (double x : v) n += x * x;
      if (n > 1e-6) break;
    }
    normalize(v);
    accepted.push_back(v);
    basis.emplace(id, std::move(v));
  }

  std::map<std::string, std::vector<double>> table;
  for (const auto& cls : catalog.classes()) {
    std::vector<double> v = basis.at(cls.prototype);
    for (double& x : v) x += sigma * normal(rng);
    normalize(v);
    table.emplace(cls.name, std::move(v));
  }
  return EmbeddingTable(dim, std::move(table));
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace tdanet::embed
