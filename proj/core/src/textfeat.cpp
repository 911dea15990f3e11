#include "taste/textfeat.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "taste/error.hpp"

namespace taste {

EmbeddingStore::EmbeddingStore(std::size_t dim, EmbeddingSource source)
    : dim_(dim), source_(source) {
  if (dim == 0) throw ShapeError("embedding dimension must be positive");
}

void EmbeddingStore::insert(std::string key, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw ShapeError("embedding '" + key + "' has " + std::to_string(vector.size()) +
                     " values, expected " + std::to_string(dim_));
  }
  auto [it, inserted] = vectors_.emplace(std::move(key), std::move(vector));
  if (!inserted) throw ValidationError("duplicate embedding key '" + it->first + "'");
}

const std::vector<double>* EmbeddingStore::find(std::string_view key) const {
  auto it = vectors_.find(key);
  return it == vectors_.end() ? nullptr : &it->second;
}

const std::vector<double>& EmbeddingStore::at(std::string_view key) const {
  if (const auto* v = find(key)) return *v;
  throw ValidationError("no embedding for '" + std::string(key) + "'");
}

namespace {

constexpr std::string_view kMagic = "TASTE-EMB v1 ";

bool parse_double(std::string_view token, double& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

}  // namespace

EmbeddingStore read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kMagic)) {
    throw ParseError(1, "expected header 'TASTE-EMB v1 <dim>'");
  }
  std::size_t dim = 0;
  {
    std::string_view d = std::string_view(line).substr(kMagic.size());
    auto [ptr, ec] = std::from_chars(d.data(), d.data() + d.size(), dim);
    if (ec != std::errc() || ptr != d.data() + d.size() || dim == 0) {
      throw ParseError(1, "bad dimension in header '" + line + "'");
    }
  }

  EmbeddingStore store(dim, EmbeddingSource::kExternal);
  std::size_t lineno = 1;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError(lineno, "expected key<TAB>values");
    std::string key = line.substr(0, tab);
    values.clear();
    std::string_view rest = std::string_view(line).substr(tab + 1);
    while (!rest.empty()) {
      const auto sp = rest.find(' ');
      std::string_view tok = rest.substr(0, sp);
      if (!tok.empty()) {
        double v = 0.0;
        if (!parse_double(tok, v)) {
          throw ParseError(lineno, "bad value '" + std::string(tok) + "' for key '" + key + "'");
        }
        values.push_back(v);
      }
      if (sp == std::string_view::npos) break;
      rest.remove_prefix(sp + 1);
    }
    if (values.size() != dim) {
      throw ParseError(lineno, "key '" + key + "' has " + std::to_string(values.size()) +
                                   " values, header says " + std::to_string(dim));
    }
    if (store.contains(key)) throw ParseError(lineno, "duplicate key '" + key + "'");
    store.insert(std::move(key), values);
  }
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings '" + path.string() + "'");
  return read_embeddings(in);
}

void write_embeddings(std::ostream& out, const EmbeddingStore& store) {
  out << kMagic << store.dim() << '\n';
  char buf[32];
  for (const auto& [key, vec] : store.entries()) {
    out << key << '\t';
    for (std::size_t i = 0; i < vec.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g", vec[i]);
      if (i) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingStore& store) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embeddings '" + path.string() + "'");
  write_embeddings(out, store);
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

namespace {

// FNV-1a; the salt selects an independent hash for the sign.
std::uint64_t fnv1a(std::string_view s, std::uint64_t salt) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ salt;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<double> hash_embed(std::string_view text, std::size_t dim) {
  if (dim < 8) throw ShapeError("hashed embedding dimension must be at least 8");
  std::vector<double> v(dim, 0.0);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const std::uint64_t bucket = fnv1a(token, 0) % dim;
    const bool negative = (fnv1a(token, 0x5bd1e995ULL) >> 63) != 0;
    v[bucket] += negative ? -1.0 : 1.0;
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else {
      token.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();

  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

std::vector<double> hash_embed(const Utterance& u, std::size_t dim) { return hash_embed(u.text, dim); }

EmbeddingStore hash_embed_corpus(std::span<const Conversation> corpus, std::size_t dim) {
  EmbeddingStore store(dim, EmbeddingSource::kHashed);
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) store.insert(u.id, hash_embed(u.text, dim));
  }
  return store;
}

}  // namespace taste
