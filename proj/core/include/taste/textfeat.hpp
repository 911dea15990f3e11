#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taste/corpus.hpp"

namespace taste {

enum class EmbeddingSource { kExternal, kHashed };

inline constexpr std::size_t kDefaultExternalDim = 384;
inline constexpr std::size_t kDefaultHashedDim = 256;

/// Fixed-dimension vectors keyed by utterance id (text) or author id (structure).
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim, EmbeddingSource source = EmbeddingSource::kExternal);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  EmbeddingSource source() const noexcept { return source_; }

  /// Throws ShapeError on wrong arity and ValidationError on a duplicate key.
  void insert(std::string key, std::vector<double> vector);
  const std::vector<double>* find(std::string_view key) const;
  const std::vector<double>& at(std::string_view key) const;
  bool contains(std::string_view key) const { return find(key) != nullptr; }

  const std::map<std::string, std::vector<double>, std::less<>>& entries() const noexcept {
    return vectors_;
  }

  bool operator==(const EmbeddingStore& other) const {
    return dim_ == other.dim_ && vectors_ == other.vectors_;
  }

 private:
  std::size_t dim_;
  EmbeddingSource source_;
  std::map<std::string, std::vector<double>, std::less<>> vectors_;
};

/// TASTE-EMB v1: header `TASTE-EMB v1 <dim>`, then `key<TAB>v1 v2 ... v_dim`
/// with values printed to 9 significant digits.
EmbeddingStore read_embeddings(std::istream& in);
EmbeddingStore load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingStore& store);
void write_embeddings(const std::filesystem::path& path, const EmbeddingStore& store);

/// Feature-hashed bag of lowercase whitespace tokens, L2-normalized.
/// Empty text gives the zero vector. `dim` must be at least 8.
std::vector<double> hash_embed(std::string_view text, std::size_t dim = kDefaultHashedDim);
std::vector<double> hash_embed(const Utterance& u, std::size_t dim = kDefaultHashedDim);

/// hash_embed over every utterance of the corpus, keyed by utterance id.
EmbeddingStore hash_embed_corpus(std::span<const Conversation> corpus,
                                 std::size_t dim = kDefaultHashedDim);

}  // namespace taste
