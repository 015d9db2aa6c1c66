#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace detect {

// Sentence vector plus one vector per token, all of the provider's dimension.
struct TextEmbedding {
  std::vector<std::string> tokens;
  std::vector<double> token_vectors;  // tokens.size() x dimension, row-major
  std::vector<double> sentence;       // mean of token vectors

  std::size_t token_count() const { return tokens.size(); }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string model_id() const = 0;
  virtual std::size_t dimension() const = 0;
  // False when callers must serialize embed() calls.
  virtual bool thread_safe() const { return true; }
  // Deterministic for a fixed model and text. Throws EndpointError on backend failure.
  virtual TextEmbedding embed(std::string_view text) const = 0;
};

// In-process encoder: each token is the normalized sum of seeded Gaussian vectors for the
// lowercased word and its character 3..5-grams (with boundary markers). Words sharing
// morphology land close together; unrelated words are near-orthogonal. Frozen: there are
// no trainable parameters.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dimension, std::uint64_t seed = 0x5eed);
  std::string model_id() const override;
  std::size_t dimension() const override { return dim_; }
  TextEmbedding embed(std::string_view text) const override;

  std::vector<double> token_vector(std::string_view token) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Remote encoder reached over HTTP. Request: POST {base_url}/embed with
// {"model": model_id, "text": text}; response: {"tokens": [...], "token_embeddings": [[...]]}.
// The sentence vector is the mean of the returned token vectors.
class HttpEmbedder final : public EmbeddingProvider {
 public:
  HttpEmbedder(std::string base_url, std::string model_id, std::size_t dimension, int timeout_seconds = 60);
  std::string model_id() const override { return model_id_; }
  std::size_t dimension() const override { return dim_; }
  TextEmbedding embed(std::string_view text) const override;

 private:
  std::string base_url_;
  std::string model_id_;
  std::size_t dim_;
  int timeout_seconds_;
};

struct EmbedderOptions {
  std::string url;          // remote encoder base URL; empty -> only built-in encoders resolve
  std::size_t dimension = 768;
};

// Resolves an encoder id. "hashing-<d>" gives a HashingEmbedder of dimension d; any other id
// needs options.url and resolves to an HttpEmbedder. Throws InvalidArgument otherwise.
std::shared_ptr<const EmbeddingProvider> resolve_embedder(const std::string& encoder_id,
                                                          const EmbedderOptions& options = {});

// Mean of token vectors; zero vector for an empty token list.
std::vector<double> mean_rows(const std::vector<double>& rows, std::size_t count, std::size_t dim);

}  // namespace detect
