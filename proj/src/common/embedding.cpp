#include "detect/embedding.hpp"

#include <cmath>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "detect/error.hpp"
#include "detect/hashing.hpp"
#include "detect/text.hpp"

namespace detect {

std::vector<double> mean_rows(const std::vector<double>& rows, std::size_t count, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  if (count == 0) return out;
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t k = 0; k < dim; ++k) out[k] += rows[r * dim + k];
  }
  for (auto& v : out) v /= static_cast<double>(count);
  return out;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::uint64_t seed) : dim_(dimension), seed_(seed) {
  if (dimension == 0) throw InvalidArgument("embedding dimension must be positive");
}

std::string HashingEmbedder::model_id() const { return "hashing-" + std::to_string(dim_); }

std::vector<double> HashingEmbedder::token_vector(std::string_view token) const {
  const std::u32string word = text::decode_utf8(text::to_lower(token));
  std::vector<std::string> features;
  features.push_back("w:" + text::encode_utf8(word));
  std::u32string marked = U"<" + word + U">";
  for (std::size_t n = 3; n <= 5; ++n) {
    if (marked.size() < n) break;
    for (std::size_t i = 0; i + n <= marked.size(); ++i) {
      features.push_back("g:" + text::encode_utf8(std::u32string_view(marked).substr(i, n)));
    }
  }
  std::vector<double> v(dim_, 0.0);
  for (const auto& f : features) {
    SplitMix64 rng(fnv1a64(f) ^ seed_);
    for (auto& x : v) x += rng.normal();
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& x : v) x /= norm;
  }
  return v;
}

TextEmbedding HashingEmbedder::embed(std::string_view text) const {
  TextEmbedding out;
  out.tokens = text::tokenize_words(text);
  out.token_vectors.reserve(out.tokens.size() * dim_);
  for (const auto& t : out.tokens) {
    const auto v = token_vector(t);
    out.token_vectors.insert(out.token_vectors.end(), v.begin(), v.end());
  }
  out.sentence = mean_rows(out.token_vectors, out.tokens.size(), dim_);
  return out;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model_id, std::size_t dimension,
                           int timeout_seconds)
    : base_url_(std::move(base_url)), model_id_(std::move(model_id)), dim_(dimension),
      timeout_seconds_(timeout_seconds) {}

TextEmbedding HttpEmbedder::embed(std::string_view text) const {
  httplib::Client client(base_url_);
  client.set_read_timeout(timeout_seconds_, 0);
  client.set_connection_timeout(timeout_seconds_, 0);
  const nlohmann::json body = {{"model", model_id_}, {"text", std::string(text)}};
  auto res = client.Post("/embed", body.dump(), "application/json");
  if (!res) throw EndpointError("embedding request to " + base_url_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw EndpointError("embedding endpoint returned HTTP " + std::to_string(res->status));
  }
  TextEmbedding out;
  try {
    const auto j = nlohmann::json::parse(res->body);
    out.tokens = j.at("tokens").get<std::vector<std::string>>();
    const auto& rows = j.at("token_embeddings");
    if (rows.size() != out.tokens.size()) throw EndpointError("token/embedding count mismatch");
    for (const auto& row : rows) {
      if (row.size() != dim_) {
        throw EndpointError("embedding dimension " + std::to_string(row.size()) + " != " + std::to_string(dim_));
      }
      for (const auto& x : row) out.token_vectors.push_back(x.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw EndpointError(std::string("malformed embedding response: ") + e.what());
  }
  out.sentence = mean_rows(out.token_vectors, out.tokens.size(), dim_);
  return out;
}

std::shared_ptr<const EmbeddingProvider> resolve_embedder(const std::string& encoder_id,
                                                          const EmbedderOptions& options) {
  constexpr std::string_view prefix = "hashing-";
  if (encoder_id.rfind(prefix, 0) == 0) {
    std::size_t dim = 0;
    try {
      dim = std::stoul(encoder_id.substr(prefix.size()));
    } catch (const std::exception&) {
      throw InvalidArgument("bad hashing encoder id: " + encoder_id);
    }
    return std::make_shared<HashingEmbedder>(dim);
  }
  if (options.url.empty()) {
    throw InvalidArgument("encoder '" + encoder_id +
                          "' is not built in; configure an embedding endpoint url or use hashing-<dim>");
  }
  return std::make_shared<HttpEmbedder>(options.url, encoder_id, options.dimension);
}

}  // namespace detect
