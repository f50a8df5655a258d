#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "spice/similarity.h"

namespace spice {

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POSTs a JSON body to `path` relative to the endpoint. Returns nullopt on
// a transport failure (connection refused, timeout, ...).
using Transport =
    std::function<std::optional<HttpResponse>(const std::string& path, const std::string& body)>;

// cpp-httplib transport for "http://host:port[/prefix]".
Transport http_transport(const std::string& endpoint);

// Persistent (source label, phrase) -> vector store. One JSONL file per
// source label under `directory`, in the embedding-table format; new
// entries are appended. An empty directory keeps the cache in memory only.
// Concurrent readers are allowed; writers are serialized.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path directory = {});

  std::optional<std::vector<double>> get(const std::string& source,
                                         const std::string& phrase) const;
  void put(const std::string& source, const std::string& phrase,
           const std::vector<double>& vector);

  std::filesystem::path file_for(const std::string& source) const;

 private:
  void load_locked(const std::string& source) const;

  std::filesystem::path directory_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::string, EmbeddingTable> tables_;
};

// Directory named by SPICE_EMBEDDING_CACHE, or empty when unset.
std::filesystem::path default_cache_directory();

struct FetchOptions {
  std::size_t batch_size = 256;
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::string source;  // cache key; defaults to the endpoint
};

// Client for the embedding service:
//   POST <endpoint>/embed {"texts": [...]} -> {"embeddings": [[...], ...]}
class EmbeddingClient {
 public:
  EmbeddingClient(Transport transport, std::string source, EmbeddingCache& cache,
                  FetchOptions options = {});

  // Embeds every phrase (normalized, deduplicated), serving cached ones
  // locally and requesting the rest in batches of at most batch_size.
  // Throws ServiceUnavailable after `attempts` failed tries of one batch,
  // ProtocolError on malformed responses or inconsistent dimensions.
  EmbeddingTable fetch(const std::vector<std::string>& phrases);

  std::size_t requests_sent() const { return requests_sent_; }

 private:
  std::vector<std::vector<double>> request_batch(const std::vector<std::string>& batch);

  Transport transport_;
  std::string source_;
  EmbeddingCache& cache_;
  FetchOptions options_;
  std::size_t requests_sent_ = 0;
};

// Convenience wrapper over an HTTP endpoint and the default cache.
EmbeddingTable fetch_embeddings(const std::string& endpoint,
                                const std::vector<std::string>& phrases,
                                FetchOptions options = {});

}  // namespace spice
