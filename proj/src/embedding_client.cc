#include "spice/embedding_client.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "spice/errors.h"
#include "spice/scene_graph.h"

namespace spice {

Transport http_transport(const std::string& endpoint) {
  const std::size_t scheme = endpoint.find("://");
  const std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const std::size_t slash = endpoint.find('/', host_start);
  std::string base = endpoint.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : endpoint.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  return [base, prefix](const std::string& path,
                        const std::string& body) -> std::optional<HttpResponse> {
    httplib::Client client(base);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    auto result = client.Post(prefix + path, body, "application/json");
    if (!result) return std::nullopt;
    return HttpResponse{result->status, result->body};
  };
}

std::filesystem::path default_cache_directory() {
  const char* dir = std::getenv("SPICE_EMBEDDING_CACHE");
  return dir == nullptr ? std::filesystem::path() : std::filesystem::path(dir);
}

EmbeddingCache::EmbeddingCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {}

std::filesystem::path EmbeddingCache::file_for(const std::string& source) const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : source) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.jsonl", static_cast<unsigned long long>(hash));
  return directory_ / name;
}

void EmbeddingCache::load_locked(const std::string& source) const {
  if (tables_.count(source)) return;
  EmbeddingTable table(0, source);
  if (!directory_.empty()) {
    std::ifstream in(file_for(source));
    if (in) {
      table = read_embedding_table(in);
      if (table.source() != source) {
        throw ProtocolError("cache file " + file_for(source).string() + " belongs to '" +
                            table.source() + "'");
      }
    }
  }
  tables_.emplace(source, std::move(table));
}

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& source,
                                                       const std::string& phrase) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = tables_.find(source); it != tables_.end()) {
      if (const auto* v = it->second.find(phrase)) return *v;
      return std::nullopt;
    }
  }
  std::unique_lock lock(mutex_);
  load_locked(source);
  if (const auto* v = tables_.at(source).find(phrase)) return *v;
  return std::nullopt;
}

void EmbeddingCache::put(const std::string& source, const std::string& phrase,
                         const std::vector<double>& vector) {
  std::unique_lock lock(mutex_);
  load_locked(source);
  EmbeddingTable& table = tables_.at(source);
  const bool fresh = table.empty();
  table.insert(phrase, vector);
  if (directory_.empty()) return;
  std::filesystem::create_directories(directory_);
  const auto path = file_for(source);
  const bool write_header = fresh && !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (write_header) {
    out << nlohmann::json{{"dimension", table.dimension()}, {"source", source}}.dump() << '\n';
  }
  out << nlohmann::json{{"phrase", normalize_text(phrase)}, {"vector", vector}}.dump() << '\n';
}

EmbeddingClient::EmbeddingClient(Transport transport, std::string source,
                                 EmbeddingCache& cache, FetchOptions options)
    : transport_(std::move(transport)),
      source_(std::move(source)),
      cache_(cache),
      options_(options) {
  if (options_.batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (options_.attempts < 1) throw InvalidArgument("attempts must be at least 1");
}

std::vector<std::vector<double>> EmbeddingClient::request_batch(
    const std::vector<std::string>& batch) {
  const std::string body = nlohmann::json{{"texts", batch}}.dump();
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
    ++requests_sent_;
    const auto response = transport_("/embed", body);
    if (response && response->status == 200) {
      try {
        const auto parsed = nlohmann::json::parse(response->body);
        auto vectors = parsed.at("embeddings").get<std::vector<std::vector<double>>>();
        if (vectors.size() != batch.size()) {
          throw ProtocolError("service returned " + std::to_string(vectors.size()) +
                              " embeddings for " + std::to_string(batch.size()) + " texts");
        }
        return vectors;
      } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed embedding response: ") + e.what());
      }
    }
    if (attempt < options_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw ServiceUnavailable("embedding service failed " + std::to_string(options_.attempts) +
                           " attempts");
}

EmbeddingTable EmbeddingClient::fetch(const std::vector<std::string>& phrases) {
  EmbeddingTable table(0, source_);
  std::vector<std::string> pending;
  std::set<std::string> seen;
  for (const auto& raw : phrases) {
    std::string phrase = normalize_text(raw);
    if (phrase.empty() || !seen.insert(phrase).second) continue;
    if (auto cached = cache_.get(source_, phrase)) {
      table.insert(phrase, std::move(*cached));
    } else {
      pending.push_back(std::move(phrase));
    }
  }

  for (std::size_t start = 0; start < pending.size(); start += options_.batch_size) {
    const std::size_t end = std::min(pending.size(), start + options_.batch_size);
    const std::vector<std::string> batch(pending.begin() + start, pending.begin() + end);
    auto vectors = request_batch(batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (table.dimension() != 0 && vectors[i].size() != table.dimension()) {
        throw ProtocolError("embedding dimension " + std::to_string(vectors[i].size()) +
                            " does not match " + std::to_string(table.dimension()));
      }
      try {
        table.insert(batch[i], vectors[i]);
        cache_.put(source_, batch[i], vectors[i]);
      } catch (const InvalidArgument& e) {
        throw ProtocolError(e.what());
      }
    }
  }
  return table;
}

EmbeddingTable fetch_embeddings(const std::string& endpoint,
                                const std::vector<std::string>& phrases,
                                FetchOptions options) {
  EmbeddingCache cache(default_cache_directory());
  const std::string source = options.source.empty() ? endpoint : options.source;
  EmbeddingClient client(http_transport(endpoint), source, cache, options);
  return client.fetch(phrases);
}

}  // namespace spice
