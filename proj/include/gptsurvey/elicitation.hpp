#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <ctime>
#include <functional>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "gptsurvey/corpus.hpp"
#include "gptsurvey/providers.hpp"

namespace gptsurvey {

// ---------------------------------------------------------------------------
// Series catalog

struct SeriesSpec {
  std::string id;           // short code: SNP, CPI, ...
  std::string target_text;  // prompt insert
  std::string benchmark;    // "AAII", "CFO", "SPF:<column>", or ""
};

// The 14 surveyed series: short code, prompt target text, benchmark linkage.
inline std::vector<SeriesSpec> default_catalog() {
  return {
      {"SNP", "the S&P 500 index", "AAII"},
      {"CPI", "the consumer price index in the United States", "SPF:CPI"},
      {"HS", "housing starts in the United States", "SPF:HOUSING"},
      {"IP", "industrial production in the United States", "SPF:INDPROD"},
      {"DEFL", "the GDP price deflator in the United States", "SPF:PGDP"},
      {"AAA", "the AAA-rated bond's rate in the United States", "SPF:BOND"},
      {"C", "real consumption in the United States", "SPF:RCONSUM"},
      {"GF", "federal government consumption in the United States",
       "SPF:RFEDGOV"},
      {"GY", "the real GDP of the United States", "SPF:RGDP"},
      {"NRI", "real nonresidential investment in the United States",
       "SPF:RNRESIN"},
      {"RI", "real residential investment in the United States",
       "SPF:RRESINV"},
      {"GS", "state and local government consumption in the United States",
       "SPF:RSLGOV"},
      {"3TB", "the 3-month treasury bill rate", "SPF:TBILL"},
      {"UE", "employment in the United States", "SPF:UNEMP"},
  };
}

inline std::vector<SeriesSpec> load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog " + path);
  nlohmann::json j;
  in >> j;
  std::vector<SeriesSpec> out;
  std::set<std::string> seen;
  for (const auto& s : j.at("series")) {
    SeriesSpec spec{s.at("id").get<std::string>(),
                    s.at("target_text").get<std::string>(),
                    s.value("benchmark", std::string{})};
    if (!seen.insert(spec.id).second)
      throw std::runtime_error("duplicate series id " + spec.id);
    out.push_back(std::move(spec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompt template

struct PromptTemplate {
  // Two "%s" slots: headline first, target text second.
  std::string template_text;
  std::string version;

  PromptTemplate(std::string text, std::string ver)
      : template_text(std::move(text)), version(std::move(ver)) {
    std::size_t slots = 0, pos = 0;
    while ((pos = template_text.find("%s", pos)) != std::string::npos) {
      ++slots;
      pos += 2;
    }
    if (slots != 2)
      throw std::invalid_argument(
          "prompt template must contain exactly two %s slots, found " +
          std::to_string(slots));
  }
};

inline PromptTemplate default_template() {
  return PromptTemplate(
      "Consider the following news headline:\n%s\nBased only on this "
      "headline, state whether you expect %s to increase, decrease, or "
      "whether the effect is uncertain. Answer with 1 for increase, -1 for "
      "decrease, or 0 for uncertain, followed by \" | \" and a one-sentence "
      "explanation.",
      "v1");
}

// Headline fills the first slot, target text the second.
inline std::string build_prompt(const Article& article, const SeriesSpec& series,
                                const PromptTemplate& tmpl) {
  if (article.headline.empty())
    throw std::invalid_argument("build_prompt: empty headline for article " +
                                article.id);
  std::string out = tmpl.template_text;
  auto p = out.find("%s");
  out.replace(p, 2, article.headline);
  p = out.find("%s", p + article.headline.size());
  out.replace(p, 2, series.target_text);
  return out;
}

// ---------------------------------------------------------------------------
// Responses

enum class Direction { Increase = 1, Decrease = -1, Uncertain = 0, Missing = 9 };

inline int direction_value(Direction d) {
  return d == Direction::Increase ? 1 : d == Direction::Decrease ? -1 : 0;
}

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::Increase: return "increase";
    case Direction::Decrease: return "decrease";
    case Direction::Uncertain: return "uncertain";
    case Direction::Missing: return "missing";
  }
  return "?";
}

struct DirectionalResponse {
  std::string article_id;
  std::string series_id;
  Direction direction = Direction::Missing;
  std::string explanation;
  std::string raw;       // verbatim provider output (or error note)
  std::string model_id;
  std::string timestamp; // provider_meta; empty for deterministic runs
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

// Total parse: first token in {1, -1, 0} or a direction synonym sets the
// direction, the remainder after separators is the explanation; anything
// else is Missing with the raw text retained.
inline std::pair<Direction, std::string> parse_response(const std::string& raw) {
  const std::string text = detail::trim(raw);
  if (text.empty()) return {Direction::Missing, ""};

  std::size_t end = 0;
  while (end < text.size() &&
         !std::isspace(static_cast<unsigned char>(text[end])) &&
         text[end] != '|' && text[end] != ':' && text[end] != ',')
    ++end;
  std::string tok = text.substr(0, end);
  // Strip trailing punctuation attached to the token ("1.", "-1,").
  while (!tok.empty() &&
         !std::isalnum(static_cast<unsigned char>(tok.back())))
    tok.pop_back();
  const std::string low = detail::lower(tok);

  Direction dir;
  if (low == "1" || low == "+1" || low == "increase" || low == "increases")
    dir = Direction::Increase;
  else if (low == "-1" || low == "decrease" || low == "decreases")
    dir = Direction::Decrease;
  else if (low == "0" || low == "uncertain" || low == "unclear" ||
           low == "neutral")
    dir = Direction::Uncertain;
  else
    return {Direction::Missing, ""};

  // Explanation: everything after the token and any separator run.
  std::size_t p = end;
  auto is_sep = [](unsigned char c) {
    return std::isspace(c) || c == '|' || c == ':' || c == ',' || c == '-' ||
           c == '.';
  };
  // Em/en dashes arrive as multi-byte UTF-8; treat the bytes as separators.
  while (p < text.size() &&
         (is_sep(static_cast<unsigned char>(text[p])) ||
          static_cast<unsigned char>(text[p]) >= 0x80))
    ++p;
  return {dir, detail::trim(text.substr(p))};
}

// ---------------------------------------------------------------------------
// Cache: append-only JSONL keyed by (article, series, template ver, model).

class ResponseCache {
 public:
  ResponseCache() = default;

  explicit ResponseCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      DirectionalResponse r;
      r.article_id = j.at("article_id");
      r.series_id = j.at("series_id");
      r.direction = direction_from_code(j.at("direction").get<std::string>());
      r.explanation = j.value("explanation", std::string{});
      r.raw = j.value("raw", std::string{});
      r.model_id = j.value("model_id", std::string{});
      r.timestamp = j.value("timestamp", std::string{});
      map_[key(r.article_id, r.series_id,
               j.value("template_version", std::string{}), r.model_id)] = r;
    }
  }

  std::optional<DirectionalResponse> get(const std::string& article_id,
                                         const std::string& series_id,
                                         const std::string& template_version,
                                         const std::string& model_id) const {
    std::lock_guard lock(mu_);
    auto it = map_.find(key(article_id, series_id, template_version, model_id));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  void put(const DirectionalResponse& r, const std::string& template_version) {
    std::lock_guard lock(mu_);
    map_[key(r.article_id, r.series_id, template_version, r.model_id)] = r;
    if (path_.empty()) return;
    if (!out_.is_open()) out_.open(path_, std::ios::app | std::ios::binary);
    nlohmann::json j{{"article_id", r.article_id},
                     {"series_id", r.series_id},
                     {"template_version", template_version},
                     {"model_id", r.model_id},
                     {"direction", to_string(r.direction)},
                     {"explanation", r.explanation},
                     {"raw", r.raw},
                     {"timestamp", r.timestamp}};
    out_ << j.dump() << '\n';
    out_.flush();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return map_.size();
  }

  // Snapshot of every cached response, key-ordered.
  std::vector<DirectionalResponse> all() const {
    std::lock_guard lock(mu_);
    std::vector<DirectionalResponse> out;
    out.reserve(map_.size());
    for (const auto& [k, v] : map_) out.push_back(v);
    return out;
  }

  static Direction direction_from_code(const std::string& s) {
    if (s == "increase") return Direction::Increase;
    if (s == "decrease") return Direction::Decrease;
    if (s == "uncertain") return Direction::Uncertain;
    return Direction::Missing;
  }

 private:
  static std::string key(const std::string& a, const std::string& s,
                         const std::string& v, const std::string& m) {
    return a + '\x1f' + s + '\x1f' + v + '\x1f' + m;
  }

  std::string path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::map<std::string, DirectionalResponse> map_;
};

// ---------------------------------------------------------------------------
// Querying

struct QueryOptions {
  int max_attempts = 5;
  double backoff_base_seconds = 1.0;  // doubled per attempt, jittered
  double min_call_interval_seconds = 0.0;  // simple rate limit
  int max_in_flight = 1;
  std::uint64_t jitter_seed = 0;
  bool deterministic_timestamps = true;
};

struct QueryStats {
  int provider_calls = 0;
  int cache_hits = 0;
  int missing = 0;
  bool complete = true;
  std::string stop_reason;
};

namespace detail {

class RateLimiter {
 public:
  explicit RateLimiter(double min_interval_seconds)
      : interval_(min_interval_seconds) {}

  void acquire() {
    if (interval_ <= 0) return;
    std::unique_lock lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto earliest =
        last_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(interval_));
    if (now < earliest) {
      lock.unlock();
      std::this_thread::sleep_for(earliest - now);
      lock.lock();
    }
    last_ = std::chrono::steady_clock::now();
  }

 private:
  double interval_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point last_{};
};

inline std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

// One response per (article, series). Cache consulted first; transient
// failures retried with jittered exponential backoff; permanent failures
// recorded (and cached) as Missing. Transient exhaustion stops the run
// with complete=false -- everything answered so far is already in the
// cache, so a rerun resumes where this one stopped.
inline std::pair<std::vector<DirectionalResponse>, QueryStats> query_series(
    const std::vector<Article>& articles, const SeriesSpec& series,
    Provider& provider, ResponseCache& cache, const PromptTemplate& tmpl,
    const QueryOptions& opts = {}) {
  std::vector<DirectionalResponse> out(articles.size());
  QueryStats stats;
  detail::RateLimiter limiter(opts.min_call_interval_seconds);
  std::mutex stats_mu;
  std::atomic<bool> aborted{false};
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    std::mt19937_64 jitter_rng(opts.jitter_seed ^
                               std::hash<std::thread::id>{}(
                                   std::this_thread::get_id()));
    std::uniform_real_distribution<double> jitter(0.0, 0.5);
    for (;;) {
      if (aborted.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= articles.size()) return;
      const Article& a = articles[i];

      if (auto hit = cache.get(a.id, series.id, tmpl.version,
                               provider.model_id())) {
        out[i] = *hit;
        std::lock_guard lock(stats_mu);
        ++stats.cache_hits;
        if (hit->direction == Direction::Missing) ++stats.missing;
        continue;
      }

      const std::string prompt = build_prompt(a, series, tmpl);
      ProviderReply reply;
      bool exhausted = false;
      for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        limiter.acquire();
        {
          std::lock_guard lock(stats_mu);
          ++stats.provider_calls;
        }
        reply = provider.complete(prompt);
        if (reply.ok || !reply.retryable) break;
        if (attempt + 1 == opts.max_attempts) {
          exhausted = true;
          break;
        }
        const double delay = opts.backoff_base_seconds * (1 << attempt) *
                             (1.0 + jitter(jitter_rng));
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }

      if (exhausted) {
        // Not cached: a rerun retries this article.
        std::lock_guard lock(stats_mu);
        stats.complete = false;
        stats.stop_reason = "retries exhausted: " + reply.error;
        aborted.store(true);
        return;
      }

      DirectionalResponse r;
      r.article_id = a.id;
      r.series_id = series.id;
      r.model_id = provider.model_id();
      if (!opts.deterministic_timestamps) r.timestamp = detail::now_iso8601();
      if (reply.ok) {
        r.raw = reply.text;
        std::tie(r.direction, r.explanation) = parse_response(reply.text);
      } else {
        r.raw = "[provider error] " + reply.error;
        r.direction = Direction::Missing;
      }
      cache.put(r, tmpl.version);
      out[i] = r;
      if (r.direction == Direction::Missing) {
        std::lock_guard lock(stats_mu);
        ++stats.missing;
      }
    }
  };

  const int n_threads = std::max(1, opts.max_in_flight);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!stats.complete) {
    // Keep only responses produced before the stop.
    std::vector<DirectionalResponse> partial;
    for (auto& r : out)
      if (!r.article_id.empty()) partial.push_back(std::move(r));
    return {std::move(partial), stats};
  }
  return {std::move(out), stats};
}

// ---------------------------------------------------------------------------
// Cooccurrence (appendix-style): for each ordered series pair and each
// direction pair in {Inc,Dec}^2, the share of overlapping articles where
// both directions fire. Diagonal blocks reduce to each series' marginals.

struct CooccurrenceMatrix {
  std::vector<std::string> series_ids;
  // cell[(j*K+k)][a][b]: a,b in {0=Inc, 1=Dec}; nullopt = no overlap.
  std::vector<std::array<std::array<std::optional<double>, 2>, 2>> cells;

  const std::array<std::array<std::optional<double>, 2>, 2>& at(
      std::size_t j, std::size_t k) const {
    return cells[j * series_ids.size() + k];
  }
};

inline CooccurrenceMatrix cooccurrence_matrix(
    const std::vector<DirectionalResponse>& responses) {
  // article -> series -> direction (non-Missing only)
  std::map<std::string, std::map<std::string, Direction>> by_article;
  std::set<std::string> ids;
  for (const auto& r : responses) {
    if (r.direction == Direction::Missing) continue;
    by_article[r.article_id][r.series_id] = r.direction;
    ids.insert(r.series_id);
  }
  CooccurrenceMatrix m;
  m.series_ids.assign(ids.begin(), ids.end());
  const std::size_t K = m.series_ids.size();
  m.cells.resize(K * K);
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      long long overlap = 0;
      long long count[2][2] = {{0, 0}, {0, 0}};
      for (const auto& [aid, dirs] : by_article) {
        auto it1 = dirs.find(m.series_ids[j]);
        auto it2 = dirs.find(m.series_ids[k]);
        if (it1 == dirs.end() || it2 == dirs.end()) continue;
        ++overlap;
        const int a = it1->second == Direction::Increase   ? 0
                      : it1->second == Direction::Decrease ? 1
                                                           : -1;
        const int b = it2->second == Direction::Increase   ? 0
                      : it2->second == Direction::Decrease ? 1
                                                           : -1;
        if (a >= 0 && b >= 0) ++count[a][b];
      }
      auto& cell = m.cells[j * K + k];
      if (overlap == 0) continue;  // flagged empty via nullopt
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          cell[a][b] = static_cast<double>(count[a][b]) /
                       static_cast<double>(overlap);
    }
  }
  return m;
}

}  // namespace gptsurvey
