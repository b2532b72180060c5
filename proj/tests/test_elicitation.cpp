#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "gptsurvey/elicitation.hpp"
#include "gptsurvey/providers.hpp"

using namespace gptsurvey;

namespace {

Article article(std::string id, std::string headline, Date d = {2000, 1, 3}) {
  Article a;
  a.id = std::move(id);
  a.date = d;
  a.headline = std::move(headline);
  return a;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
    std::remove(path.c_str());
  }
  ~TempFile() { std::remove(path.c_str()); }
};

// Fails with a transient error the first `fail_n` calls, then answers.
class FlakyProvider : public Provider {
 public:
  explicit FlakyProvider(int fail_n, bool retryable = true)
      : fail_n_(fail_n), retryable_(retryable) {}
  ProviderReply complete(const std::string&) override {
    ++calls;
    if (calls <= fail_n_) return {false, "", "HTTP 429", retryable_};
    return {true, "1 | better outlook", "", false};
  }
  std::string model_id() const override { return "flaky"; }
  int calls = 0;

 private:
  int fail_n_;
  bool retryable_;
};

class CountingProvider : public Provider {
 public:
  ProviderReply complete(const std::string&) override {
    ++calls;
    return {true, "0 | nothing to see", "", false};
  }
  std::string model_id() const override { return "counting"; }
  int calls = 0;
};

QueryOptions fast_opts() {
  QueryOptions o;
  o.backoff_base_seconds = 0.0;
  return o;
}

}  // namespace

TEST_CASE("catalog carries the 14 series with unique ids") {
  auto cat = default_catalog();
  REQUIRE(cat.size() == 14);
  std::set<std::string> ids;
  for (const auto& s : cat) CHECK(ids.insert(s.id).second);
  CHECK(cat[0].id == "SNP");
  CHECK(cat[0].target_text == "the S&P 500 index");
  CHECK(cat[1].target_text == "the consumer price index in the United States");
}

TEST_CASE("build_prompt inserts headline and target text deterministically") {
  auto tmpl = default_template();
  auto cat = default_catalog();
  Article a = article("a1", "Bush Offers Tax Cuts and Tight Budgets");
  const std::string p1 = build_prompt(a, cat[0], tmpl);
  const std::string p2 = build_prompt(a, cat[0], tmpl);
  CHECK(p1 == p2);
  CHECK(p1.find(a.headline) != std::string::npos);
  CHECK(p1.find("the S&P 500 index") != std::string::npos);
  CHECK(p1.find("%s") == std::string::npos);
}

TEST_CASE("template with wrong slot count is a construction error") {
  CHECK_THROWS_AS(PromptTemplate("only one %s here", "v0"),
                  std::invalid_argument);
  CHECK_THROWS_AS(PromptTemplate("%s %s %s", "v0"), std::invalid_argument);
}

TEST_CASE("empty headline is an error") {
  auto tmpl = default_template();
  CHECK_THROWS_AS(build_prompt(article("a", ""), default_catalog()[0], tmpl),
                  std::invalid_argument);
}

TEST_CASE("parse_response grammar, table-driven") {
  struct Case {
    const char* raw;
    Direction dir;
    const char* explanation;
  };
  const Case cases[] = {
      {"1 | Tax cuts stimulate the economy, which could lead to higher "
       "stock prices.",
       Direction::Increase,
       "Tax cuts stimulate the economy, which could lead to higher stock "
       "prices."},
      {"", Direction::Missing, ""},
      {"Uncertain \xE2\x80\x94 headline is about sports", Direction::Uncertain,
       "headline is about sports"},
      {"-1 | lower prices ahead", Direction::Decrease, "lower prices ahead"},
      {"0", Direction::Uncertain, ""},
      {"+1: optimism", Direction::Increase, "optimism"},
      {"Decrease, due to slowing demand", Direction::Decrease,
       "due to slowing demand"},
      {"INCREASE - earnings beat", Direction::Increase, "earnings beat"},
      {"2 | out of range token", Direction::Missing, ""},
      {"the market will rise", Direction::Missing, ""},
      {"  1.  trailing punctuation", Direction::Increase,
       "trailing punctuation"},
  };
  for (const auto& c : cases) {
    INFO("raw: " << c.raw);
    auto [dir, expl] = parse_response(c.raw);
    CHECK(dir == c.dir);
    CHECK(expl == c.explanation);
  }
}

TEST_CASE("parse_response is total over arbitrary bytes") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    std::string s;
    const int len = static_cast<int>(rng() % 40);
    for (int j = 0; j < len; ++j) s += static_cast<char>(rng() % 256);
    CHECK_NOTHROW(parse_response(s));
  }
}

TEST_CASE("cache arithmetic: pre-cached articles issue no calls") {
  auto tmpl = default_template();
  auto series = default_catalog()[0];
  std::vector<Article> articles;
  for (int i = 0; i < 100; ++i)
    articles.push_back(article("a" + std::to_string(i), "headline number " +
                                                            std::to_string(i)));
  ResponseCache cache;
  CountingProvider provider;
  for (int i = 0; i < 40; ++i) {
    DirectionalResponse r;
    r.article_id = articles[i].id;
    r.series_id = series.id;
    r.direction = Direction::Uncertain;
    r.model_id = provider.model_id();
    cache.put(r, tmpl.version);
  }
  auto [responses, stats] =
      query_series(articles, series, provider, cache, tmpl, fast_opts());
  CHECK(provider.calls == 60);
  CHECK(stats.cache_hits == 40);
  CHECK(responses.size() == 100);
}

TEST_CASE("mock provider rule table drives directions") {
  std::vector<MockRule> rules{
      {"the S&P 500 index", "tax cut", 1, "stimulus"},
  };
  MockProvider provider(rules);
  ResponseCache cache;
  auto tmpl = default_template();
  auto snp = default_catalog()[0];
  std::vector<Article> articles{
      article("a1", "Senate passes sweeping tax cut package"),
      article("a2", "Weather mild across the plains states")};
  auto [responses, stats] =
      query_series(articles, snp, provider, cache, tmpl, fast_opts());
  CHECK(responses[0].direction == Direction::Increase);
  CHECK(responses[1].direction == Direction::Uncertain);
}

TEST_CASE("transient failures retried, permanent failures become Missing") {
  auto tmpl = default_template();
  auto snp = default_catalog()[0];
  std::vector<Article> articles{article("a1", "one headline")};
  {
    FlakyProvider provider(2);
    ResponseCache cache;
    auto [responses, stats] =
        query_series(articles, snp, provider, cache, tmpl, fast_opts());
    CHECK(provider.calls == 3);
    CHECK(responses[0].direction == Direction::Increase);
    CHECK(stats.complete);
  }
  {
    FlakyProvider provider(99, /*retryable=*/false);
    ResponseCache cache;
    auto [responses, stats] =
        query_series(articles, snp, provider, cache, tmpl, fast_opts());
    CHECK(provider.calls == 1);  // permanent: no retry
    CHECK(responses[0].direction == Direction::Missing);
    CHECK(responses[0].raw.find("provider error") != std::string::npos);
    CHECK(stats.complete);
    CHECK(cache.size() == 1);  // cached as Missing with error metadata
  }
}

TEST_CASE("retry exhaustion stops with partial results and stays resumable") {
  auto tmpl = default_template();
  auto snp = default_catalog()[0];
  std::vector<Article> articles{article("a1", "first"), article("a2", "second"),
                                article("a3", "third")};
  FlakyProvider always_down(1 << 20);
  ResponseCache cache;
  auto opts = fast_opts();
  auto [responses, stats] =
      query_series(articles, snp, always_down, cache, tmpl, opts);
  CHECK_FALSE(stats.complete);
  CHECK(stats.stop_reason.find("retries exhausted") != std::string::npos);
  CHECK(responses.size() < articles.size());
  CHECK(cache.size() == responses.size());  // nothing lost, nothing extra
}

TEST_CASE("cache round-trips field-for-field through its file") {
  TempFile tmp("gptsurvey_cache_test.jsonl");
  DirectionalResponse r;
  r.article_id = "a9";
  r.series_id = "CPI";
  r.direction = Direction::Decrease;
  r.explanation = "prices fall";
  r.raw = "-1 | prices fall";
  r.model_id = "mock-1";
  r.timestamp = "2023-04-01T00:00:00Z";
  {
    ResponseCache cache(tmp.path);
    cache.put(r, "v1");
  }
  ResponseCache reloaded(tmp.path);
  auto hit = reloaded.get("a9", "CPI", "v1", "mock-1");
  REQUIRE(hit.has_value());
  CHECK(hit->article_id == r.article_id);
  CHECK(hit->series_id == r.series_id);
  CHECK(hit->direction == r.direction);
  CHECK(hit->explanation == r.explanation);
  CHECK(hit->raw == r.raw);
  CHECK(hit->model_id == r.model_id);
  CHECK(hit->timestamp == r.timestamp);
  CHECK_FALSE(reloaded.get("a9", "CPI", "v2", "mock-1").has_value());
}

TEST_CASE("warm cache replay issues zero provider calls") {
  auto tmpl = default_template();
  auto snp = default_catalog()[0];
  std::vector<Article> articles;
  for (int i = 0; i < 25; ++i)
    articles.push_back(article("w" + std::to_string(i),
                               "headline w" + std::to_string(i)));
  CountingProvider provider;
  ResponseCache cache;
  auto first = query_series(articles, snp, provider, cache, tmpl, fast_opts());
  CHECK(provider.calls == 25);
  auto second = query_series(articles, snp, provider, cache, tmpl, fast_opts());
  CHECK(provider.calls == 25);  // unchanged
  REQUIRE(second.first.size() == first.first.size());
  for (std::size_t i = 0; i < first.first.size(); ++i)
    CHECK(second.first[i].direction == first.first[i].direction);
}

TEST_CASE("concurrent querying matches sequential results") {
  auto tmpl = default_template();
  auto snp = default_catalog()[0];
  std::vector<MockRule> rules{{"", "odd", 1, "odd headline"},
                              {"", "even", -1, "even headline"}};
  std::vector<Article> articles;
  for (int i = 0; i < 200; ++i)
    articles.push_back(article("c" + std::to_string(i),
                               i % 2 ? "odd headline number ok"
                                     : "even headline number ok"));
  MockProvider p1(rules), p2(rules);
  ResponseCache c1, c2;
  auto opts = fast_opts();
  auto seq = query_series(articles, snp, p1, c1, tmpl, opts);
  opts.max_in_flight = 8;
  auto par = query_series(articles, snp, p2, c2, tmpl, opts);
  REQUIRE(par.first.size() == seq.first.size());
  for (std::size_t i = 0; i < seq.first.size(); ++i) {
    CHECK(par.first[i].article_id == seq.first[i].article_id);
    CHECK(par.first[i].direction == seq.first[i].direction);
  }
}

TEST_CASE("cooccurrence diagonal equals marginal proportions") {
  std::vector<DirectionalResponse> rs;
  auto add = [&](std::string aid, std::string sid, Direction d) {
    DirectionalResponse r;
    r.article_id = std::move(aid);
    r.series_id = std::move(sid);
    r.direction = d;
    rs.push_back(r);
  };
  // 10 articles: 4 Inc, 3 Dec, 3 Unc for series X.
  for (int i = 0; i < 10; ++i)
    add("a" + std::to_string(i), "X",
        i < 4 ? Direction::Increase
              : i < 7 ? Direction::Decrease : Direction::Uncertain);
  auto m = cooccurrence_matrix(rs);
  REQUIRE(m.series_ids == std::vector<std::string>{"X"});
  const auto& cell = m.at(0, 0);
  CHECK(*cell[0][0] == Catch::Approx(0.4));
  CHECK(*cell[1][1] == Catch::Approx(0.3));
  CHECK(*cell[0][1] == 0.0);
  CHECK(*cell[1][0] == 0.0);
}

TEST_CASE("cooccurrence on perfectly opposite series") {
  std::vector<DirectionalResponse> rs;
  for (int i = 0; i < 10; ++i) {
    DirectionalResponse a, b;
    a.article_id = b.article_id = "a" + std::to_string(i);
    a.series_id = "X";
    b.series_id = "Y";
    a.direction = i < 6 ? Direction::Increase : Direction::Decrease;
    b.direction = i < 6 ? Direction::Decrease : Direction::Increase;
    rs.push_back(a);
    rs.push_back(b);
  }
  auto m = cooccurrence_matrix(rs);
  const auto& xy = m.at(0, 1);
  CHECK(*xy[0][1] == Catch::Approx(0.6));  // Inc-Dec = X's Inc marginal
  CHECK(*xy[0][0] == 0.0);
  CHECK(*xy[1][0] == Catch::Approx(0.4));
  CHECK(*xy[1][1] == 0.0);
}

TEST_CASE("cooccurrence matches a brute-force recount on a random fixture") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> series{"A", "B", "C"};
  std::vector<DirectionalResponse> rs;
  for (int art = 0; art < 200; ++art) {
    for (const auto& s : series) {
      if (rng() % 5 == 0) continue;  // some missing pairs
      DirectionalResponse r;
      r.article_id = "art" + std::to_string(art);
      r.series_id = s;
      const int roll = static_cast<int>(rng() % 3);
      r.direction = roll == 0   ? Direction::Increase
                    : roll == 1 ? Direction::Decrease
                                : Direction::Uncertain;
      rs.push_back(r);
    }
  }
  auto m = cooccurrence_matrix(rs);

  // Independent recount straight off the flat response list.
  for (std::size_t j = 0; j < series.size(); ++j) {
    for (std::size_t k = 0; k < series.size(); ++k) {
      int overlap = 0, cnt[2][2] = {{0, 0}, {0, 0}};
      for (int art = 0; art < 200; ++art) {
        const std::string aid = "art" + std::to_string(art);
        std::optional<Direction> dj, dk;
        for (const auto& r : rs) {
          if (r.article_id != aid) continue;
          if (r.series_id == series[j]) dj = r.direction;
          if (r.series_id == series[k]) dk = r.direction;
        }
        if (!dj || !dk) continue;
        ++overlap;
        auto idx = [](Direction d) {
          return d == Direction::Increase ? 0 : d == Direction::Decrease ? 1 : -1;
        };
        if (idx(*dj) >= 0 && idx(*dk) >= 0) ++cnt[idx(*dj)][idx(*dk)];
      }
      const auto& cell = m.at(j, k);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          CHECK(*cell[a][b] ==
                Catch::Approx(static_cast<double>(cnt[a][b]) / overlap));
    }
  }
}
