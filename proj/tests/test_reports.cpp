#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "gptsurvey/reports.hpp"

#include "gptsurvey/fixture.hpp"
#include "gptsurvey/http_provider.hpp"

using namespace gptsurvey;
namespace fs = std::filesystem;

namespace {

struct SmallFixture {
  std::string dir;
  fixture::FixtureResult fx;
  RunConfig config;

  SmallFixture() {
    dir = (fs::temp_directory_path() / "gptsurvey_reports_test").string();
    fs::remove_all(dir);
    fixture::FixtureOptions opt;
    opt.dir = dir;
    opt.start = Date{2016, 1, 1};
    opt.months = 48;
    opt.articles_per_month = 40;
    opt.oos_after_months = 36;
    fx = fixture::write_fixture(opt);
    config = load_config(fx.config_path);
  }
};

SmallFixture& shared_fixture() {
  static SmallFixture f;
  return f;
}

}  // namespace

TEST_CASE("validate emits artifacts and a rerun hits only the cache") {
  auto& f = shared_fixture();
  const auto first = run_validate(f.config, "test");
  CHECK(first.query_stats.provider_calls > 0);
  CHECK(fs::exists(fs::path(f.config.output_dir) / "manifest.json"));
  CHECK(fs::exists(fs::path(f.config.output_dir) / "tab1_summary.csv"));

  const auto second = run_validate(f.config, "test");
  CHECK(second.query_stats.provider_calls == 0);
  CHECK(second.query_stats.cache_hits == first.query_stats.provider_calls +
                                             first.query_stats.cache_hits);
}

TEST_CASE("pre-2019 mode caps every dated artifact at 2018-12-31") {
  auto& f = shared_fixture();
  RunConfig c = f.config;
  c.pre2019 = true;
  c.output_dir = (fs::path(f.dir) / "out_pre2019").string();
  const auto run = run_validate(c, "test");
  REQUIRE(!run.artifacts.empty());

  const Date cap{2018, 12, 31};
  for (const auto& art : run.artifacts) {
    const auto t = csv::read_file(art.data_path);
    const int cd = t.column("date");
    if (cd < 0) continue;
    for (const auto& row : t.rows) {
      const auto d = parse_date(row[cd]);
      REQUIRE(d.has_value());
      CHECK(!(cap < *d));
    }
  }
}

TEST_CASE("missing benchmark files become manifest gaps, not failures") {
  auto& f = shared_fixture();
  RunConfig c = f.config;
  c.aaii_path.clear();
  c.cfo_path.clear();
  c.spf_forecasts_path.clear();
  c.spf_realized_path.clear();
  c.predictors_path.clear();
  c.output_dir = (fs::path(f.dir) / "out_nobench").string();
  const auto run = run_validate(c, "test");
  CHECK(!run.gaps.empty());
  bool has_tab1 = false;
  for (const auto& a : run.artifacts) has_tab1 |= a.anchor == "Tab1";
  CHECK(has_tab1);
}

TEST_CASE("http provider speaks the chat-completion protocol") {
  httplib::Server server;
  std::atomic<int> calls{0};
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                ++calls;
                REQUIRE(req.get_header_value("Authorization") ==
                        "Bearer test-key-123");
                const auto body = nlohmann::json::parse(req.body);
                CHECK(body.at("model") == "test-model");
                nlohmann::json out{
                    {"choices",
                     nlohmann::json::array(
                         {{{"message",
                            {{"role", "assistant"},
                             {"content", "1 | Clear upward pressure."}}}}})}};
                res.set_content(out.dump(), "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("GPTSURVEY_TEST_KEY", "test-key-123", 1);
  HttpProviderConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "test-model";
  cfg.api_key_env = "GPTSURVEY_TEST_KEY";
  HttpProvider provider(cfg);

  const auto reply = provider.complete("does this move the index?");
  REQUIRE(reply.ok);
  const auto [dir, expl] = parse_response(reply.text);
  CHECK(dir == Direction::Increase);
  CHECK(expl == "Clear upward pressure.");
  CHECK(calls == 1);

  server.stop();
  th.join();
}

TEST_CASE("http provider refuses to start without the credential variable") {
  unsetenv("GPTSURVEY_MISSING_KEY");
  HttpProviderConfig cfg;
  cfg.api_key_env = "GPTSURVEY_MISSING_KEY";
  CHECK_THROWS(HttpProvider{cfg});
}

TEST_CASE("error statuses map to retryable vs permanent") {
  httplib::Server server;
  std::atomic<int> status{500};
  server.Post("/v1/chat/completions",
              [&](const httplib::Request&, httplib::Response& res) {
                res.status = status.load();
                res.set_content("busy", "text/plain");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("GPTSURVEY_TEST_KEY", "k", 1);
  HttpProviderConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.api_key_env = "GPTSURVEY_TEST_KEY";
  HttpProvider provider(cfg);

  CHECK(provider.complete("x").retryable);  // 500
  status = 429;
  CHECK(provider.complete("x").retryable);
  status = 404;
  const auto reply = provider.complete("x");
  CHECK(!reply.ok);
  CHECK(!reply.retryable);

  server.stop();
  th.join();
}
