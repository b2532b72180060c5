#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gptsurvey/config.hpp"
#include "gptsurvey/reports.hpp"

namespace {

using namespace gptsurvey;

std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return detail::fnv1a_hex(ss.str());
}

struct CommonFlags {
  std::string config_path;
  bool pre2019 = false;
  std::string oos_after;
  std::string provider;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "run configuration (JSON)")
      ->required();
  cmd->add_flag("--pre2019", f.pre2019,
                "cap every table at 2018-12-31");
  cmd->add_option("--oos-after", f.oos_after,
                  "override the out-of-sample cutoff date (YYYY-MM-DD)");
  cmd->add_option("--provider", f.provider, "override provider kind (mock|http)");
  cmd->add_option("--out", f.output_dir, "override the output directory");
  cmd->add_option("--seed", f.seed, "override the sampling seed");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = load_config(f.config_path);
  c.pre2019 = c.pre2019 || f.pre2019;
  if (!f.oos_after.empty()) c.oos_cutoff = parse_date_or_throw(f.oos_after);
  if (!f.provider.empty()) c.provider = f.provider;
  if (!f.output_dir.empty()) c.output_dir = f.output_dir;
  if (f.seed) c.seed = *f.seed;
  return c;
}

void write_filtered(const RunConfig& c, const FilterStage& stage) {
  std::filesystem::create_directories(c.output_dir);
  const auto corpus_out =
      (std::filesystem::path(c.output_dir) / "filtered.jsonl").string();
  std::ofstream out(corpus_out, std::ios::binary);
  write_corpus_jsonl(out, stage.articles);
  csv::Table t;
  t.header = {"step", "removed"};
  for (const auto& [step, n] : stage.report.removed)
    t.rows.push_back({step, std::to_string(n)});
  t.rows.push_back({"input", std::to_string(stage.report.input_count)});
  t.rows.push_back({"output", std::to_string(stage.report.output_count)});
  csv::write_file(
      (std::filesystem::path(c.output_dir) / "filter_report.csv").string(), t);
  std::cout << "filtered " << stage.report.input_count << " -> "
            << stage.report.output_count << " articles, wrote " << corpus_out
            << "\n";
}

int cmd_filter(const CommonFlags& f) {
  const RunConfig c = resolve(f);
  write_filtered(c, run_filter(c));
  return 0;
}

int cmd_sample(const CommonFlags& f) {
  const RunConfig c = resolve(f);
  auto stage = run_filter(c);
  auto sample = sample_monthly(stage.articles, c.sample_per_month, c.seed);
  std::filesystem::create_directories(c.output_dir);
  const auto path =
      (std::filesystem::path(c.output_dir) / "sampled.jsonl").string();
  std::ofstream out(path, std::ios::binary);
  write_corpus_jsonl(out, sample.articles);
  std::cout << "sampled " << sample.articles.size() << " articles ("
            << sample.undersized_months.size() << " undersized months), wrote "
            << path << "\n";
  return 0;
}

int cmd_elicit(const CommonFlags& f) {
  const RunConfig c = resolve(f);
  auto stage = run_filter(c);
  auto sample = sample_monthly(stage.articles, c.sample_per_month, c.seed);
  auto provider = make_provider(c);
  ResponseCache cache(c.cache_path);
  auto elicited = run_elicit(c, sample.articles, *provider, cache);
  std::cout << "elicited " << elicited.responses.size() << " series over "
            << sample.articles.size() << " articles: "
            << elicited.stats.provider_calls << " provider calls, "
            << elicited.stats.cache_hits << " cache hits, "
            << elicited.stats.missing << " missing\n";
  return 0;
}

int cmd_aggregate(const CommonFlags& f) {
  const RunConfig c = resolve(f);
  auto stage = run_filter(c);
  auto sample = sample_monthly(stage.articles, c.sample_per_month, c.seed);
  auto provider = make_provider(c);
  ResponseCache cache(c.cache_path);
  auto elicited = run_elicit(c, sample.articles, *provider, cache);
  std::filesystem::create_directories(c.output_dir);
  for (const auto& [id, responses] : elicited.responses) {
    const auto dated = date_responses(responses, sample.articles);
    const auto series = window_aggregate(dated, c.window_months,
                                         Frequency::Monthly, c.min_count, id);
    csv::Table t;
    t.header = {"date", "value", "n_inc", "n_dec", "n_unc"};
    for (const auto& p : series.observations)
      t.rows.push_back({to_string(p.date), detail::fmt(p.value),
                        std::to_string(p.n_inc), std::to_string(p.n_dec),
                        std::to_string(p.n_unc)});
    csv::write_file((std::filesystem::path(c.output_dir) /
                     ("series_" + id + "_monthly.csv"))
                        .string(),
                    t);
  }
  std::cout << "wrote " << elicited.responses.size()
            << " monthly series to " << c.output_dir << "\n";
  return 0;
}

int cmd_validate(const CommonFlags& f) {
  const RunConfig c = resolve(f);
  const auto run = run_validate(c, file_fingerprint(f.config_path));
  std::cout << "wrote " << run.artifacts.size() << " artifacts to "
            << c.output_dir << " (" << run.query_stats.provider_calls
            << " provider calls, " << run.query_stats.cache_hits
            << " cache hits)\n";
  for (const auto& g : run.gaps) std::cout << "gap: " << g << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"directional expectation survey toolkit"};
  app.require_subcommand(1);

  CommonFlags f;
  auto* s_filter = app.add_subcommand("filter", "apply the corpus filters");
  auto* s_sample = app.add_subcommand("sample", "draw the monthly samples");
  auto* s_elicit = app.add_subcommand("elicit", "query the provider (cached)");
  auto* s_aggregate =
      app.add_subcommand("aggregate", "build expectation series");
  auto* s_validate =
      app.add_subcommand("validate", "run the full benchmark battery");
  for (auto* cmd : {s_filter, s_sample, s_elicit, s_aggregate, s_validate})
    add_common(cmd, f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (s_filter->parsed()) return cmd_filter(f);
    if (s_sample->parsed()) return cmd_sample(f);
    if (s_elicit->parsed()) return cmd_elicit(f);
    if (s_aggregate->parsed()) return cmd_aggregate(f);
    if (s_validate->parsed()) return cmd_validate(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
