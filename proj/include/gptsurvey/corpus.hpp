#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <tuple>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gptsurvey/date.hpp"

namespace gptsurvey {

struct Article {
  std::string id;
  Date date;
  std::string headline;
  std::string body;
  int word_count = 0;
  int headline_word_count = 0;
  std::optional<char> page_section;  // single letter, e.g. 'A'
  std::vector<std::string> subject_tags;
  std::optional<std::string> section_name;
};

// Whitespace tokens after trimming; punctuation stays attached.
inline int count_words(const std::string& text) {
  int n = 0;
  bool in_tok = false;
  for (char c : text) {
    const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!ws && !in_tok) ++n;
    in_tok = !ws;
  }
  return n;
}

struct FilterProfile {
  std::string name;  // "main" | "oos"
  std::optional<Date> date_min;
  std::optional<Date> date_max;
  std::set<std::string> allowed_sections;  // page-citation letters; "" = missing ok
  bool missing_section_allowed = true;
  bool weekend_excluded = false;
  std::set<std::string> excluded_subject_tags;
  std::vector<std::string> excluded_headline_patterns;  // ECMAScript regex
  int min_body_words = 0;
  int min_headline_words = 0;
  std::set<std::string> allowed_section_names;  // oos profile only
  // Step names in application order; subset of the known steps below.
  std::vector<std::string> steps;
};

// Appendix-style exclusion lists are user data; these defaults cover the
// obvious sports/leisure/books/data-table columns.
inline std::vector<std::string> default_headline_patterns() {
  return {
      R"(^\s*(abreast of the market|dividend news|who's news|new securities issues))",
      R"(\b(sports|leisure\s*&\s*arts|bookshelf|book review)\b)",
      R"(^\s*(table|chart|index) of\b)",
      R"(-{3,}|\.{4,})",  // data-table filler
  };
}

inline std::set<std::string> default_excluded_tags() {
  return {"sports", "leisure", "books", "arts", "obituaries", "crossword"};
}

inline FilterProfile main_profile() {
  FilterProfile p;
  p.name = "main";
  p.date_min = Date{1984, 1, 1};
  p.date_max = Date{2021, 12, 31};
  p.allowed_sections = {"A", "B", "C"};
  p.missing_section_allowed = true;
  p.weekend_excluded = true;
  p.excluded_subject_tags = default_excluded_tags();
  p.excluded_headline_patterns = default_headline_patterns();
  p.min_body_words = 100;
  p.min_headline_words = 10;
  p.steps = {"date_range",        "page_section",      "weekend",
             "subject_tags",      "headline_patterns", "min_body_words",
             "min_headline_words"};
  return p;
}

inline FilterProfile oos_profile() {
  FilterProfile p;
  p.name = "oos";
  p.min_headline_words = 8;
  p.allowed_section_names = {
      "U.S",       "BUSINESS",           "WORLD",
      "POLITICS",  "WSJ NEWS EXCLUSIVE", "HEARD ON THE STREET",
      "FINANCE",   "EARNINGS",           "MARKETS",
      "U.S. MARKETS", "U.S. ECONOMY",    "ECONOMY"};
  p.steps = {"min_headline_words", "section_name"};
  return p;
}

struct FilterReport {
  std::map<std::string, int> removed;  // step name -> count
  int input_count = 0;
  int output_count = 0;

  int total_removed() const {
    int s = 0;
    for (const auto& [k, v] : removed) s += v;
    return s;
  }
};

namespace detail {

// True if the step would remove the article.
inline bool step_removes(const Article& a, const FilterProfile& p,
                         const std::string& step,
                         const std::vector<std::regex>& patterns) {
  if (step == "date_range")
    return (p.date_min && a.date < *p.date_min) ||
           (p.date_max && *p.date_max < a.date);
  if (step == "page_section") {
    if (!a.page_section) return !p.missing_section_allowed;
    return !p.allowed_sections.count(std::string(1, *a.page_section));
  }
  if (step == "weekend") return p.weekend_excluded && is_weekend(a.date);
  if (step == "subject_tags") {
    for (const auto& t : a.subject_tags)
      if (p.excluded_subject_tags.count(t)) return true;
    return false;
  }
  if (step == "headline_patterns") {
    for (const auto& re : patterns)
      if (std::regex_search(a.headline, re)) return true;
    return false;
  }
  if (step == "min_body_words") return a.word_count < p.min_body_words;
  if (step == "min_headline_words")
    return a.headline_word_count < p.min_headline_words;
  if (step == "section_name") {
    if (!a.section_name) return true;
    return !p.allowed_section_names.count(*a.section_name);
  }
  throw std::invalid_argument("unknown filter step: " + step);
}

}  // namespace detail

inline std::pair<std::vector<Article>, FilterReport> apply_filters(
    const std::vector<Article>& corpus, const FilterProfile& profile,
    int malformed_rejects = 0) {
  std::vector<std::regex> patterns;
  patterns.reserve(profile.excluded_headline_patterns.size());
  for (const auto& s : profile.excluded_headline_patterns)
    patterns.emplace_back(s, std::regex::ECMAScript | std::regex::icase);

  FilterReport report;
  report.input_count = static_cast<int>(corpus.size()) + malformed_rejects;
  for (const auto& step : profile.steps) report.removed[step] = 0;
  report.removed["malformed_date"] = malformed_rejects;

  std::vector<Article> out;
  out.reserve(corpus.size());
  for (const auto& a : corpus) {
    bool removed = false;
    for (const auto& step : profile.steps) {
      if (detail::step_removes(a, profile, step, patterns)) {
        ++report.removed[step];
        removed = true;
        break;
      }
    }
    if (!removed) out.push_back(a);
  }
  std::sort(out.begin(), out.end(), [](const Article& x, const Article& y) {
    return std::tie(x.date, x.id) < std::tie(y.date, y.id);
  });
  report.output_count = static_cast<int>(out.size());
  return {std::move(out), std::move(report)};
}

// True when no step of the profile would remove the article.
inline bool passes_all(const Article& a, const FilterProfile& profile) {
  std::vector<std::regex> patterns;
  for (const auto& s : profile.excluded_headline_patterns)
    patterns.emplace_back(s, std::regex::ECMAScript | std::regex::icase);
  for (const auto& step : profile.steps)
    if (detail::step_removes(a, profile, step, patterns)) return false;
  return true;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Unbiased bounded draw via rejection; deterministic across platforms.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace detail

struct MonthlySample {
  std::vector<Article> articles;           // sorted by (date, id)
  std::vector<int> undersized_months;      // month keys with < n available
};

// Uniform without replacement per calendar month.
// RNG: mt19937_64 seeded with splitmix64(seed ^ splitmix64(month_key)),
// partial Fisher-Yates over articles pre-sorted by (date, id).
inline MonthlySample sample_monthly(const std::vector<Article>& corpus,
                                    int n_per_month, std::uint64_t seed) {
  if (n_per_month < 1)
    throw std::invalid_argument("sample_monthly: n_per_month must be >= 1");
  std::map<int, std::vector<Article>> by_month;
  for (const auto& a : corpus) by_month[month_key(a.date)].push_back(a);

  MonthlySample result;
  for (auto& [mk, arts] : by_month) {
    std::sort(arts.begin(), arts.end(), [](const Article& x, const Article& y) {
      return std::tie(x.date, x.id) < std::tie(y.date, y.id);
    });
    const int n = static_cast<int>(arts.size());
    if (n <= n_per_month) {
      if (n < n_per_month) result.undersized_months.push_back(mk);
      result.articles.insert(result.articles.end(), arts.begin(), arts.end());
      continue;
    }
    std::mt19937_64 rng(
        detail::splitmix64(seed ^ detail::splitmix64(
                                      static_cast<std::uint64_t>(mk))));
    for (int i = 0; i < n_per_month; ++i) {
      const auto j = i + detail::bounded(rng, static_cast<std::uint64_t>(n - i));
      std::swap(arts[i], arts[j]);
    }
    result.articles.insert(result.articles.end(), arts.begin(),
                           arts.begin() + n_per_month);
  }
  std::sort(result.articles.begin(), result.articles.end(),
            [](const Article& x, const Article& y) {
              return std::tie(x.date, x.id) < std::tie(y.date, y.id);
            });
  return result;
}

// ---------------------------------------------------------------------------
// Corpus I/O: newline-delimited JSON records.

struct CorpusLoad {
  std::vector<Article> articles;
  std::vector<std::string> errors;  // "line N: reason"
};

inline CorpusLoad load_corpus_jsonl(std::istream& in) {
  CorpusLoad out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      out.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
      continue;
    }
    Article a;
    try {
      a.id = j.at("id").get<std::string>();
      const auto d = parse_date(j.at("date").get<std::string>());
      if (!d) {
        out.errors.push_back("line " + std::to_string(lineno) +
                             ": malformed date");
        continue;
      }
      a.date = *d;
      a.headline = j.at("headline").get<std::string>();
      a.body = j.value("body", std::string{});
      if (j.contains("section") && !j["section"].is_null()) {
        const auto s = j["section"].get<std::string>();
        if (!s.empty()) a.page_section = s[0];
      }
      if (j.contains("section_name") && !j["section_name"].is_null())
        a.section_name = j["section_name"].get<std::string>();
      if (j.contains("tags"))
        a.subject_tags = j["tags"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      out.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
      continue;
    }
    a.word_count = count_words(a.body);
    a.headline_word_count = count_words(a.headline);
    out.articles.push_back(std::move(a));
  }
  return out;
}

inline CorpusLoad load_corpus_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path);
  return load_corpus_jsonl(in);
}

inline void write_corpus_jsonl(std::ostream& out,
                               const std::vector<Article>& articles) {
  for (const auto& a : articles) {
    nlohmann::json j{{"id", a.id},
                     {"date", to_string(a.date)},
                     {"headline", a.headline},
                     {"body", a.body},
                     {"tags", a.subject_tags}};
    if (a.page_section) j["section"] = std::string(1, *a.page_section);
    if (a.section_name) j["section_name"] = *a.section_name;
    out << j.dump() << '\n';
  }
}

// FilterProfile from a JSON config object; unset keys keep base defaults.
inline FilterProfile profile_from_json(const nlohmann::json& j) {
  FilterProfile p =
      j.value("name", std::string{"main"}) == "oos" ? oos_profile()
                                                    : main_profile();
  if (j.contains("date_min"))
    p.date_min = parse_date_or_throw(j["date_min"].get<std::string>());
  if (j.contains("date_max"))
    p.date_max = parse_date_or_throw(j["date_max"].get<std::string>());
  if (j.contains("min_body_words")) p.min_body_words = j["min_body_words"];
  if (j.contains("min_headline_words"))
    p.min_headline_words = j["min_headline_words"];
  if (j.contains("excluded_subject_tags"))
    p.excluded_subject_tags =
        j["excluded_subject_tags"].get<std::set<std::string>>();
  if (j.contains("excluded_headline_patterns"))
    p.excluded_headline_patterns =
        j["excluded_headline_patterns"].get<std::vector<std::string>>();
  if (j.contains("allowed_sections"))
    p.allowed_sections = j["allowed_sections"].get<std::set<std::string>>();
  if (j.contains("allowed_section_names"))
    p.allowed_section_names =
        j["allowed_section_names"].get<std::set<std::string>>();
  if (j.contains("weekend_excluded")) p.weekend_excluded = j["weekend_excluded"];
  if (j.contains("steps")) p.steps = j["steps"].get<std::vector<std::string>>();
  return p;
}

}  // namespace gptsurvey
