#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gptsurvey/fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate the synthetic demo dataset"};
  gptsurvey::fixture::FixtureOptions opt;
  app.add_option("--dir", opt.dir, "output directory")->required();
  app.add_option("--months", opt.months, "number of calendar months");
  app.add_option("--articles-per-month", opt.articles_per_month,
                 "articles generated per month");
  app.add_option("--seed", opt.seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto res = gptsurvey::fixture::write_fixture(opt);
    std::cout << "wrote fixture to " << opt.dir << "\nconfig: "
              << res.config_path << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
