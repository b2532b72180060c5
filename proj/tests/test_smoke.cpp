#include <catch2/catch_amalgamated.hpp>
#include "gptsurvey/aggregation.hpp"
#include "gptsurvey/corpus.hpp"
#include "gptsurvey/econometrics.hpp"
#include "gptsurvey/elicitation.hpp"
#include "gptsurvey/surveys.hpp"

TEST_CASE("smoke") {
  REQUIRE(gptsurvey::default_catalog().size() == 14);
}
