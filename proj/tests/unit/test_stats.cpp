#include "doctest.h"
#include "dcpfl/stats.hpp"

using namespace dcpfl;

TEST_SUITE("stats") {

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9}, z{4, 3, 2, 1};
  CHECK(*pearson(x, y) == doctest::Approx(1.0));
  CHECK(*pearson(x, z) == doctest::Approx(-1.0));
  CHECK_FALSE(pearson(x, std::vector<double>{2, 2, 2, 2}));
  CHECK_FALSE(pearson(std::vector<double>{1}, std::vector<double>{1}));
}

TEST_CASE("ranks and spearman") {
  CHECK(average_ranks(std::vector<double>{10, 30, 20, 20}) == std::vector<double>{1, 4, 2.5, 2.5});
  const std::vector<double> x{1, 2, 3, 4, 5}, y{1, 4, 9, 16, 25};
  CHECK(*spearman(x, y) == doctest::Approx(1.0));
  CHECK(mean(y) == doctest::Approx(11.0));
}

}  // TEST_SUITE
