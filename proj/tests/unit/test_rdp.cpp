#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "dcpfl/errors.hpp"
#include "dcpfl/rdp.hpp"

using namespace dcpfl;
using R = std::optional<double>;

namespace {

// Definition scan: the first round whose running minimum (ties move it
// later) is followed by t_obv defined, larger radii.
std::optional<int> oracle(const std::vector<R>& r, int t_obv) {
  for (std::size_t t = 0; t < r.size(); ++t) {
    std::optional<std::size_t> m;
    for (std::size_t k = 0; k <= t; ++k) {
      if (r[k] && *r[k] > 0 && (!m || *r[k] <= *r[*m])) m = k;
    }
    if (!m) continue;
    int after = 0;
    for (std::size_t k = *m + 1; k <= t; ++k) after += r[k] && *r[k] > 0 ? 1 : 0;
    if (after >= t_obv) return static_cast<int>(*m) + 1;
  }
  return std::nullopt;
}

std::optional<int> detect(const std::vector<R>& r, int t_obv) {
  RdpMonitor mon(t_obv, 0);
  mon.reset(0);
  for (std::size_t t = 0; t < r.size(); ++t) {
    if (auto hit = mon.observe(static_cast<int>(t) + 1, r[t])) return hit;
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("rdp") {

TEST_CASE("finite differences of the smoothed trace") {
  LossTrace tr(1);
  // window 1 averages pairs: raw 4, -2, 2 smooths to 4, 1, 0.
  tr.push_mean(1, 4.0);
  tr.push_mean(2, -2.0);
  tr.push_mean(3, 2.0);
  CHECK(tr.smoothed(1) == 4.0);
  CHECK(tr.smoothed(2) == 1.0);
  CHECK(tr.smoothed(3) == 0.0);
  CHECK_FALSE(tr.d1(1));
  CHECK(*tr.d1(2) == -3.0);
  CHECK(*tr.d1(3) == -1.0);
  CHECK_FALSE(tr.d2(2));
  CHECK(*tr.d2(3) == 2.0);
  CHECK(*tr.curvature(3) == doctest::Approx(std::pow(2.0, 1.5) / 2.0));
}

TEST_CASE("constant losses give zero derivatives") {
  LossTrace tr(5);
  const std::vector<double> two{2.0, 2.0, 2.0};
  for (int t = 1; t <= 8; ++t) tr.push_loss(t, two);
  CHECK(tr.raw(1) == 2.0);
  CHECK(*tr.d1(8) == 0.0);
  CHECK(*tr.d2(8) == 0.0);
  CHECK_FALSE(tr.curvature(8));
}

TEST_CASE("trace input checks") {
  LossTrace tr(5);
  const std::vector<double> bad{1.0, std::numeric_limits<double>::infinity(), 1.0};
  try {
    tr.push_loss(1, bad);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.index() == 1);
  }
  CHECK_THROWS_AS(tr.push_mean(2, 1.0), StateError);
  CHECK_THROWS_AS(LossTrace(0), ConfigError);
}

TEST_CASE("radius of curvature") {
  CHECK(*curvature_radius(-1, 2) == doctest::Approx(1.41421).epsilon(1e-5));
  CHECK(*curvature_radius(0, 1) == 1.0);
  CHECK_FALSE(curvature_radius(3, 0));
  CHECK_FALSE(curvature_radius(3, 1e-12));
}

TEST_CASE("detector fires at the minimum after t_obv larger rounds") {
  const std::vector<R> r{5, 3, 2, 4, 4, 4};
  CHECK(detect(r, 3) == 3);
  CHECK(oracle(r, 3) == 3);
  const std::vector<R> down{9, 8, 7, 6, 5, 4, 3, 2, 1};
  CHECK_FALSE(detect(down, 3));
}

TEST_CASE("undefined and negative radii are skipped") {
  const std::vector<R> r{5, 2, std::nullopt, 4, -1.0, 4, std::nullopt, 4};
  CHECK(detect(r, 3) == 2);
}

TEST_CASE("detector fires once per phase") {
  RdpMonitor mon(2, 0);
  mon.reset(0);
  int fired = 0;
  const std::vector<double> r{3, 1, 2, 2, 0.5, 2, 2, 2};
  for (std::size_t t = 0; t < r.size(); ++t) fired += mon.observe(static_cast<int>(t) + 1, r[t]) ? 1 : 0;
  CHECK(fired == 1);
  CHECK(mon.phase() == RdpMonitor::Phase::ended);
  mon.reset(8);
  CHECK(mon.phase() == RdpMonitor::Phase::warming);
  CHECK_FALSE(mon.t_min());
}

TEST_CASE("warm-up window is enforced") {
  RdpMonitor mon(3, 5);
  mon.reset(10);
  CHECK_THROWS_AS(mon.observe(15, 1.0), StateError);
  CHECK_NOTHROW(mon.observe(16, 1.0));
  LossTrace tr(5);
  tr.push_mean(1, 1.0);
  CHECK_THROWS_AS(check_rdp_end(mon, tr, 17), StateError);
}

TEST_CASE("counter stays within t_obv while monitoring") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  RdpMonitor mon(3, 0);
  mon.reset(0);
  for (int t = 1; t <= 200 && mon.phase() != RdpMonitor::Phase::ended; ++t) {
    mon.observe(t, u(rng));
    CHECK(mon.rounds_since_min() <= 3);
  }
}

TEST_CASE("detector matches the definition scan on random sequences") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.5, 3.0);
  std::bernoulli_distribution gap(0.15);
  for (int s = 0; s < 300; ++s) {
    const int t_obv = 1 + static_cast<int>(rng() % 4);
    std::vector<R> r(5 + rng() % 40);
    for (auto& v : r) {
      if (!gap(rng)) v = u(rng);
    }
    CHECK(detect(r, t_obv) == oracle(r, t_obv));
  }
}

}  // TEST_SUITE
