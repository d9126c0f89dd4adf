#include "reference.hpp"

#include "secest/error.hpp"
#include "secest/kahan.hpp"
#include "secest/legit.hpp"

#include "doctest.h"

#include <cmath>

using namespace secest;
using namespace secest::testing;

TEST_CASE("pi for lambda = 0.3, t = 3") {
  const LegitStationary s = pi_distribution(0.3, 3, 10);
  for (int j = 0; j <= 3; ++j) CHECK(s.pi[static_cast<std::size_t>(j)] == doctest::Approx(0.3 / 1.9).epsilon(1e-15));
  CHECK(s.pi[4] == doctest::Approx(0.7 * 0.3 / 1.9).epsilon(1e-15));
  CHECK(s.pi[0] == doctest::Approx(0.157895).epsilon(1e-5));
  CHECK(s.pi[4] == doctest::Approx(0.110526).epsilon(1e-5));
}

TEST_CASE("pi for a perfect channel") {
  const LegitStationary s = pi_distribution(1.0, 0, 5);
  CHECK(s.pi[0] == 1.0);
  for (std::size_t j = 1; j < s.pi.size(); ++j) CHECK(s.pi[j] == 0.0);
  CHECK(s.tail_mass == 0.0);
}

TEST_CASE("pi normalization and shape") {
  for (double lambda : {0.05, 0.3, 0.7, 1.0}) {
    for (int t : {0, 1, 3, 10, 30}) {
      for (int m : {t, t + 5, t + 200}) {
        const LegitStationary s = pi_distribution(lambda, t, m);
        CompensatedSum total;
        for (double p : s.pi) total += p;
        total += s.tail_mass;
        CHECK(total.value() == doctest::Approx(1.0).epsilon(1e-12));
        for (int j = 1; j <= m; ++j) {
          const auto k = static_cast<std::size_t>(j);
          if (j <= t) {
            CHECK(s.pi[k] == s.pi[0]);
          } else if (s.pi[k - 1] > 0.0) {
            CHECK(s.pi[k] / s.pi[k - 1] == doctest::Approx(1.0 - lambda).epsilon(1e-14));
          }
        }
      }
    }
  }
}

TEST_CASE("pi errors") {
  try {
    pi_distribution(0.0, 1, 5);
    FAIL("lambda = 0 accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDegenerateChannel);
  }
  try {
    pi_distribution(0.3, 5, 4);
    FAIL("max_index < t accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kHorizon);
  }
}

TEST_CASE("objective J") {
  const CovarianceLadder ladder = build_ladder(reference_model(), 256);

  CHECK(objective_j(ladder, 1.0, 0) == doctest::Approx(kTracePBar).epsilon(1e-12));

  // frozen oracle; J is a truncated lower sum within 1e-9 relative
  CHECK(objective_j(ladder, 0.3, 0) == doctest::Approx(1.0488950906087238).epsilon(2e-9));
  CHECK(objective_j(ladder, 0.3, 3) == doctest::Approx(1.561630698804139).epsilon(2e-9));
  CHECK(objective_j(ladder, 0.3, 5) == doctest::Approx(2.2472520101753344).epsilon(2e-9));
  CHECK(objective_j(ladder, 0.3, 8) == doctest::Approx(3.8266127102189142).epsilon(2e-9));
  const double tight = objective_j(ladder, 0.3, 5, 1e-13);
  CHECK(tight == doctest::Approx(2.2472520101753344).epsilon(1e-12));
  CHECK(tight <= 2.2472520101753344 + 1e-12);

  double prev = 0.0;
  for (int t = 0; t <= 30; ++t) {
    const double j = objective_j(ladder, 0.3, t);
    CHECK(j >= prev - 1e-9);
    prev = j;
  }

  try {
    objective_j(ladder, 0.3, 2, 0.0);
    FAIL("tol = 0 accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
  }
  CHECK_THROWS_AS(objective_j(ladder, 0.3, 2, -1.0), Error);
}

TEST_CASE("objective J with a marginally stable plant") {
  SystemModel m;
  m.A = Matrix{{1.0, 0.0}, {0.0, 0.5}};
  m.C = Matrix{{1.0, 1.0}};
  m.Q = Matrix::Identity(2, 2) * 0.1;
  m.R = Matrix::Constant(1, 1, 0.1);
  const CovarianceLadder ladder = build_ladder(m, 64);
  // the trace grows linearly, so the series converges only geometrically
  const double j = objective_j(ladder, 0.5, 2, 1e-12);
  const CovarianceLadder deep = ladder.extended(4000);
  CompensatedSum direct;
  const LegitStationary s = pi_distribution(0.5, 2, 4000);
  for (int k = 0; k <= 4000; ++k) direct += s.pi[static_cast<std::size_t>(k)] * deep.trace(k);
  CHECK(j == doctest::Approx(direct.value()).epsilon(1e-12));
}
