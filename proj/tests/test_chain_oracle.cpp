#include "secest/chain_oracle.hpp"
#include "secest/eaves.hpp"
#include "secest/error.hpp"
#include "secest/legit.hpp"

#include "doctest.h"

#include <cmath>

using namespace secest;

TEST_CASE("transition split from a scheduled state") {
  const TruncatedChain chain = build_truncated_chain({0.3, 0.3, 1.0}, 1, 20);
  // (i, j) = (2, 5) with i >= t
  CHECK(chain.probability(2, 5, 0, 0) == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(chain.probability(2, 5, 0, 6) == doctest::Approx(0.21).epsilon(1e-15));
  CHECK(chain.probability(2, 5, 3, 0) == doctest::Approx(0.21).epsilon(1e-15));
  CHECK(chain.probability(2, 5, 3, 6) == doctest::Approx(0.49).epsilon(1e-15));
  // below the threshold the step is deterministic
  const TruncatedChain waiting = build_truncated_chain({0.3, 0.3, 1.0}, 3, 20);
  CHECK(waiting.probability(1, 4, 2, 5) == 1.0);
}

TEST_CASE("rows are stochastic, including saturated edges") {
  const TruncatedChain chain = build_truncated_chain({0.5, 0.2, 0.9}, 2, 20);
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) REQUIRE(std::abs(chain.row_sum(i, j) - 1.0) < 1e-14);
  }
  CHECK(chain.probability(20, 20, 20, 20) > 0.0);
}

TEST_CASE("perfect channels") {
  const TruncatedChain chain = build_truncated_chain({1.0, 1.0, 1.0}, 0, 10);
  CHECK(chain.probability(0, 0, 0, 0) == 1.0);
  const OracleStationary st = stationary_power_iteration(chain);
  CHECK(st.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cap must leave room past the bound horizon") {
  try {
    build_truncated_chain({0.3, 0.3, 1.0}, 5, 20);
    FAIL("small cap accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kHorizon);
  }
}

TEST_CASE("oracle matches the recursions") {
  const ChannelModel channels[] = {{0.3, 0.3, 1.0}, {0.5, 0.2, 1.0}, {0.7, 0.7, 1.0}, {0.6, 0.4, 0.8}};
  for (const ChannelModel& ch : channels) {
    for (int t : {0, 1, 3}) {
      const OracleStationary st = stationary_power_iteration(build_truncated_chain(ch, t, 120));
      CHECK(st.residual < 1e-12);
      const EavesStationary e = eaves_stationary(ch, t, 40);
      const LegitStationary pi = pi_distribution(joint_reception(ch).legit(), t, 40);
      for (int j = 0; j <= 40; ++j) {
        const auto k = static_cast<std::size_t>(j);
        REQUIRE(std::abs(st.at(0, j) - e.phi_row[k]) < 1e-8);
        REQUIRE(std::abs(st.omega[k] - e.omega[k]) < 1e-8);
        REQUIRE(std::abs(st.pi[k] - pi.pi[k]) < 1e-8);
      }
    }
  }
}

TEST_CASE("stationary mass lives on the recurrent set") {
  const ChannelModel ch{0.3, 0.3, 1.0};
  for (int t : {1, 3}) {
    const int cap = 90;
    const OracleStationary st = stationary_power_iteration(build_truncated_chain(ch, t, cap));
    double total = 0.0;
    for (double p : st.phi) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i <= cap / 3; ++i) {
      double row = 0.0;
      for (int j = 0; j <= cap; ++j) {
        if (!in_recurrent_set(i, j, t)) {
          REQUIRE(st.at(i, j) < 1e-10);
        } else {
          row += st.at(i, j);
        }
      }
      CHECK(row == doctest::Approx(st.pi[static_cast<std::size_t>(i)]).epsilon(1e-8));
    }
    // phi_{i+1, j+1} = phi_{i, j} below the threshold, alpha phi_{i, j} above
    const double alpha = 0.49;
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        if (!in_recurrent_set(i, j, t)) continue;
        const double factor = i < t ? 1.0 : alpha;
        REQUIRE(std::abs(st.at(i + 1, j + 1) - factor * st.at(i, j)) < 1e-9);
      }
    }
  }
}

TEST_CASE("doubling the cap leaves the interior unchanged") {
  const ChannelModel ch{0.5, 0.2, 1.0};
  const OracleStationary a = stationary_power_iteration(build_truncated_chain(ch, 1, 60));
  const OracleStationary b = stationary_power_iteration(build_truncated_chain(ch, 1, 120));
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) REQUIRE(std::abs(a.at(i, j) - b.at(i, j)) < 1e-9);
  }
}
