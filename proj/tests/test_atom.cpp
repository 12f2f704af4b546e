#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "motcorr/atom.hpp"

using namespace motcorr;

TEST_SUITE_BEGIN("atom");

TEST_CASE("clebsch-gordan closed forms for F=0 -> F'=1") {
  // A J=0 ground state couples with equal strength through all three
  // spherical components.
  const double s_p = clebsch_gordan_sq(0, 0, +1);
  const double s_0 = clebsch_gordan_sq(0, 0, 0);
  const double s_m = clebsch_gordan_sq(0, 0, -1);
  CHECK(s_p == doctest::Approx(s_0));
  CHECK(s_p == doctest::Approx(s_m));
  CHECK(s_p > 0.0);
}

TEST_CASE("stretched sigma+ coupling is normalized to 1") {
  for (int f = 1; f <= 6; ++f)
    CHECK(clebsch_gordan_sq(f, f, +1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("stretched state ratio (2F+1)(F+1)") {
  CHECK(stretched_state_ratio(4) == doctest::Approx(45.0).epsilon(1e-14));
  CHECK(stretched_state_ratio(1) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(stretched_state_ratio(2) == doctest::Approx(15.0).epsilon(1e-14));
  // Consistency with the raw couplings: sigma+/sigma- strength from m=F.
  for (int f = 1; f <= 6; ++f) {
    const double ratio = clebsch_gordan_sq(f, f, +1) / clebsch_gordan_sq(f, f, -1);
    CHECK(ratio == doctest::Approx(stretched_state_ratio(f)).epsilon(1e-12));
  }
}

TEST_CASE("closed channels throw") {
  CHECK_THROWS_AS(clebsch_gordan_sq(2, 3, 0), std::domain_error);
  CHECK_THROWS_AS(clebsch_gordan_sq(2, 0, 2), std::domain_error);
}

TEST_CASE("branching completeness over F_g in [0, 6]") {
  for (int fg = 0; fg <= 6; ++fg) {
    CouplingTable table(fg, fg + 1);
    for (int me = -(fg + 1); me <= fg + 1; ++me) {
      double sum = 0.0;
      for (int q = -1; q <= 1; ++q) sum += table.branching(me, q);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("coupling table matches the closed forms") {
  CouplingTable table(4, 5);
  for (int m = -4; m <= 4; ++m)
    for (int q = -1; q <= 1; ++q) {
      CHECK(table.excitation(m, q) ==
            doctest::Approx(clebsch_gordan_sq(4, m, q)).epsilon(1e-14));
      CHECK(table.amplitude(m, q) ==
            doctest::Approx(std::sqrt(clebsch_gordan_sq(4, m, q))).epsilon(1e-14));
    }
}

TEST_CASE("atom spec validation") {
  AtomSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.f_excited = spec.f_ground;  // not a closed F -> F+1 transition
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = AtomSpec{};
  spec.gamma = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_SUITE_END();
