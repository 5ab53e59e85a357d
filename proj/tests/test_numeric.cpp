#include "latflow/gaussian.hpp"
#include "latflow/rational.hpp"
#include "latflow/sqrtsum.hpp"

#include <doctest.h>

using namespace latflow;

TEST_CASE("rational parsing round-trips") {
  CHECK(parse_rational("3/2") == Rat(3, 2));
  CHECK(parse_rational("-1/2") == Rat(-1, 2));
  CHECK(parse_rational("7") == Rat(7));
  CHECK(parse_rational("0.25") == Rat(1, 4));
  CHECK(parse_rational("-2.5") == Rat(-5, 2));
  CHECK(rat_to_string(Rat(3, 2)) == "3/2");
  CHECK(rat_to_string(Rat(-4, 2)) == "-2");
  CHECK_THROWS_AS(parse_rational("1/0"), bad_input);
  CHECK_THROWS_AS(parse_rational("abc"), bad_input);
}

TEST_CASE("square detection") {
  Rat r;
  CHECK(rational_square_root(Rat(9, 4), &r));
  CHECK(r == Rat(3, 2));
  CHECK_FALSE(rational_square_root(Rat(2), &r));
  CHECK_FALSE(rational_square_root(Rat(-1), &r));
}

TEST_CASE("phase comparison by cross products") {
  GaussRat a(Rat(1), Rat(1));   // pi/4
  GaussRat b(Rat(1), Rat(-1));  // -pi/4
  GaussRat c(Rat(2), Rat(2));   // pi/4 again
  CHECK(phase_less(b, a));
  CHECK_FALSE(phase_less(a, b));
  CHECK(phase_equal(a, c));
  CHECK(in_default_halfplane(GaussRat(Rat(0), Rat(1))));
  CHECK_FALSE(in_default_halfplane(GaussRat(Rat(0), Rat(-1))));
  CHECK_FALSE(in_default_halfplane(GaussRat(Rat(-1), Rat(5))));
}

TEST_CASE("sqrt sums compare exactly") {
  SqrtSum a, b;
  a.add_sqrt(Rat(2));
  a.add_sqrt(Rat(8));  // sqrt 2 + 2 sqrt 2 = 3 sqrt 2
  b.add_sqrt(Rat(18));
  CHECK(a.compare(b) == 0);

  SqrtSum c, d;
  c.add_sqrt(Rat(2));
  c.add_sqrt(Rat(3));
  d.add_sqrt(Rat(10));  // sqrt2 + sqrt3 = 3.146 < sqrt10 = 3.162
  CHECK(c.compare(d) < 0);
  CHECK(d.compare(c) > 0);
  CHECK(c.compare(Rat(3)) > 0);
  CHECK(c.compare(Rat(4)) < 0);

  SqrtSum e;
  e.add_sqrt(Rat(4));  // = 2, a rational radicand collapsing to sqrt(1)*2? stays sqrt(4)
  CHECK(e.compare(Rat(2)) == 0);
  CHECK(e.to_double() == doctest::Approx(2.0));
}

TEST_CASE("sqrt sum subtraction cancels structurally") {
  SqrtSum a;
  a.add_sqrt(Rat(5), Rat(2));
  a.add_sqrt(Rat(20), Rat(-1));  // 2 sqrt5 - 2 sqrt5 = 0
  CHECK(a.is_zero());
}
