#include <catch2/catch_amalgamated.hpp>

#include <cfmaxmin/projection.hpp>

#include <random>

using namespace cfmaxmin;
using Catch::Matchers::WithinAbs;

TEST_CASE("box projection caps from above only") {
  const double bound = 2.5;
  VectorXd x(3);
  x << 1.0, -40.0, 2.0;
  REQUIRE(project_box(x, bound) == x);

  x << 3.5, 3.5, 3.5;
  REQUIRE((project_box(x, bound).array() == bound).all());

  x << 1.5, 4.5, 2.5;
  VectorXd expect(3);
  expect << 1.5, 2.5, 2.5;
  REQUIRE(project_box(x, bound) == expect);
}

TEST_CASE("simplex projection hand cases") {
  VectorXd v(2);
  v << 2.0, 0.0;
  VectorXd out = project_simplex(v);
  REQUIRE_THAT(out(0), WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(out(1), WithinAbs(0.0, 1e-12));

  v << 1.0, 1.0;
  out = project_simplex(v);
  REQUIRE_THAT(out(0), WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(out(1), WithinAbs(0.5, 1e-12));

  // deficient mass spreads the shortfall equally
  v << 0.3, 0.2;
  out = project_simplex(v);
  REQUIRE_THAT(out(0), WithinAbs(0.55, 1e-12));
  REQUIRE_THAT(out(1), WithinAbs(0.45, 1e-12));

  // feasible points are fixed
  VectorXd uniform = VectorXd::Constant(4, 0.25);
  REQUIRE(project_simplex(uniform) == uniform);

  REQUIRE(project_simplex(VectorXd::Constant(1, -3.0))(0) == 1.0);
}

TEST_CASE("bisection and sort projections agree including ties") {
  std::mt19937_64 engine(17);
  std::normal_distribution<double> gauss(0.0, 3.0);
  std::uniform_int_distribution<int> dim(1, 60);
  std::uniform_int_distribution<int> mode(0, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = dim(engine);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(engine);
    switch (mode(engine)) {
      case 1:
        v *= 100.0;  // large scale
        break;
      case 2:
        for (int i = 1; i < n; i += 2) v(i) = v(i - 1);  // pairwise ties
        break;
      case 3:
        v.setConstant(v(0));  // total tie
        break;
      default:
        break;
    }
    const VectorXd a = project_simplex(v);
    const VectorXd b = project_simplex_sorted(v);
    REQUIRE((a - b).cwiseAbs().maxCoeff() <= 1e-9);
    REQUIRE(a.minCoeff() >= 0.0);
    REQUIRE_THAT(a.sum(), WithinAbs(1.0, 1e-9));

    // idempotent and order preserving
    REQUIRE((project_simplex(a) - a).cwiseAbs().maxCoeff() <= 1e-12);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (v(i) > v(j)) REQUIRE(a(i) >= a(j) - 1e-15);
  }
}

TEST_CASE("two-sided box projection clamps at both edges") {
  VectorXd x(3);
  x << -5.0, 0.5, 9.0;
  VectorXd lo(3);
  lo << -1.0, -1.0, 0.75;
  const VectorXd y = project_box(x, lo, 2.0);
  REQUIRE(y(0) == -1.0);
  REQUIRE(y(1) == 0.5);
  REQUIRE(y(2) == 2.0);
}
