#include <catch2/catch_amalgamated.hpp>

#include <cfmaxmin/channel.hpp>
#include <cfmaxmin/mirror_prox.hpp>
#include <cfmaxmin/problem.hpp>

#include <cmath>
#include <random>

using namespace cfmaxmin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ReducedProblem single_user_rp() {
  ReducedProblem rp;
  rp.a = MatrixXd::Zero(1, 1);
  rp.b = MatrixXd::Constant(1, 1, 2.0);
  rp.cbar = VectorXd::Constant(1, 2.0);
  rp.omega = 1.0;
  rp.theta_bar = 0.0;
  rp.finalize();
  return rp;
}

ReducedProblem symmetric_pair_rp() {
  ReducedProblem rp;
  rp.a.resize(2, 2);
  rp.a << 0.0, 0.5, 0.5, 0.0;
  rp.b = MatrixXd::Constant(2, 2, 0.3);
  rp.cbar = VectorXd::Constant(2, 2.0);
  rp.omega = 1.0;
  rp.theta_bar = 0.0;
  rp.finalize();
  return rp;
}

ReducedProblem network_rp(int m_count, int l_count, std::uint64_t seed, double omega) {
  NetworkConfig cfg;
  cfg.num_aps = m_count;
  cfg.num_users = l_count;
  cfg.rng_seed = seed;
  const ChannelStats stats = make_channel_stats(cfg);
  const double pbar = cfg.normalized_max_power();
  const VectorXd p = VectorXd::Constant(l_count, pbar);
  const FilterSet q = update_filters(p, stats, cfg.antennas_per_ap);
  return reduce(stats, q, cfg.antennas_per_ap, omega, pbar);
}

SaddleState make_state(VectorXd theta, VectorXd lambda) {
  SaddleState s;
  s.theta = std::move(theta);
  s.lambda = std::move(lambda);
  return s;
}

}  // namespace

TEST_CASE("vanishing step freezes the iterate") {
  const ReducedProblem rp = symmetric_pair_rp();
  VectorXd theta(2), lambda(2);
  theta << -0.5, -1.0;
  lambda << 0.7, 0.3;
  const ExtragradientResult res = extragradient_step(make_state(theta, lambda), rp, 1e-13);
  REQUIRE((res.theta_hat - theta).cwiseAbs().maxCoeff() <= 1e-9);
  REQUIRE((res.lambda_hat - lambda).cwiseAbs().maxCoeff() <= 1e-9);
  REQUIRE((res.theta_next - theta).cwiseAbs().maxCoeff() <= 1e-9);
  REQUIRE(std::abs(res.delta) <= 1e-10);
}

TEST_CASE("single-user step is projected gradient descent") {
  const ReducedProblem rp = single_user_rp();  // f(t) = 2 + 2 e^{-t}, cap 0
  VectorXd theta(1), lambda(1);
  theta << -1.0;
  lambda << 1.0;
  const double mu = 0.1;
  const ExtragradientResult res = extragradient_step(make_state(theta, lambda), rp, mu);

  const double hat = -1.0 + mu * 2.0 * std::exp(1.0);
  REQUIRE_THAT(res.theta_hat(0), WithinRel(hat, 1e-12));
  REQUIRE(res.lambda_hat(0) == 1.0);
  const double next = -1.0 + mu * 2.0 * std::exp(-hat);
  REQUIRE_THAT(res.theta_next(0), WithinRel(next, 1e-12));

  const double f_hat = 2.0 + 2.0 * std::exp(-hat);
  const double expect_delta =
      mu * (-2.0 * std::exp(-hat)) * (hat - next) - 0.5 * (next + 1.0) * (next + 1.0);
  REQUIRE_THAT(res.delta, WithinRel(expect_delta, 1e-10));
  REQUIRE(res.delta <= 0.0);
  (void)f_hat;

  // large step clamps at the cap
  const ExtragradientResult big = extragradient_step(make_state(theta, lambda), rp, 10.0);
  REQUIRE(big.theta_hat(0) == 0.0);
}

TEST_CASE("single-user solve pushes power to the cap") {
  const ReducedProblem rp = single_user_rp();
  MpConfig cfg;
  cfg.tol = 1e-6;
  cfg.max_iter = 3000;
  const MpReport report =
      mp_solve(rp, VectorXd::Constant(1, -3.0), VectorXd::Constant(1, 1.0), cfg);
  REQUIRE(report.termination == MpTermination::tolerance);
  REQUIRE(report.lambda_star(0) == 1.0);
  REQUIRE(report.max_delta <= 0.0);
  REQUIRE(report.theta_star(0) <= 0.0);
  REQUIRE(report.theta_star(0) > -0.1);
  REQUIRE(report.obj_trace.back() < 4.0 + 0.05);  // optimum is f(0) = 4
  REQUIRE(static_cast<int>(report.obj_trace.size()) == report.iterations);
  REQUIRE(static_cast<int>(report.accepted_steps.size()) == report.iterations);
}

TEST_CASE("symmetric pair at full power is a fixed point") {
  const ReducedProblem rp = symmetric_pair_rp();
  MpConfig cfg;
  const MpReport report =
      mp_solve(rp, VectorXd::Zero(2), VectorXd::Constant(2, 0.5), cfg);
  REQUIRE(report.termination == MpTermination::tolerance);
  REQUIRE(report.iterations == 2);
  REQUIRE(report.theta_star(0) == 0.0);
  REQUIRE(report.theta_star(1) == 0.0);
  REQUIRE_THAT(report.lambda_star(0), WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(report.lambda_star(1), WithinAbs(0.5, 1e-12));
  // both inverse SINRs equal 0.5 + 0.6 + 2
  const VectorXd f = f_values(report.theta_star, rp);
  REQUIRE_THAT(f(0), WithinRel(3.1, 1e-12));
  REQUIRE(f(0) == f(1));
}

TEST_CASE("a power-cap plateau does not read as convergence") {
  // two users whose optimum sits just below full power: the primal iterate
  // clings to the cap for the first iterations while the dual weights
  // reorganize, so the averaged objective is flat before the solver has
  // gone anywhere
  const ReducedProblem rp = network_rp(7, 2, 100045, 7.0);
  MpConfig cfg;
  cfg.tol = 1e-13;
  cfg.max_iter = 2000;
  const MpReport report = mp_solve(rp, VectorXd::Constant(2, rp.theta_bar),
                                   VectorXd::Constant(2, 0.5), cfg);
  REQUIRE(report.iterations > 50);
  REQUIRE(report.obj_trace.back() < report.obj_trace.front() * (1.0 - 5e-4));
}

TEST_CASE("a stationary pair is returned exactly, not averaged") {
  // from an interior start the single user jumps to the cap and stays; the
  // answer must be the fixed point itself rather than the transient-laden
  // running average
  const ReducedProblem rp = single_user_rp();
  MpConfig cfg;
  const MpReport report =
      mp_solve(rp, VectorXd::Constant(1, -3.0), VectorXd::Constant(1, 1.0), cfg);
  REQUIRE(report.termination == MpTermination::tolerance);
  REQUIRE(report.theta_star(0) == 0.0);
  REQUIRE(report.obj_trace.back() == 4.0);  // f(0) = b + cbar
}

TEST_CASE("solver rejects infeasible starts and bad configs") {
  const ReducedProblem rp = symmetric_pair_rp();
  MpConfig cfg;
  REQUIRE_THROWS_AS(mp_solve(rp, VectorXd::Constant(2, 0.5), VectorXd::Constant(2, 0.5), cfg),
                    std::invalid_argument);
  VectorXd bad_lambda(2);
  bad_lambda << 0.8, 0.4;
  REQUIRE_THROWS_AS(mp_solve(rp, VectorXd::Zero(2), bad_lambda, cfg), std::invalid_argument);
  MpConfig bad_cfg;
  bad_cfg.rho = 1.0;
  REQUIRE_THROWS_AS(mp_solve(rp, VectorXd::Zero(2), VectorXd::Constant(2, 0.5), bad_cfg),
                    std::invalid_argument);
}

TEST_CASE("operator is monotone on feasible pairs") {
  const ReducedProblem rp = network_rp(12, 4, 19, 12.0);
  std::mt19937_64 engine(5);
  std::uniform_real_distribution<double> th(rp.theta_bar - 3.0, rp.theta_bar);
  std::uniform_real_distribution<double> un(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd t1(4), t2(4), l1(4), l2(4);
    for (int i = 0; i < 4; ++i) {
      t1(i) = th(engine);
      t2(i) = th(engine);
      l1(i) = un(engine);
      l2(i) = un(engine);
    }
    l1 = project_simplex(l1);
    l2 = project_simplex(l2);
    const PhiEval e1 = phi_and_grads(t1, l1, rp);
    const PhiEval e2 = phi_and_grads(t2, l2, rp);
    const double inner = (e1.grad_theta - e2.grad_theta).dot(t1 - t2) -
                         (e1.grad_lambda - e2.grad_lambda).dot(l1 - l2);
    REQUIRE(inner >= -1e-9);
  }
}

TEST_CASE("steps below the inverse Lipschitz bound always pass the residual test") {
  const ReducedProblem rp = network_rp(12, 4, 23, 12.0);
  std::mt19937_64 engine(6);
  std::uniform_real_distribution<double> th(rp.theta_bar - 2.0, rp.theta_bar);
  std::uniform_real_distribution<double> un(0.0, 1.0);
  auto draw = [&](VectorXd& t, VectorXd& l) {
    t.resize(4);
    l.resize(4);
    for (int i = 0; i < 4; ++i) {
      t(i) = th(engine);
      l(i) = un(engine);
    }
    l = project_simplex(l);
  };

  double lips = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    VectorXd t1, l1, t2, l2;
    draw(t1, l1);
    draw(t2, l2);
    const PhiEval e1 = phi_and_grads(t1, l1, rp);
    const PhiEval e2 = phi_and_grads(t2, l2, rp);
    VectorXd df(8), dz(8);
    df << e1.grad_theta - e2.grad_theta, -(e1.grad_lambda - e2.grad_lambda);
    dz << t1 - t2, l1 - l2;
    if (dz.norm() > 1e-9) lips = std::max(lips, df.norm() / dz.norm());
  }
  REQUIRE(lips > 0.0);

  const double mu = 0.5 / lips;
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd t, l;
    draw(t, l);
    const ExtragradientResult res = extragradient_step(make_state(t, l), rp, mu);
    REQUIRE(std::isfinite(res.delta));
    REQUIRE(res.delta <= 1e-14);
  }
}

TEST_CASE("network solve stays feasible and never accepts a positive residual") {
  const ReducedProblem rp = network_rp(20, 4, 31, 20.0);
  MpConfig cfg;
  cfg.max_iter = 600;
  const MpReport report = mp_solve(rp, VectorXd::Constant(4, rp.theta_bar),
                                   VectorXd::Constant(4, 0.25), cfg);
  REQUIRE(report.max_delta <= 0.0);
  REQUIRE((report.theta_star.array() <= rp.theta_bar + 1e-12).all());
  REQUIRE(report.lambda_star.minCoeff() >= -1e-15);
  REQUIRE_THAT(report.lambda_star.sum(), WithinAbs(1.0, 1e-10));
  REQUIRE(report.obj_trace.back() <= report.obj_trace.front());
  for (double mu : report.accepted_steps) REQUIRE(mu > 0.0);
}

TEST_CASE("averaged iterate keeps the measured 1/N envelope") {
  const ReducedProblem rp = network_rp(10, 5, 47, 10.0);
  MpConfig cfg;
  cfg.tol = 1e-300;
  cfg.max_iter = 20000;
  const MpReport report = mp_solve(rp, VectorXd::Constant(5, rp.theta_bar),
                                   VectorXd::Constant(5, 0.2), cfg);
  const double fstar = report.obj_trace.back();
  auto gap = [&](int n) {
    return n <= static_cast<int>(report.obj_trace.size()) ? report.obj_trace[n - 1] - fstar : 0.0;
  };
  // the anchor carries a margin: n * gap(n) is bounded but not monotone, and a
  // genuinely slower 1/sqrt(n) decay would still overshoot the margin by n = 400
  const double envelope = std::max(gap(50), 0.0) * 50.0 * 2.0;
  for (int n : {100, 200, 400}) REQUIRE(gap(n) <= envelope / n + 1e-9);
}

TEST_CASE("a floored state clamps both trial points from below") {
  const ReducedProblem rp = symmetric_pair_rp();
  VectorXd theta = VectorXd::Constant(2, -0.5);
  VectorXd lambda = VectorXd::Constant(2, 0.5);
  SaddleState state = make_state(theta, lambda);
  state.theta_floor = VectorXd::Constant(2, -0.6);
  // a huge step would otherwise send theta far below the floor
  const ExtragradientResult res = extragradient_trial(
      state, rp, 50.0, phi_and_grads(theta, lambda, rp));
  REQUIRE(res.theta_hat.minCoeff() >= -0.6);
  REQUIRE(res.theta_next.minCoeff() >= -0.6);
  REQUIRE(res.theta_hat.maxCoeff() <= rp.theta_bar);
}

TEST_CASE("solver iterates respect the noise-derived power floor") {
  // cbar_l e^{-theta_l} <= max_l f_l(theta_bar 1) holds at every optimum, so
  // the solver constrains itself to that sublevel box and the averaged output
  // must sit inside it.
  const ReducedProblem rp = network_rp(6, 4, 77, 6.0);
  const double f_cap = f_values(VectorXd::Constant(4, rp.theta_bar), rp).maxCoeff();
  const VectorXd floor = (rp.cbar.array().log() - std::log(16.0 * f_cap)).matrix();

  MpConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 2000;
  const MpReport rep = mp_solve(rp, VectorXd::Constant(4, rp.theta_bar),
                                VectorXd::Constant(4, 0.25), cfg);
  REQUIRE((rep.theta_star - floor).minCoeff() >= 0.0);
  REQUIRE((rep.theta_last - floor).minCoeff() >= 0.0);
  REQUIRE(rep.theta_star.maxCoeff() <= rp.theta_bar + 1e-12);
}
