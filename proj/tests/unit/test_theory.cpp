// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "driftbench/common/errors.hpp"
#include "driftbench/common/json_writer.hpp"
#include "driftbench/theory/report_io.hpp"

using namespace driftbench;
using namespace driftbench::theory;

namespace {

DriftingQuadratic scalar_quadratic(double delta0 = 0.0, double rho = 0.0) {
  DriftingQuadratic q;
  q.H = Eigen::MatrixXd::Identity(1, 1);
  q.center = Eigen::VectorXd::Zero(1);
  q.drift_dir = Eigen::VectorXd::Ones(1);
  q.delta0 = delta0;
  q.rho = rho;
  return q;
}

AlphaSchedule constant(double a) {
  return [a](std::size_t) { return a; };
}

RegretCalibration fixture() {
  return regret_calibration_from_json(read_text_file(std::string(DRIFTBENCH_FIXTURE_DIR) + "/regret_calibration.json"));
}

TrackingProblem static_scalar() {
  TrackingProblem p;
  p.H = Eigen::MatrixXd::Identity(1, 1);
  p.optimum = [](std::size_t) { return Eigen::VectorXd::Zero(1); };
  p.theta0 = Eigen::VectorXd::Ones(1);
  return p;
}

}  // namespace

TEST_CASE("drifting quadratic") {
  Rng rng(1);
  const DriftingQuadratic q = DriftingQuadratic::random(5, 0.1, 0.9, rng);
  CHECK(q.mu() > 0.0);
  CHECK(q.mu() <= q.L());
  CHECK((q.H - q.H.transpose()).norm() == 0.0);
  CHECK(q.F(q.center) == 0.0);
  const Eigen::VectorXd theta = Eigen::VectorXd::Ones(5);
  CHECK((q.grad_t(theta, 3) - q.grad_F(theta)).norm() == doctest::Approx(0.1 * 0.729).epsilon(1e-12));
  // Σ δ_t is finite for ρ < 1.
  double s = 0.0;
  for (std::size_t t = 0; t < 2000; ++t) s += q.delta(t);
  CHECK(s == doctest::Approx(0.1 / (1.0 - 0.9)).epsilon(1e-9));
}

TEST_CASE("pl_contraction_probe") {
  SUBCASE("scalar, no drift: ratio 0.81 under bound 0.9") {
    const PLProbeReport r = pl_contraction_probe(scalar_quadratic(), constant(0.1), 50, Eigen::VectorXd::Ones(1));
    CHECK(r.violations == 0);
    for (std::size_t t = 0; t < 50; ++t) {
      CHECK(r.gaps[t + 1] / r.gaps[t] == doctest::Approx(0.81).epsilon(1e-12));
    }
  }
  SUBCASE("step size at 1/L is rejected") {
    CHECK_THROWS_AS(pl_contraction_probe(scalar_quadratic(), constant(1.0), 10, Eigen::VectorXd::Ones(1)), ConfigError);
    CHECK_THROWS_AS(pl_contraction_probe(scalar_quadratic(), constant(0.0), 10, Eigen::VectorXd::Ones(1)), ConfigError);
    // A schedule that only crosses 1/L late is also rejected up front.
    auto late = [](std::size_t t) { return t < 5 ? 0.1 : 1.5; };
    CHECK_THROWS_AS(pl_contraction_probe(scalar_quadratic(), late, 10, Eigen::VectorXd::Ones(1)), ConfigError);
  }
  SUBCASE("5-D random SPD with drift holds at every step") {
    Rng rng(2);
    const DriftingQuadratic q = DriftingQuadratic::random(5, 0.1, 0.9, rng);
    Eigen::VectorXd theta0(5);
    theta0 << 1, -2, 0.5, 0, 3;
    const PLProbeReport r = pl_contraction_probe(q, constant(0.5 / q.L()), 500, theta0);
    CHECK(r.violations == 0);
    CHECK(r.min_slack >= kSlackTolerance);
    CHECK(r.slack.size() == 500);
  }
  SUBCASE("convergence with summable drift") {
    const PLProbeReport r = pl_contraction_probe(scalar_quadratic(), constant(0.1), 500, Eigen::VectorXd::Ones(1));
    CHECK(r.gaps[500] <= 1e-6 * r.gaps[0]);
  }
  SUBCASE("suite of random instances") {
    for (const PLProbeReport& r : pl_suite(PLSuiteConfig{})) {
      CHECK(r.violations == 0);
      CHECK(r.gaps.back() < r.gaps.front());
    }
  }
}

TEST_CASE("dynamic_regret_run") {
  SUBCASE("static optimum: geometric series to 2/3") {
    const RegretReport r = dynamic_regret_run(static_scalar(), 200, 0.5);
    CHECK(r.CV_T == 0.0);
    CHECK(r.gaps[3] == doctest::Approx(0.5 * std::pow(0.25, 3)).epsilon(1e-15));
    CHECK(r.R_T == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.avg_regret.size() == 200);
  }
  SUBCASE("alternating optimum gives CV = 2c(T-1)") {
    TrackingProblem p = static_scalar();
    const double c = 0.3;
    p.optimum = [c](std::size_t t) { return Eigen::VectorXd::Constant(1, t % 2 == 0 ? c : -c); };
    const RegretReport r = dynamic_regret_run(p, 101, 0.1);
    CHECK(r.CV_T == doctest::Approx(2 * c * 100).epsilon(1e-12));
  }
  SUBCASE("stored gaps reproduce R_T exactly") {
    Rng rng(3);
    const RegretReport r = dynamic_regret_run(log_drift_problem(4, 1.0, rng), 512, 1.0 / std::sqrt(512.0));
    CHECK(regret_from_gaps(r) == r.R_T);
    CHECK(r.avg_regret.back() == r.R_T / 512.0);
  }
  SUBCASE("average regret falls with the horizon") {
    for (std::uint64_t seed : {4, 5, 6}) {
      auto avg = [seed](std::size_t T) {
        Rng rng(seed);
        const RegretReport r = dynamic_regret_run(log_drift_problem(3, 1.5, rng), T, 1.0 / std::sqrt(double(T)));
        return r.R_T / double(T);
      };
      CHECK(avg(1024) < avg(256));
      CHECK(avg(4096) < avg(1024));
    }
  }
  SUBCASE("CV grows like log T") {
    Rng a(7), b(7);
    const double cv1 = dynamic_regret_run(log_drift_problem(3, 1.0, a), 256, 0.1).CV_T;
    const double cv2 = dynamic_regret_run(log_drift_problem(3, 1.0, b), 4096, 0.1).CV_T;
    CHECK(cv2 - cv1 == doctest::Approx(std::log(4096.0 / 256.0)).epsilon(0.01));
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(dynamic_regret_run(static_scalar(), 1, 0.5), ConfigError);
    CHECK_THROWS_AS(dynamic_regret_run(static_scalar(), 10, 0.0), ConfigError);
  }
}

TEST_CASE("regret_bound_check") {
  const RegretCalibration cal = fixture();
  CHECK(cal.constants.C > 0.0);

  SUBCASE("fixture matches a refit on the calibration seed") {
    const RegretCalibration again = calibrate_regret(cal.seed, cal.instances, cal.horizons, cal.headroom);
    CHECK(again.constants.C == cal.constants.C);
    CHECK(again.constants.C0 == cal.constants.C0);
  }
  SUBCASE("zero drift run passes") {
    const RegretReport r = dynamic_regret_run(static_scalar(), 200, 0.5);
    CHECK(regret_bound_check(r, constant(0.5), r.G, cal.constants));
  }
  SUBCASE("inflated regret fails") {
    Rng rng(8);
    RegretReport r = dynamic_regret_run(log_drift_problem(3, 1.0, rng), 1024, 1.0 / 32.0);
    const double bound = cal.constants.C * regret_bound_bracket(r, constant(r.alpha), r.G) + cal.constants.C0;
    r.R_T = 2.0 * bound + 1.0;
    CHECK_FALSE(regret_bound_check(r, constant(r.alpha), r.G, cal.constants));
  }
  SUBCASE("ten random drifting quadratics on a fresh seed") {
    for (const RegretReport& r : regret_batch(cal.seed + 1, 10, 1024)) {
      CHECK(regret_bound_check(r, constant(r.alpha), r.G, cal.constants));
    }
  }
}

TEST_CASE("expressivity_probe") {
  SUBCASE("y = x and y = -x with one weight each") {
    std::vector<ExpressivityTask> tasks(2);
    for (int k = 0; k < 2; ++k) {
      tasks[k].features = Eigen::MatrixXd(2, 1);
      tasks[k].features << -1, 1;
      tasks[k].targets = Eigen::VectorXd(2);
      const double s = k == 0 ? 1.0 : -1.0;
      tasks[k].targets << -s, s;
    }
    const ExpressivityReport r = expressivity_probe(tasks, 2);
    CHECK(r.static_worst_error == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.dynamic_worst_error == doctest::Approx(0.0));
  }
  SUBCASE("identical tasks give equal errors") {
    Rng rng(9);
    const ExpressivityReport r = expressivity_probe(identical_tasks(8, 8, 32, rng), 8);
    CHECK(std::abs(r.static_worst_error - r.dynamic_worst_error) < 1e-12);
  }
  SUBCASE("conflicting tasks: dynamic below half of static") {
    for (std::uint64_t seed = 10; seed < 30; ++seed) {
      Rng rng(seed);
      const ExpressivityReport r = expressivity_probe(conflicting_tasks(8, 8, 32, rng), 8);
      CHECK(r.dynamic_worst_error <= r.static_worst_error);
      CHECK(r.dynamic_worst_error < r.static_worst_error / 2.0);
    }
  }
  SUBCASE("budget must split evenly") {
    Rng rng(11);
    auto tasks = conflicting_tasks(3, 6, 10, rng);
    CHECK_THROWS_AS(expressivity_probe(tasks, 7), ConfigError);
    CHECK_THROWS_AS(expressivity_probe({tasks[0]}, 6), ConfigError);
  }
}

TEST_CASE("report outputs") {
  const RegretReport r = dynamic_regret_run(static_scalar(), 4, 0.5);
  const std::string csv = to_csv(r);
  CHECK(csv.rfind("t,gap,avg_regret\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(to_json(r).find("\"R_T\"") != std::string::npos);
  const RegretCalibration cal = fixture();
  CHECK(regret_calibration_from_json(to_json(cal)).constants.C == cal.constants.C);
}
