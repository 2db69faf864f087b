// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>
#include <sstream>

#include "oracles.hpp"
#include "strb/validation.hpp"

using namespace strb;

TEST_CASE("parameter sampling statistics") {
  const ParameterBox box{(Vec(2) << 0.1, -1.0).finished(),
                         (Vec(2) << 10.0, 1.0).finished()};

  SECTION("deterministic for a fixed seed") {
    const SamplingSpec spec = default_sampling(box, 50, 123);
    const auto a = sample_parameters(spec);
    const auto b = sample_parameters(spec);
    REQUIRE(a.size() == 50);
    for (int i = 0; i < 50; ++i) REQUIRE((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("log-uniform median converges to the geometric mean") {
    const SamplingSpec spec = default_sampling(box, 10000, 7);
    const auto samples = sample_parameters(spec);
    std::vector<double> firsts;
    for (const auto& mu : samples) firsts.push_back(mu[0]);
    std::sort(firsts.begin(), firsts.end());
    REQUIRE(firsts[firsts.size() / 2] == Approx(1.0).epsilon(0.10));
  }
  SECTION("uniform mean within the 3-sigma bound") {
    const SamplingSpec spec = default_sampling(box, 10000, 11);
    const auto samples = sample_parameters(spec);
    double mean = 0.0;
    for (const auto& mu : samples) mean += mu[1];
    mean /= samples.size();
    REQUIRE(std::abs(mean) <= 3.0 * (2.0 / std::sqrt(12.0)) / 100.0);
  }
  SECTION("log-uniform requires positive bounds") {
    SamplingSpec spec = default_sampling(box, 10, 1);
    spec.dist[1] = Dist::LogUniform;
    REQUIRE_THROWS_AS(sample_parameters(spec), InvalidArgument);
  }
  SECTION("all samples stay in the box") {
    const SamplingSpec spec = default_sampling(box, 500, 29);
    for (const auto& mu : sample_parameters(spec)) REQUIRE(box.contains(mu));
  }
}

TEST_CASE("run_validation") {
  const SeparableProblem pb = make_thermal_block(4, 4, 1.0);
  const WGram gram(pb);
  const HifiSolver hifi(pb);

  // small trained model
  GreedyConfig config;
  config.train_spec = default_sampling(pb.coeffs.box, 40, 31);
  config.train = sample_parameters(config.train_spec);
  config.eps_tol = 1e-12;
  config.max_rounds = 3;
  const GreedyResult trained = run_greedy(pb, gram, config);

  const SamplingSpec vspec = default_sampling(pb.coeffs.box, 6, 4242);
  const std::vector<Vec> validation = sample_parameters(vspec);
  const ValidationReport report =
      run_validation(pb, gram, hifi, trained.model, trained.estimator, trained.basis,
                     validation);

  SECTION("rows and the guarantee chain") {
    REQUIRE(report.rows.size() == validation.size());
    REQUIRE(report.chain_ok(1e-8));
    for (const auto& row : report.rows) {
      REQUIRE(row.eff_star >= 1.0 - 1e-6);
      REQUIRE(row.eff_c >= 1.0 - 1e-6);
    }
  }
  SECTION("aggregates are exact over rows") {
    double mean = 0.0, max = 0.0;
    for (const auto& row : report.rows) {
      mean += row.eps_abs;
      max = std::max(max, row.eps_abs);
    }
    mean /= report.rows.size();
    REQUIRE(report.mean_eps_abs == Approx(mean).epsilon(1e-14));
    REQUIRE(report.max_eps_abs == max);
  }
  SECTION("near-reproduction for a validation parameter inside the archive") {
    // untruncated basis: L2 = L1 keeps L equal to |Z|, so every archive
    // snapshot lies in span(B_W)
    GreedyConfig untruncated = config;
    untruncated.L1 = 2;
    untruncated.L2 = 2;
    untruncated.max_rounds = 2;
    const GreedyResult t2 = run_greedy(pb, gram, untruncated);
    REQUIRE(t2.basis.L() == static_cast<int>(t2.state.archive.size()));
    // mu_1 sits near mu_bar, where the reduced saddle is closest to a plain
    // Galerkin method; reproduction is still not exact (the load's lift lies
    // outside span(B_Q)), only small against the snapshot's data norm
    const Snapshot& snap = t2.state.archive[0];
    const ValidationReport r2 = run_validation(pb, gram, hifi, t2.model, t2.estimator,
                                               t2.basis, {snap.mu});
    const double data_norm = gram.norm(snap.y, snap.p_hat);
    REQUIRE(r2.rows[0].eps_abs <= 0.05 * data_norm);
  }
  SECTION("csv emission carries the versioned schema") {
    std::stringstream ss;
    write_validation_csv(report, ss);
    std::string line;
    std::getline(ss, line);
    REQUIRE(line == "# strb-validation-v1");
    std::getline(ss, line);
    REQUIRE(line.find("eta_star_abs,eta_c_abs,eps_abs") != std::string::npos);
    int rows = 0;
    while (std::getline(ss, line))
      if (!line.empty()) ++rows;
    REQUIRE(rows == static_cast<int>(report.rows.size()));
  }
  SECTION("parallel rows match the serial result") {
    const ValidationReport parallel =
        run_validation(pb, gram, hifi, trained.model, trained.estimator, trained.basis,
                       validation, 2);
    for (size_t i = 0; i < report.rows.size(); ++i) {
      REQUIRE(parallel.rows[i].eps_abs == report.rows[i].eps_abs);
      REQUIRE(parallel.rows[i].eta_c_abs == report.rows[i].eta_c_abs);
    }
  }
}

TEST_CASE("decay csv bookkeeping") {
  std::vector<DecayPoint> points = {{1, 0.5, 2.0, 3.0}, {2, 0.1, 2.1, 3.1}};
  std::stringstream ss;
  write_decay_csv(points, ss);
  std::string line;
  std::getline(ss, line);
  REQUIRE(line == "# strb-decay-v1");
  std::getline(ss, line);
  REQUIRE(line == "L,mean_eps_abs,mean_eff_star,mean_eff_c");
  std::getline(ss, line);
  REQUIRE(line.substr(0, 2) == "1,");
}
