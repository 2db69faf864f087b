// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <limits>
#include <ostream>
#include <vector>

#include "strb/common.hpp"
#include "strb/estimators.hpp"
#include "strb/greedy.hpp"
#include "strb/hifi.hpp"
#include "strb/parallel.hpp"
#include "strb/rb_core.hpp"
#include "strb/wspace.hpp"

namespace strb {

struct ValidationRow {
  Vec mu;
  double eps_abs = 0.0, eps_rel = 0.0;
  double eta_star_abs = 0.0, eta_star_rel = 0.0;
  double eta_c_abs = 0.0, eta_c_rel = 0.0;
  bool certified_rel = false;  // of the eta_c relative bound
  double eff_star = 0.0, eff_c = 0.0;
  double t_hifi = 0.0, t_online = 0.0;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  int L = 0;
  double mean_eps_abs = 0.0, median_eps_abs = 0.0, max_eps_abs = 0.0;
  double mean_eff_star = 0.0, median_eff_star = 0.0, max_eff_star = 0.0;
  double mean_eff_c = 0.0, median_eff_c = 0.0, max_eff_c = 0.0;
  double t_hifi_total = 0.0, t_online_total = 0.0;

  /// epsilon <= eta_star <= eta_c on every row, within relative slack.
  bool chain_ok(double slack = 1e-8) const {
    for (const auto& r : rows) {
      const double s1 = slack * std::max({r.eps_abs, r.eta_star_abs, 1e-300});
      const double s2 = slack * std::max({r.eta_star_abs, r.eta_c_abs, 1e-300});
      if (r.eps_abs > r.eta_star_abs + s1) return false;
      if (r.eta_star_abs > r.eta_c_abs + s2) return false;
    }
    return true;
  }
};

namespace detail {

inline double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline void finalize_report(ValidationReport& report) {
  std::vector<double> eps, eff_s, eff_c;
  report.t_hifi_total = report.t_online_total = 0.0;
  for (const auto& r : report.rows) {
    eps.push_back(r.eps_abs);
    eff_s.push_back(r.eff_star);
    eff_c.push_back(r.eff_c);
    report.t_hifi_total += r.t_hifi;
    report.t_online_total += r.t_online;
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / v.size();
  };
  const auto max = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
  };
  report.mean_eps_abs = mean(eps);
  report.median_eps_abs = median_of(eps);
  report.max_eps_abs = max(eps);
  report.mean_eff_star = mean(eff_s);
  report.median_eff_star = median_of(eff_s);
  report.max_eff_star = max(eff_s);
  report.mean_eff_c = mean(eff_c);
  report.median_eff_c = median_of(eff_c);
  report.max_eff_c = max(eff_c);
}

}  // namespace detail

/// Per-parameter comparison of both estimators against the true error. The
/// high-fidelity snapshots can be passed in to reuse them across basis sizes;
/// when absent they are solved here.
inline ValidationReport run_validation(const SeparableProblem& pb, const WGram& gram,
                                       const HifiSolver& hifi, const ReducedModel& model,
                                       const EstimatorOffline& est, const ReducedBasis& basis,
                                       const std::vector<Vec>& validation_set,
                                       int threads = 0,
                                       const std::vector<Snapshot>* snapshots = nullptr) {
  using clock = std::chrono::steady_clock;
  if (snapshots)
    require(snapshots->size() == validation_set.size(),
            "validation snapshots do not match the validation set");
  ValidationReport report;
  report.L = model.L;
  report.rows.resize(validation_set.size());
  parallel_for(static_cast<int>(validation_set.size()), threads, [&](int i) {
    ValidationRow row;
    row.mu = validation_set[i];

    Snapshot local;
    const Snapshot* snap = nullptr;
    if (snapshots) {
      snap = &(*snapshots)[i];
    } else {
      const auto t0 = clock::now();
      local = hifi.solve(row.mu);
      row.t_hifi = std::chrono::duration<double>(clock::now() - t0).count();
      snap = &local;
    }

    const auto t1 = clock::now();
    const OnlineSolution sol = solve_online(model, row.mu);
    const EtaResult ec = eta_c(model, est, row.mu, sol.u_y, sol.y_rb_norm);
    row.t_online = std::chrono::duration<double>(clock::now() - t1).count();

    const Reconstruction recon = reconstruct(basis, sol.u_y, sol.u_p);
    const EtaResult es = eta_star(pb, gram, row.mu, recon.y, sol.y_rb_norm);
    const TrueError err = true_error(gram, *snap, recon);

    row.eps_abs = err.abs;
    row.eps_rel = err.rel;
    row.eta_star_abs = es.abs;
    row.eta_star_rel = es.rel;
    row.eta_c_abs = ec.abs;
    row.eta_c_rel = ec.rel;
    row.certified_rel = ec.certified;
    row.eff_star = err.abs > 0 ? es.abs / err.abs : std::numeric_limits<double>::infinity();
    row.eff_c = err.abs > 0 ? ec.abs / err.abs : std::numeric_limits<double>::infinity();
    report.rows[i] = std::move(row);
  });
  detail::finalize_report(report);
  return report;
}

/// CSV schema documented in the README; `# strb-validation-v1` header line.
inline void write_validation_csv(const ValidationReport& report, std::ostream& os) {
  os << "# strb-validation-v1\n";
  const int dim = report.rows.empty() ? 0 : static_cast<int>(report.rows[0].mu.size());
  for (int i = 0; i < dim; ++i) os << "mu" << i + 1 << ",";
  os << "eta_star_abs,eta_c_abs,eps_abs,eff_star,eff_c,certified_rel\n";
  os.precision(16);
  for (const auto& r : report.rows) {
    for (int i = 0; i < dim; ++i) os << r.mu[i] << ",";
    os << r.eta_star_abs << "," << r.eta_c_abs << "," << r.eps_abs << "," << r.eff_star
       << "," << r.eff_c << "," << (r.certified_rel ? 1 : 0) << "\n";
  }
}

struct DecayPoint {
  int L = 0;
  double mean_eps_abs = 0.0;
  double mean_eff_star = 0.0;
  double mean_eff_c = 0.0;
};

inline void write_decay_csv(const std::vector<DecayPoint>& points, std::ostream& os) {
  os << "# strb-decay-v1\n";
  os << "L,mean_eps_abs,mean_eff_star,mean_eff_c\n";
  os.precision(16);
  for (const auto& p : points)
    os << p.L << "," << p.mean_eps_abs << "," << p.mean_eff_star << "," << p.mean_eff_c
       << "\n";
}

}  // namespace strb
