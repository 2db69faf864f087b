// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: offline POD-greedy training, hifi-free online
// queries, validation against the high-fidelity solver, and mesh export.
// Exit codes: 0 success, 2 configuration error, 3 I/O or file integrity
// error, 4 certification violation.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "strb/strb.hpp"

namespace fs = std::filesystem;
using namespace strb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitCertification = 4;

struct CommonFlags {
  std::string config_path;
  std::string profile = "desk";
  std::string out_dir = "strb_out";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> threads;
  std::optional<std::string> estimator;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "configuration file (key = value lines)");
  cmd->add_option("--profile", flags.profile, "problem size profile: desk | paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "override the training-set seed");
  cmd->add_option("--tol", flags.tol, "override the hifi solver tolerance");
  cmd->add_option("--threads", flags.threads, "worker threads (0 = hardware)");
  cmd->add_option("--estimator", flags.estimator,
                  "selection estimator: eta_c_abs | eta_c_rel | eta_star_abs | eta_star_rel");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = profile_defaults(flags.profile);
  if (!flags.config_path.empty()) {
    ConfigMap map = ConfigMap::parse_file(flags.config_path);
    cfg = apply_config(cfg, map);
  }
  if (flags.seed) cfg.train_seed = *flags.seed;
  if (flags.tol) cfg.solver_tol = *flags.tol;
  if (flags.threads) cfg.threads = *flags.threads;
  if (flags.estimator) cfg.selection = estimator_kind_from_string(*flags.estimator);
  return cfg;
}

std::vector<Vec> training_set(const RunConfig& cfg, SamplingSpec& spec_out) {
  AffineCoefficients coeffs = make_affine_coefficients(cfg.problem);
  spec_out = default_sampling(coeffs.box, cfg.train_size, cfg.train_seed);
  return sample_parameters(spec_out);
}

void write_training_log(const fs::path& path, const GreedyState& state) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "# strb-training-v1\n";
  os << "round,L,max_estimator,seconds,selected\n";
  os.precision(16);
  for (const auto& r : state.history) {
    os << r.round << "," << r.L << "," << r.max_estimator << "," << r.seconds << ",";
    for (size_t s = 0; s < r.selected.size(); ++s) {
      if (s) os << " | ";
      for (Index i = 0; i < r.selected[s].size(); ++i) {
        if (i) os << " ";
        os << r.selected[s][i];
      }
    }
    os << "\n";
  }
}

int cmd_offline(const CommonFlags& flags, bool resume) {
  RunConfig cfg = resolve_config(flags);
  const fs::path out(flags.out_dir);
  fs::create_directories(out / "snapshots");
  fs::create_directories(out / "checkpoints");

  std::cout << "building " << cfg.problem.kind << ": " << cfg.problem.vertices_per_side
            << "^2 vertices, " << cfg.problem.time_elements << " time elements, T = "
            << cfg.problem.final_time << "\n";
  SeparableProblem pb = make_problem(cfg.problem);
  std::cout << "vertices " << pb.smat.num_vertices << " (free " << pb.N()
            << "), M = " << pb.M() << ", P = " << pb.P()
            << ", saddle dim = " << pb.w_dim() + pb.q_dim() << "\n";
  WGram gram(pb);

  GreedyConfig gc;
  gc.train = training_set(cfg, gc.train_spec);
  gc.eps_tol = cfg.eps_tol;
  gc.L1 = cfg.L1;
  gc.L2 = cfg.L2;
  gc.max_rounds = cfg.max_rounds();
  gc.selection = cfg.selection;
  gc.certification = cfg.certification;
  gc.solver = cfg.saddle_options();
  gc.threads = cfg.threads;
  gc.problem_spec = cfg.problem;
  gc.log = [](const std::string& s) { std::cout << s << "\n"; };

  std::optional<GreedyState> warm;
  if (resume) {
    const fs::path state_path = out / "greedy_state.json";
    LoadedGreedyState loaded = load_greedy_state(state_path);
    if (loaded.train_count != cfg.train_size || loaded.train_seed != cfg.train_seed)
      throw ConfigError("checkpoint was trained with a different training set "
                        "(count/seed mismatch)");
    for (size_t i = 0; i < loaded.num_snapshots; ++i)
      loaded.state.archive.push_back(
          load_snapshot(out / "snapshots" / ("snap_" + std::to_string(i) + ".strb")));
    warm = std::move(loaded.state);
  }

  size_t saved_snapshots = warm ? warm->archive.size() : 0;
  const auto checkpoint = [&](const GreedyResult& r) {
    for (size_t i = saved_snapshots; i < r.state.archive.size(); ++i)
      save_snapshot(out / "snapshots" / ("snap_" + std::to_string(i) + ".strb"),
                    r.state.archive[i], cfg.solver_tol);
    saved_snapshots = r.state.archive.size();
    const std::string round = std::to_string(r.state.history.back().round);
    save_model(out / "checkpoints" / ("round_" + round + "_model.strb"), r.model,
               r.estimator);
    save_basis(out / "checkpoints" / ("round_" + round + "_basis.strb"), r.basis);
    save_greedy_state(out / "greedy_state.json", r.state, gc.train_spec);
  };

  GreedyResult result = run_greedy(pb, gram, gc, checkpoint, std::move(warm));

  save_model(out / "model.strb", result.model, result.estimator);
  save_basis(out / "basis.strb", result.basis);
  save_greedy_state(out / "greedy_state.json", result.state, gc.train_spec);
  write_training_log(out / "training_log.csv", result.state);
  std::cout << "offline phase done: L = " << result.basis.L() << ", snapshots = "
            << result.state.archive.size() << ", outputs in " << out << "\n";
  return kExitOk;
}

std::vector<Vec> parse_mu_args(const std::vector<std::string>& mu_args,
                               const std::string& mu_file, int dim) {
  std::vector<Vec> mus;
  for (const auto& arg : mu_args) {
    std::stringstream ss(arg);
    std::vector<double> values;
    double v;
    while (ss >> v) {
      values.push_back(v);
      if (ss.peek() == ',' || ss.peek() == ';') ss.ignore();
    }
    if (static_cast<int>(values.size()) != dim)
      throw ConfigError("--mu needs " + std::to_string(dim) + " components, got " +
                        std::to_string(values.size()));
    mus.push_back(Eigen::Map<const Vec>(values.data(), values.size()));
  }
  if (!mu_file.empty()) {
    std::ifstream is(mu_file);
    if (!is) throw IoError("cannot open parameter file '" + mu_file + "'");
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      for (char& c : line)
        if (c == ',' || c == ';') c = ' ';
      std::stringstream ss(line);
      std::vector<double> values;
      double v;
      while (ss >> v) values.push_back(v);
      if (values.empty()) continue;
      if (static_cast<int>(values.size()) != dim)
        throw ConfigError("parameter file row needs " + std::to_string(dim) +
                          " components, got " + std::to_string(values.size()));
      mus.push_back(Eigen::Map<const Vec>(values.data(), values.size()));
    }
  }
  if (mus.empty()) throw ConfigError("no parameters given; use --mu or --mu-file");
  return mus;
}

int cmd_online(const std::string& model_dir, const std::vector<std::string>& mu_args,
               const std::string& mu_file, const std::string& out_csv) {
  using clock = std::chrono::steady_clock;
  LoadedModel loaded = load_model(fs::path(model_dir) / "model.strb");
  const ReducedModel& model = loaded.model;
  const int dim = model.coeffs.box.dim();
  const std::vector<Vec> mus = parse_mu_args(mu_args, mu_file, dim);

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out_csv.empty()) {
    file.open(out_csv);
    if (!file) throw IoError("cannot write '" + out_csv + "'");
    os = &file;
  }
  (*os) << "# strb-online-v1\n";
  for (int i = 0; i < dim; ++i) (*os) << "mu" << i + 1 << ",";
  (*os) << "in_box,";
  for (int l = 0; l < model.L; ++l) (*os) << "u_y_" << l + 1 << ",";
  (*os) << "eta_c_abs,eta_c_rel,certified,seconds\n";
  os->precision(16);

  int warnings = 0;
  for (const Vec& mu : mus) {
    for (int i = 0; i < dim; ++i) (*os) << mu[i] << ",";
    if (!model.coeffs.box.contains(mu, 1e-12)) {
      ++warnings;
      (*os) << 0;
      for (int l = 0; l < model.L; ++l) (*os) << ",";
      (*os) << ",,,\n";
      continue;
    }
    const auto t0 = clock::now();
    const OnlineSolution sol = solve_online(model, mu);
    const EtaResult ec = eta_c(model, loaded.estimator, mu, sol.u_y, sol.y_rb_norm);
    const double seconds = std::chrono::duration<double>(clock::now() - t0).count();
    (*os) << 1 << ",";
    for (int l = 0; l < model.L; ++l) (*os) << sol.u_y[l] << ",";
    (*os) << ec.abs << "," << ec.rel << "," << (ec.certified ? 1 : 0) << "," << seconds
          << "\n";
  }
  if (warnings > 0)
    std::cerr << "warning: " << warnings
              << " parameter(s) outside the admissible box were flagged, not solved\n";
  return kExitOk;
}

int cmd_validate(const CommonFlags& flags, const std::string& model_dir, bool decay,
                 double alpha_lb_scale) {
  RunConfig cfg = resolve_config(flags);
  const fs::path dir(model_dir.empty() ? flags.out_dir : model_dir);
  LoadedModel loaded = load_model(dir / "model.strb");
  ReducedBasis basis = load_basis(dir / "basis.strb");
  if (basis.L() != loaded.model.L)
    throw IoError("basis and model disagree on L");

  // The stored problem definition wins over profile defaults.
  SeparableProblem pb = make_problem(loaded.model.spec);
  if (basis.B_W.rows() != pb.w_dim())
    throw IoError("basis dimensions do not match the stored problem");
  WGram gram(pb);
  HifiSolver hifi(pb, cfg.saddle_options());

  const SamplingSpec vspec =
      default_sampling(pb.coeffs.box, cfg.validation_size, cfg.validation_seed);
  const std::vector<Vec> validation = sample_parameters(vspec);

  const auto inject = [&](ValidationReport& report) {
    if (alpha_lb_scale == 1.0) return;
    // Fault-injection hook for tests: an inflated alpha_LB shrinks the
    // estimators and must be caught by the guarantee check below.
    for (auto& r : report.rows) {
      r.eta_star_abs /= alpha_lb_scale;
      r.eta_star_rel /= alpha_lb_scale;
      r.eta_c_abs /= alpha_lb_scale;
      r.eta_c_rel /= alpha_lb_scale;
      r.eff_star /= alpha_lb_scale;
      r.eff_c /= alpha_lb_scale;
    }
    detail::finalize_report(report);
  };

  ValidationReport report = run_validation(pb, gram, hifi, loaded.model,
                                           loaded.estimator, basis, validation,
                                           cfg.threads);
  inject(report);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "validation.csv");
    if (!os) throw IoError("cannot write validation.csv");
    write_validation_csv(report, os);
  }
  std::cout << "validation: L = " << report.L << ", mean eps_abs = "
            << report.mean_eps_abs << ", median eff(eta_star) = "
            << report.median_eff_star << ", median eff(eta_c) = " << report.median_eff_c
            << "\n";

  if (decay) {
    // Reuse the hifi snapshots across all checkpointed bases.
    std::vector<Snapshot> snaps;
    for (const Vec& mu : validation) snaps.push_back(hifi.solve(mu));
    std::vector<DecayPoint> points;
    for (int round = 0;; ++round) {
      const fs::path m = dir / "checkpoints" / ("round_" + std::to_string(round) + "_model.strb");
      const fs::path b = dir / "checkpoints" / ("round_" + std::to_string(round) + "_basis.strb");
      if (!fs::exists(m) || !fs::exists(b)) {
        if (round == 0) std::cerr << "warning: no checkpoints found, decay.csv skipped\n";
        break;
      }
      LoadedModel lm = load_model(m);
      ReducedBasis lb = load_basis(b);
      ValidationReport r = run_validation(pb, gram, hifi, lm.model, lm.estimator, lb,
                                          validation, cfg.threads, &snaps);
      inject(r);
      points.push_back({r.L, r.mean_eps_abs, r.mean_eff_star, r.mean_eff_c});
    }
    if (!points.empty()) {
      std::ofstream os(dir / "decay.csv");
      if (!os) throw IoError("cannot write decay.csv");
      write_decay_csv(points, os);
    }
  }

  if (!report.chain_ok(1e-8)) {
    std::cerr << "certification violation: a validation row breaks "
                 "eps_abs <= eta_star_abs <= eta_c_abs beyond tolerance\n";
    return kExitCertification;
  }
  return kExitOk;
}

int cmd_mesh_export(int vertices_per_side, const std::string& out_path) {
  const SpaceMesh mesh = build_thermal_block_mesh(vertices_per_side);
  std::ofstream os(out_path);
  if (!os) throw IoError("cannot write '" + out_path + "'");
  write_mesh_text(mesh, os);
  std::cout << "wrote " << mesh.num_vertices() << " vertices, " << mesh.num_triangles()
            << " triangles to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strb: certified space-time reduced basis solver for "
               "parametrized parabolic problems"};
  app.require_subcommand(1);

  CommonFlags offline_flags;
  bool resume = false;
  CLI::App* offline = app.add_subcommand("offline", "POD-greedy training");
  add_common(offline, offline_flags);
  offline->add_flag("--resume", resume, "continue from greedy_state.json in --out");

  std::string online_model_dir = "strb_out";
  std::vector<std::string> online_mus;
  std::string online_mu_file, online_out;
  CLI::App* online = app.add_subcommand("online", "reduced solves + estimators; "
                                                  "no high-fidelity assembly");
  online->add_option("--model", online_model_dir, "directory holding model.strb");
  online->add_option("--mu", online_mus, "parameter as comma-separated components");
  online->add_option("--mu-file", online_mu_file, "file with one parameter per line");
  online->add_option("--out-csv", online_out, "write rows to a file instead of stdout");

  CommonFlags validate_flags;
  std::string validate_model_dir;
  bool decay = false;
  double alpha_lb_scale = 1.0;
  CLI::App* validate = app.add_subcommand("validate", "estimators vs true errors "
                                                      "on a fresh validation set");
  add_common(validate, validate_flags);
  validate->add_option("--model", validate_model_dir, "directory holding model.strb "
                                                      "and basis.strb (default --out)");
  validate->add_flag("--decay", decay, "also sweep the checkpointed bases into decay.csv");
  validate->add_option("--alpha-lb-scale", alpha_lb_scale)->group("");  // test hook

  int mesh_n = 13;
  std::string mesh_out = "mesh.txt";
  CLI::App* mesh = app.add_subcommand("mesh-export", "write the thermal-block mesh "
                                                     "as line-oriented text");
  mesh->add_option("--vertices-per-side", mesh_n, "vertices per side (n-1 divisible by 3)");
  mesh->add_option("--out-file", mesh_out, "output path");

  try {
    app.parse(argc, argv);
    if (offline->parsed()) return cmd_offline(offline_flags, resume);
    if (online->parsed())
      return cmd_online(online_model_dir, online_mus, online_mu_file, online_out);
    if (validate->parsed())
      return cmd_validate(validate_flags, validate_model_dir, decay, alpha_lb_scale);
    if (mesh->parsed()) return cmd_mesh_export(mesh_n, mesh_out);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
