// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "strb/common.hpp"
#include "strb/estimators.hpp"
#include "strb/greedy.hpp"
#include "strb/hifi.hpp"
#include "strb/problem.hpp"
#include "strb/rb_core.hpp"

namespace strb {

using Json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "array files are little-endian; big-endian hosts are unsupported");

/// File layout: magic line, one JSON header line (with an "arrays" table of
/// name/rows/cols records), then the raw column-major float64 payload in
/// table order.
inline constexpr const char* kArrayMagic = "STRB1";

struct NamedArray {
  std::string name;
  Mat data;  // vectors are rows x 1
};

inline void write_array_file(const std::filesystem::path& path, Json header,
                             const std::vector<NamedArray>& arrays) {
  Json table = Json::array();
  for (const auto& a : arrays)
    table.push_back({{"name", a.name}, {"rows", a.data.rows()}, {"cols", a.data.cols()}});
  header["arrays"] = std::move(table);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << kArrayMagic << "\n" << header.dump() << "\n";
  for (const auto& a : arrays)
    os.write(reinterpret_cast<const char*>(a.data.data()),
             static_cast<std::streamsize>(sizeof(double) * a.data.size()));
  if (!os) throw IoError("short write to '" + path.string() + "'");
}

struct ArrayFile {
  Json header;
  std::map<std::string, Mat> arrays;

  const Mat& matrix(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw IoError("array '" + name + "' missing from file");
    return it->second;
  }
  Vec vector(const std::string& name) const {
    const Mat& m = matrix(name);
    if (m.cols() != 1) throw IoError("array '" + name + "' is not a vector");
    return m.col(0);
  }
};

inline ArrayFile read_array_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::string magic, header_line;
  std::getline(is, magic);
  if (magic != kArrayMagic)
    throw IoError("'" + path.string() + "' is not a strb array file");
  std::getline(is, header_line);
  ArrayFile file;
  try {
    file.header = Json::parse(header_line);
  } catch (const Json::exception& e) {
    throw IoError("corrupt header in '" + path.string() + "': " + e.what());
  }
  for (const auto& entry : file.header.at("arrays")) {
    const std::string name = entry.at("name").get<std::string>();
    const Index rows = entry.at("rows").get<Index>();
    const Index cols = entry.at("cols").get<Index>();
    if (rows < 0 || cols < 0) throw IoError("negative array extent in header");
    Mat m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!is)
      throw IoError("'" + path.string() + "' is truncated (array '" + name + "')");
    file.arrays.emplace(name, std::move(m));
  }
  // trailing garbage also counts as corruption
  char extra;
  if (is.read(&extra, 1))
    throw IoError("'" + path.string() + "' has trailing bytes after the payload");
  return file;
}

inline Json to_json(const ProblemSpec& spec) {
  return Json{{"kind", spec.kind},
              {"vertices_per_side", spec.vertices_per_side},
              {"time_elements", spec.time_elements},
              {"final_time", spec.final_time},
              {"diffusivity_min", spec.diffusivity_min},
              {"diffusivity_max", spec.diffusivity_max},
              {"load_min", spec.load_min},
              {"load_max", spec.load_max}};
}

inline ProblemSpec problem_spec_from_json(const Json& j) {
  ProblemSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  spec.vertices_per_side = j.at("vertices_per_side").get<int>();
  spec.time_elements = j.at("time_elements").get<int>();
  spec.final_time = j.at("final_time").get<double>();
  spec.diffusivity_min = j.at("diffusivity_min").get<double>();
  spec.diffusivity_max = j.at("diffusivity_max").get<double>();
  spec.load_min = j.at("load_min").get<double>();
  spec.load_max = j.at("load_max").get<double>();
  return spec;
}

inline void save_snapshot(const std::filesystem::path& path, const Snapshot& snap,
                          double tol) {
  Json header{{"kind", "snapshot"},
              {"residual", snap.residual},
              {"tol", tol}};
  write_array_file(path, std::move(header),
                   {{"mu", snap.mu}, {"y", snap.y}, {"p", snap.p}, {"p_hat", snap.p_hat}});
}

inline Snapshot load_snapshot(const std::filesystem::path& path) {
  const ArrayFile file = read_array_file(path);
  if (file.header.value("kind", "") != "snapshot")
    throw IoError("'" + path.string() + "' is not a snapshot file");
  Snapshot snap;
  snap.mu = file.vector("mu");
  snap.y = file.vector("y");
  snap.p = file.vector("p");
  snap.p_hat = file.vector("p_hat");
  snap.residual = file.header.value("residual", 0.0);
  return snap;
}

/// The online-sufficient model file: reduced affine parts, reduced Gram, the
/// estimator Gram with its index maps, and the problem metadata needed to
/// rebuild the coefficient functions.
inline void save_model(const std::filesystem::path& path, const ReducedModel& model,
                       const EstimatorOffline& est) {
  Json header{{"kind", "reduced_model"},
              {"L", model.L},
              {"Q_S", model.Q_S()},
              {"Q_s", model.Q_s()},
              {"Q_frak_S", est.Q_frak_S},
              {"Q_frak_s", est.Q_frak_s},
              {"problem", to_json(model.spec)}};
  std::vector<NamedArray> arrays;
  for (int q = 0; q < model.Q_S(); ++q)
    arrays.push_back({"S_" + std::to_string(q), model.S_parts[q]});
  for (int q = 0; q < model.Q_s(); ++q)
    arrays.push_back({"s_" + std::to_string(q), model.s_parts[q]});
  arrays.push_back({"G_rb", model.G_rb});
  arrays.push_back({"G_est", est.G});
  write_array_file(path, std::move(header), arrays);
}

struct LoadedModel {
  ReducedModel model;
  EstimatorOffline estimator;
};

inline LoadedModel load_model(const std::filesystem::path& path) {
  const ArrayFile file = read_array_file(path);
  if (file.header.value("kind", "") != "reduced_model")
    throw IoError("'" + path.string() + "' is not a reduced model file");
  LoadedModel out;
  out.model.spec = problem_spec_from_json(file.header.at("problem"));
  out.model.coeffs = make_affine_coefficients(out.model.spec);
  out.model.L = file.header.at("L").get<int>();
  const int q_S = file.header.at("Q_S").get<int>();
  const int q_s = file.header.at("Q_s").get<int>();
  for (int q = 0; q < q_S; ++q)
    out.model.S_parts.push_back(file.matrix("S_" + std::to_string(q)));
  for (int q = 0; q < q_s; ++q)
    out.model.s_parts.push_back(file.vector("s_" + std::to_string(q)));
  out.model.G_rb = file.matrix("G_rb");

  EstimatorOffline& est = out.estimator;
  est.L = out.model.L;
  est.Q_frak_S = file.header.at("Q_frak_S").get<int>();
  est.Q_frak_s = file.header.at("Q_frak_s").get<int>();
  est.G = file.matrix("G_est");
  const auto& c = out.model.coeffs;
  for (int j = 0; j < c.Q_y(); ++j)
    for (int i = 0; i < c.Q_A(); ++i) est.s_map.push_back({0, i, j});
  for (int j = 0; j < c.Q_f(); ++j)
    for (int i = 0; i < c.Q_A(); ++i) est.s_map.push_back({1, i, j});
  for (int i = 0; i < c.Q_f(); ++i) est.s_map.push_back({2, i, 0});
  est.S_map.push_back({0, 0, 0});
  for (int j = 0; j < c.Q_A(); ++j)
    for (int i = 0; i < c.Q_A(); ++i) est.S_map.push_back({1, i, j});
  for (int i = 0; i < c.Q_A(); ++i) est.S_map.push_back({2, i, 0});
  if (static_cast<int>(est.s_map.size()) != est.Q_frak_s ||
      static_cast<int>(est.S_map.size()) != est.Q_frak_S)
    throw IoError("estimator table sizes in '" + path.string() +
                  "' do not match the problem's affine structure");
  if (est.G.rows() != est.dim() || est.G.cols() != est.dim())
    throw IoError("estimator Gram in '" + path.string() + "' has the wrong size");
  return out;
}

inline void save_basis(const std::filesystem::path& path, const ReducedBasis& basis) {
  Json header{{"kind", "basis"}, {"L", basis.L()}};
  write_array_file(path, std::move(header), {{"B_W", basis.B_W}, {"B_Q", basis.B_Q}});
}

inline ReducedBasis load_basis(const std::filesystem::path& path) {
  const ArrayFile file = read_array_file(path);
  if (file.header.value("kind", "") != "basis")
    throw IoError("'" + path.string() + "' is not a basis file");
  ReducedBasis basis;
  basis.B_W = file.matrix("B_W");
  basis.B_Q = file.matrix("B_Q");
  if (basis.B_W.cols() != basis.B_Q.cols())
    throw IoError("basis file '" + path.string() + "' has mismatched column counts");
  return basis;
}

/// Greedy state checkpoints are pure JSON; the snapshot archive lives in
/// separate array files referenced by count.
inline void save_greedy_state(const std::filesystem::path& path, const GreedyState& state,
                              const SamplingSpec& train_spec) {
  Json j{{"kind", "greedy_state"},
         {"L", state.L},
         {"num_snapshots", state.archive.size()},
         {"remaining", state.remaining},
         {"selected", state.selected}};
  Json hist = Json::array();
  for (const auto& r : state.history) {
    Json selected = Json::array();
    for (const auto& mu : r.selected)
      selected.push_back(std::vector<double>(mu.data(), mu.data() + mu.size()));
    hist.push_back({{"round", r.round},
                    {"L", r.L},
                    {"max_estimator", r.max_estimator},
                    {"selected", std::move(selected)},
                    {"seconds", r.seconds}});
  }
  j["history"] = std::move(hist);
  j["train"] = {{"count", train_spec.count}, {"seed", train_spec.seed}};
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << j.dump(2) << "\n";
  if (!os) throw IoError("short write to '" + path.string() + "'");
}

struct LoadedGreedyState {
  GreedyState state;  // archive filled by the caller from the snapshot files
  int train_count = 0;
  std::uint64_t train_seed = 0;
  size_t num_snapshots = 0;
};

inline LoadedGreedyState load_greedy_state(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  Json j;
  try {
    is >> j;
  } catch (const Json::exception& e) {
    throw IoError("corrupt greedy state '" + path.string() + "': " + e.what());
  }
  if (j.value("kind", "") != "greedy_state")
    throw IoError("'" + path.string() + "' is not a greedy state file");
  LoadedGreedyState out;
  out.state.L = j.at("L").get<int>();
  out.state.remaining = j.at("remaining").get<std::vector<int>>();
  out.state.selected = j.at("selected").get<std::vector<int>>();
  out.num_snapshots = j.at("num_snapshots").get<size_t>();
  for (const auto& r : j.at("history")) {
    GreedyRound round;
    round.round = r.at("round").get<int>();
    round.L = r.at("L").get<int>();
    round.max_estimator = r.at("max_estimator").get<double>();
    round.seconds = r.at("seconds").get<double>();
    for (const auto& mu : r.at("selected")) {
      const auto values = mu.get<std::vector<double>>();
      round.selected.push_back(Eigen::Map<const Vec>(values.data(), values.size()));
    }
    out.state.history.push_back(std::move(round));
  }
  out.train_count = j.at("train").at("count").get<int>();
  out.train_seed = j.at("train").at("seed").get<std::uint64_t>();
  return out;
}

}  // namespace strb
