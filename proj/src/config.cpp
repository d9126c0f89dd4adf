#include "secest/config.hpp"

#include "secest/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace secest {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// 1-based line of the first occurrence of "key" in the source, 0 if absent.
int line_of(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& why) const {
    const auto dot = path.rfind('.');
    const std::string leaf = dot == std::string::npos ? path : path.substr(dot + 1);
    const int line = line_of(text_, leaf);
    std::ostringstream os;
    os << "config";
    if (line > 0) os << ":" << line;
    os << ": field '" << path << "' " << why;
    throw Error(ErrorKind::kConfig, os.str());
  }

  const json& block(const json& root, const std::string& name, bool required) const {
    static const json empty = json::object();
    if (!root.contains(name)) {
      if (required) fail(name, "is missing");
      return empty;
    }
    const json& b = root.at(name);
    if (!b.is_object()) fail(name, "must be an object");
    return b;
  }

  template <typename T>
  T get(const json& obj, const std::string& block, const std::string& key, T fallback) const {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    return as<T>(obj.at(key), block + "." + key);
  }

  template <typename T>
  T require(const json& obj, const std::string& block, const std::string& key) const {
    if (!obj.contains(key)) fail(block + "." + key, "is missing");
    return as<T>(obj.at(key), block + "." + key);
  }

  template <typename T>
  T as(const json& v, const std::string& path) const {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) fail(path, "must be a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) fail(path, "must be an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(path, "must be true or false");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(path, std::string("has the wrong type (") + e.what() + ")");
    }
  }

  // Accepts a scalar (1x1), a flat array (one row) or an array of rows.
  NestedRows matrix(const json& obj, const std::string& key) const {
    const std::string path = "model." + key;
    if (!obj.contains(key)) fail(path, "is missing");
    const json& v = obj.at(key);
    if (v.is_number()) return {{v.get<double>()}};
    if (!v.is_array() || v.empty()) fail(path, "must be a non-empty nested array of numbers");

    auto read_row = [&](const json& row) {
      if (!row.is_array() || row.empty()) fail(path, "rows must be non-empty arrays of numbers");
      std::vector<double> r;
      for (const auto& x : row) {
        if (!x.is_number()) fail(path, "entries must be numbers");
        r.push_back(x.get<double>());
      }
      return r;
    };
    if (v.front().is_number()) return {read_row(v)};

    NestedRows rows;
    for (const auto& row : v) {
      rows.push_back(read_row(row));
      if (rows.back().size() != rows.front().size()) fail(path, "rows have unequal lengths");
    }
    return rows;
  }

 private:
  const std::string& text_;
};

Matrix to_matrix(const NestedRows& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

const char* mode_name(SimMode m) { return m == SimMode::kFullKf ? "full_kf" : "indices"; }

}  // namespace

SystemModel to_system_model(const ModelBlock& block) {
  return SystemModel{to_matrix(block.A), to_matrix(block.C), to_matrix(block.Q), to_matrix(block.R)};
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorKind::kConfig, "config: top level must be an object");

  const Reader rd(text);
  RunConfig cfg;

  const json& model = rd.block(root, "model", true);
  cfg.model.A = rd.matrix(model, "A");
  cfg.model.C = rd.matrix(model, "C");
  cfg.model.Q = rd.matrix(model, "Q");
  cfg.model.R = rd.matrix(model, "R");

  const json& ch = rd.block(root, "channels", true);
  cfg.channels.lambda = rd.require<double>(ch, "channels", "lambda");
  cfg.channels.lambda_e = rd.require<double>(ch, "channels", "lambda_e");
  cfg.channels.lambda_v = rd.get<double>(ch, "channels", "lambda_v", 1.0);

  const json& solver = rd.block(root, "solver", false);
  cfg.solver.N = rd.get<int>(solver, "solver", "N", cfg.solver.N);
  if (solver.contains("tol") && !solver.at("tol").is_null()) {
    cfg.solver.tol = rd.as<double>(solver.at("tol"), "solver.tol");
  }
  if (solver.contains("t_bar") && !solver.at("t_bar").is_null()) {
    cfg.solver.t_bar = rd.as<int>(solver.at("t_bar"), "solver.t_bar");
  }
  if (solver.contains("b_lower") && !solver.at("b_lower").is_null()) {
    cfg.solver.b_lower = rd.as<double>(solver.at("b_lower"), "solver.b_lower");
  }
  cfg.solver.M_oracle = rd.get<int>(solver, "solver", "M_oracle", cfg.solver.M_oracle);
  cfg.solver.oracle_thresholds =
      rd.get<std::vector<int>>(solver, "solver", "oracle_thresholds", cfg.solver.oracle_thresholds);

  const json& sim = rd.block(root, "sim", false);
  cfg.sim.horizon = rd.get<std::int64_t>(sim, "sim", "horizon", cfg.sim.horizon);
  cfg.sim.seed = rd.get<std::uint64_t>(sim, "sim", "seed", cfg.sim.seed);
  cfg.sim.replications = rd.get<int>(sim, "sim", "replications", cfg.sim.replications);
  cfg.sim.burn_in = rd.get<int>(sim, "sim", "burn_in", cfg.sim.burn_in);
  const std::string mode = rd.get<std::string>(sim, "sim", "mode", mode_name(cfg.sim.mode));
  if (mode == "indices") {
    cfg.sim.mode = SimMode::kIndices;
  } else if (mode == "full_kf") {
    cfg.sim.mode = SimMode::kFullKf;
  } else {
    rd.fail("sim.mode", "must be \"indices\" or \"full_kf\"");
  }

  const json& sweep = rd.block(root, "sweep", false);
  cfg.sweep.b_lower = rd.get<std::vector<double>>(sweep, "sweep", "b_lower", {});
  cfg.sweep.N = rd.get<std::vector<int>>(sweep, "sweep", "N", {});
  cfg.sweep.simulate = rd.get<bool>(sweep, "sweep", "simulate", cfg.sweep.simulate);

  const json& output = rd.block(root, "output", false);
  cfg.output.dir = rd.get<std::string>(output, "output", "dir", cfg.output.dir);
  cfg.output.svg = rd.get<bool>(output, "output", "svg", cfg.output.svg);

  if (cfg.solver.N < 1) rd.fail("solver.N", "must be >= 1");
  if (cfg.solver.tol && !(*cfg.solver.tol > 0.0)) rd.fail("solver.tol", "must be positive");
  if (cfg.solver.t_bar && *cfg.solver.t_bar < 0) rd.fail("solver.t_bar", "must be >= 0");
  if (cfg.solver.b_lower && !(*cfg.solver.b_lower >= 0.0)) rd.fail("solver.b_lower", "must be >= 0");
  if (cfg.sim.horizon < 1) rd.fail("sim.horizon", "must be >= 1");
  if (cfg.sim.replications < 1) rd.fail("sim.replications", "must be >= 1");
  if (cfg.sim.burn_in < 0) rd.fail("sim.burn_in", "must be >= 0");

  try {
    validate(to_system_model(cfg.model));
    validate(cfg.channels);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  ordered_json root;
  root["model"]["A"] = c.model.A;
  root["model"]["C"] = c.model.C;
  root["model"]["Q"] = c.model.Q;
  root["model"]["R"] = c.model.R;
  root["channels"]["lambda"] = c.channels.lambda;
  root["channels"]["lambda_e"] = c.channels.lambda_e;
  root["channels"]["lambda_v"] = c.channels.lambda_v;
  root["solver"]["N"] = c.solver.N;
  root["solver"]["tol"] = c.solver.tol ? ordered_json(*c.solver.tol) : ordered_json(nullptr);
  root["solver"]["t_bar"] = c.solver.t_bar ? ordered_json(*c.solver.t_bar) : ordered_json(nullptr);
  root["solver"]["b_lower"] =
      c.solver.b_lower ? ordered_json(*c.solver.b_lower) : ordered_json(nullptr);
  root["solver"]["M_oracle"] = c.solver.M_oracle;
  root["solver"]["oracle_thresholds"] = c.solver.oracle_thresholds;
  root["sim"]["horizon"] = c.sim.horizon;
  root["sim"]["seed"] = c.sim.seed;
  root["sim"]["replications"] = c.sim.replications;
  root["sim"]["mode"] = mode_name(c.sim.mode);
  root["sim"]["burn_in"] = c.sim.burn_in;
  root["sweep"]["b_lower"] = c.sweep.b_lower;
  root["sweep"]["N"] = c.sweep.N;
  root["sweep"]["simulate"] = c.sweep.simulate;
  root["output"]["dir"] = c.output.dir;
  root["output"]["svg"] = c.output.svg;
  return root.dump(2) + "\n";
}

RunConfig reference_config() {
  RunConfig c;
  c.model.A = {{0.95, 0.85}, {0.0, 0.99}};
  c.model.C = {{1.0, 1.0}};
  c.model.Q = {{0.0425, 0.02}, {0.02, 0.0425}};
  c.model.R = {{0.01}};
  c.channels = ChannelModel{0.3, 0.3, 1.0};
  c.solver.N = 300;
  return c;
}

}  // namespace secest
