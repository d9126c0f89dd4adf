#include "secest/commands.hpp"
#include "secest/config.hpp"
#include "secest/eaves.hpp"
#include "secest/error.hpp"
#include "secest/legit.hpp"
#include "secest/model.hpp"
#include "secest/optimizer.hpp"
#include "secest/simulator.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace secest;

namespace {

SystemModel make_model(Matrix a, Matrix c, Matrix q, Matrix r) {
  SystemModel m{std::move(a), std::move(c), std::move(q), std::move(r)};
  validate(m);
  return m;
}

int ladder_depth(int horizon) { return std::max(horizon + 2, 256); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "secest core: steady-state covariances, stationary laws, threshold search";
  m.attr("__version__") = SECEST_VERSION;

  static py::exception<Error> exc(m, "SecestError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(exc, e.what());
    }
  });

  py::class_<ChannelModel>(m, "ChannelModel")
      .def(py::init<double, double, double>(), py::arg("lam") = 1.0, py::arg("lam_e") = 0.0,
           py::arg("lam_v") = 1.0)
      .def_readwrite("lam", &ChannelModel::lambda)
      .def_readwrite("lam_e", &ChannelModel::lambda_e)
      .def_readwrite("lam_v", &ChannelModel::lambda_v)
      .def("__repr__", [](const ChannelModel& c) {
        return "ChannelModel(lam=" + std::to_string(c.lambda) + ", lam_e=" +
               std::to_string(c.lambda_e) + ", lam_v=" + std::to_string(c.lambda_v) + ")";
      });

  py::class_<EavesBracket>(m, "EavesBracket")
      .def_readonly("lower", &EavesBracket::lower)
      .def_readonly("gap", &EavesBracket::gap)
      .def_readonly("horizon", &EavesBracket::horizon)
      .def_property_readonly("upper", &EavesBracket::upper);

  py::class_<ThresholdSolution>(m, "ThresholdSolution")
      .def_readonly("t_opt", &ThresholdSolution::t_opt)
      .def_readonly("b_lower", &ThresholdSolution::b_lower)
      .def_readonly("horizon", &ThresholdSolution::horizon)
      .def_readonly("lower_at_opt", &ThresholdSolution::lower_at_opt)
      .def_readonly("bracket_at_prev", &ThresholdSolution::bracket_at_prev)
      .def_readonly("certified_optimal", &ThresholdSolution::certified_optimal)
      .def_readonly("gap_upper", &ThresholdSolution::gap_upper)
      .def_readonly("trace", &ThresholdSolution::trace);

  py::class_<SimResult>(m, "SimResult")
      .def_readonly("avg_trace_legit", &SimResult::avg_trace_legit)
      .def_readonly("avg_trace_eaves", &SimResult::avg_trace_eaves)
      .def_readonly("stderr_legit", &SimResult::stderr_legit)
      .def_readonly("stderr_eaves", &SimResult::stderr_eaves)
      .def_readonly("hist_legit", &SimResult::hist_legit)
      .def_readonly("hist_eaves", &SimResult::hist_eaves)
      .def_readonly("seed_used", &SimResult::seed_used);

  m.def("reference_config", [] {
    const RunConfig c = reference_config();
    const SystemModel s = to_system_model(c.model);
    py::dict d;
    d["A"] = s.A;
    d["C"] = s.C;
    d["Q"] = s.Q;
    d["R"] = s.R;
    d["channels"] = c.channels;
    return d;
  }, "Plant matrices and channel rates of the reference study, as a dict.");

  m.def("spectral_radius", &spectral_radius, py::arg("A"));

  m.def("steady_state_covariance",
        [](Matrix a, Matrix c, Matrix q, Matrix r) {
          return steady_state_covariance(make_model(a, c, q, r));
        },
        py::arg("A"), py::arg("C"), py::arg("Q"), py::arg("R"));

  m.def("pi_distribution",
        [](double lam, int t_bar, int max_index) {
          return pi_distribution(lam, t_bar, max_index).pi;
        },
        py::arg("lam"), py::arg("t_bar"), py::arg("max_index"));

  m.def("phi_row", &phi_row, py::arg("channels"), py::arg("t_bar"), py::arg("N"));

  m.def("omega_distribution",
        [](const ChannelModel& ch, int t_bar, int horizon) {
          return eaves_stationary(ch, t_bar, horizon).omega;
        },
        py::arg("channels"), py::arg("t_bar"), py::arg("N"));

  m.def("objective_j",
        [](Matrix a, Matrix c, Matrix q, Matrix r, double lam, int t_bar,
           std::optional<double> tol) {
          const auto ladder = build_ladder(make_model(a, c, q, r), 256);
          return objective_j(ladder, lam, t_bar, tol);
        },
        py::arg("A"), py::arg("C"), py::arg("Q"), py::arg("R"), py::arg("lam"),
        py::arg("t_bar"), py::arg("tol") = py::none());

  m.def("eaves_bracket",
        [](Matrix a, Matrix c, Matrix q, Matrix r, const ChannelModel& ch, int t_bar,
           int horizon) {
          const auto ladder = build_ladder(make_model(a, c, q, r), ladder_depth(horizon));
          return eaves_bracket(ladder, eaves_stationary(ch, t_bar, horizon));
        },
        py::arg("A"), py::arg("C"), py::arg("Q"), py::arg("R"), py::arg("channels"),
        py::arg("t_bar"), py::arg("N"));

  m.def("solve_threshold",
        [](Matrix a, Matrix c, Matrix q, Matrix r, const ChannelModel& ch, double b_lower,
           int horizon) {
          const auto ladder = build_ladder(make_model(a, c, q, r), ladder_depth(horizon));
          py::gil_scoped_release release;
          return solve_threshold(b_lower, horizon, ladder, ch);
        },
        py::arg("A"), py::arg("C"), py::arg("Q"), py::arg("R"), py::arg("channels"),
        py::arg("b_lower"), py::arg("N") = 300);

  m.def("simulate_indices",
        [](Matrix a, Matrix c, Matrix q, Matrix r, const ChannelModel& ch, int t_bar,
           std::int64_t horizon, std::uint64_t seed, int replications, int burn_in, int jobs) {
          const auto ladder = build_ladder(make_model(a, c, q, r), 1024);
          SimConfig cfg;
          cfg.horizon = horizon;
          cfg.seed = seed;
          cfg.replications = replications;
          cfg.burn_in = burn_in;
          cfg.jobs = jobs;
          py::gil_scoped_release release;
          return simulate_indices(cfg, ch, t_bar, ladder);
        },
        py::arg("A"), py::arg("C"), py::arg("Q"), py::arg("R"), py::arg("channels"),
        py::arg("t_bar"), py::arg("horizon") = 1'000'000, py::arg("seed") = 0,
        py::arg("replications") = 1, py::arg("burn_in") = 1000, py::arg("jobs") = 1);

  m.def("analyze",
        [](const std::string& config_json) {
          const AnalyzeReport r = analyze(parse_config(config_json));
          py::dict d;
          d["p_bar"] = r.p_bar;
          d["rho_a"] = r.rho_a;
          d["limit_trace"] = r.limit_trace;
          d["t_bar"] = r.t_bar;
          d["N"] = r.horizon;
          d["J"] = r.objective;
          d["L"] = r.bracket.lower;
          d["L_plus_b"] = r.bracket.upper();
          d["pi"] = r.pi.pi;
          d["omega"] = r.eaves.omega;
          return d;
        },
        py::arg("config_json"), "Runs the analyze subcommand on a JSON config string.");

  m.def("oracle_check",
        [](const std::string& config_json, int jobs) {
          const auto rows = oracle_check(parse_config(config_json), jobs);
          py::list out;
          for (const auto& row : rows) {
            py::dict d;
            d["t_bar"] = row.t_bar;
            d["quantity"] = row.quantity;
            d["max_abs_dev"] = row.max_abs_dev;
            d["pass"] = row.pass;
            out.append(d);
          }
          return out;
        },
        py::arg("config_json"), py::arg("jobs") = 1);
}
