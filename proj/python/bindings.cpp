#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <tuple>
#include <vector>

#include "ebu/environments.hpp"
#include "ebu/error.hpp"
#include "ebu/harness.hpp"
#include "ebu/targets.hpp"
#include "ebu/training.hpp"

namespace py = pybind11;
using namespace ebu;

namespace {

using PyTransition = std::tuple<StateId, ActionId, double, StateId, bool>;
using PyTable = std::vector<std::vector<double>>;

Episode to_episode(const std::vector<PyTransition>& rows) {
  Episode e;
  for (const auto& [s, a, r, n, done] : rows) e.transitions.push_back({s, a, r, n, done});
  if (!is_valid_episode(e)) throw InvalidArgument("episode transitions do not chain");
  return e;
}

std::vector<PyTransition> from_episode(const Episode& e) {
  std::vector<PyTransition> out;
  for (const auto& t : e.transitions) out.emplace_back(t.s, t.a, t.r, t.s_next, t.terminal);
  return out;
}

QTable to_table(const PyTable& rows) {
  if (rows.empty() || rows[0].empty()) throw InvalidArgument("Q table must be non-empty");
  QTable q(rows.size(), rows[0].size());
  for (StateId s = 0; s < rows.size(); ++s) {
    if (rows[s].size() != q.num_actions()) throw InvalidArgument("Q table rows must have equal length");
    for (ActionId a = 0; a < q.num_actions(); ++a) q(s, a) = rows[s][a];
  }
  return q;
}

PyTable from_table(const QTable& q) {
  PyTable out(q.num_states());
  for (StateId s = 0; s < q.num_states(); ++s) out[s].assign(q.row(s).begin(), q.row(s).end());
  return out;
}

}  // namespace

PYBIND11_MODULE(_ebu, m) {
  m.doc() = "Episodic backward update core";

  auto base = py::register_exception<Error>(m, "EbuError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  m.def("chain_revisit_episode", [] { return from_episode(chain_revisit_episode()); },
        "The stored chain episode s1 -> s2 -> s3 -> s2 -> s3 -> goal as (s, a, r, s_next, terminal) tuples.");

  m.def("value_iteration_chain", [](double gamma) { return from_table(value_iteration(make_chain(gamma))); },
        py::arg("gamma") = 0.9);

  m.def(
      "backward_targets",
      [](const std::vector<PyTransition>& episode, const PyTable& q, double beta, double gamma) {
        return ebu_targets(to_episode(episode), table_values(to_table(q)), DiffusionCoefficient(beta), gamma).y;
      },
      py::arg("episode"), py::arg("q"), py::arg("beta"), py::arg("gamma"));

  m.def(
      "one_step_target",
      [](const PyTransition& t, const PyTable& q, double gamma) {
        auto [s, a, r, n, done] = t;
        return one_step_target(Transition{s, a, r, n, done}, table_values(to_table(q)), gamma);
      },
      py::arg("transition"), py::arg("q"), py::arg("gamma"));

  m.def(
      "nstep_targets",
      [](const std::vector<PyTransition>& episode, const PyTable& q, double gamma, std::size_t n) {
        return nstep_targets(to_episode(episode), table_values(to_table(q)), gamma, n);
      },
      py::arg("episode"), py::arg("q"), py::arg("gamma"), py::arg("n"));

  m.def(
      "tabular_backward_update",
      [](const PyTable& q, const std::vector<PyTransition>& episode, double gamma) {
        return from_table(tabular_ebu_update(to_table(q), to_episode(episode), gamma));
      },
      py::arg("q"), py::arg("episode"), py::arg("gamma"));

  m.def(
      "fig1_curve",
      [](std::size_t max_updates, std::size_t trials, std::uint64_t seed) {
        Rng rng(seed);
        auto c = fig1_probability_curve(max_updates, trials, rng);
        py::dict out;
        out["updates"] = c.updates;
        out["ebu"] = c.ebu;
        out["uniform"] = c.uniform;
        return out;
      },
      py::arg("max_updates") = 60, py::arg("trials") = 10000, py::arg("seed") = 0);

  m.def(
      "verify_operator",
      [](std::size_t contraction_draws, std::size_t fixed_point_draws, std::uint64_t seed) {
        OperatorCheckSettings s;
        s.contraction_draws = contraction_draws;
        s.fixed_point_draws = fixed_point_draws;
        Rng rng(seed);
        OperatorReport r;
        {
          py::gil_scoped_release release;
          r = verify_operator(s, rng);
        }
        py::dict out;
        out["passed"] = r.passed();
        out["contraction_draws"] = r.contraction_draws;
        out["contraction_failures"] = r.contraction_failures;
        out["worst_ratio_minus_gamma"] = r.worst_ratio_minus_gamma;
        out["fixed_point_checks"] = r.fixed_point_draws;
        out["fixed_point_failures"] = r.fixed_point_failures;
        out["worst_fixed_point_slack"] = r.worst_fixed_point_slack;
        return out;
      },
      py::arg("contraction_draws") = 200, py::arg("fixed_point_draws") = 50, py::arg("seed") = 0);

  m.def(
      "generate_maze",
      [](int width, int height, double density, std::uint64_t seed) {
        Rng rng(seed);
        return maze_to_text(ebu::generate_maze(width, height, density, rng).maze);
      },
      py::arg("width"), py::arg("height"), py::arg("density"), py::arg("seed") = 0,
      "Random solvable maze in text form ('#' wall, 'S' start, 'G' goal).");

  m.def("shortest_path_len", [](const std::string& text) { return shortest_path_len(maze_from_text(text)); },
        py::arg("maze_text"));

  m.def("relative_length", &relative_length, py::arg("agent_len"), py::arg("oracle_len"));

  m.def(
      "train",
      [](const std::string& config_text, std::uint64_t seed) {
        RunConfig c = parse_config(config_text);
        c.validate();
        RunResult r;
        {
          py::gil_scoped_release release;
          r = train(c, seed, c.run.name);
        }
        py::list rows;
        for (const auto& row : r.metrics) {
          py::dict d;
          d["run"] = row.run;
          d["seed"] = row.seed;
          d["step"] = row.step;
          d["eval_return"] = row.eval_return;
          d["rel_length"] = row.rel_length ? py::cast(*row.rel_length) : py::none();
          d["mean_q"] = row.mean_q;
          rows.append(d);
        }
        return rows;
      },
      py::arg("config_text"), py::arg("seed") = 0, "Runs one training run and returns its metric rows.");
}
