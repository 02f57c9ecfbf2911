/*
 *    Copyright 2026 The qrelay Authors.
 *
 *    Licensed under the Apache License, Version 2.0 (the "License");
 *    you may not use this file except in compliance with the License.
 *    You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 *    Unless required by applicable law or agreed to in writing, software
 *    distributed under the License is distributed on an "AS IS" BASIS,
 *    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *    See the License for the specific language governing permissions and
 *    limitations under the License.
 */

// Python module _qrelay: scenario runs, config validation, replay and a few
// protocol primitives. Structured results cross the boundary as JSON text.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qrelay/auth.hpp"
#include "qrelay/error.hpp"
#include "qrelay/netsim.hpp"
#include "qrelay/protocol.hpp"
#include "qrelay/quantum.hpp"
#include "qrelay/scenario.hpp"

namespace py = pybind11;
using namespace qrelay;

namespace {

py::object g_error;
py::object g_validation_error;

Basis parse_basis(const std::string& s) {
  if (s == "X" || s == "x") return Basis::X;
  if (s == "Y" || s == "y") return Basis::Y;
  throw py::value_error("basis must be 'X' or 'Y', got '" + s + "'");
}

py::dict outcome_dict(const ScenarioOutcome& o) {
  py::dict d;
  d["report"] = render_report(o.report);
  d["summary"] = report_summary(o.report);
  d["transcript"] = o.transcript.str();
  d["exit_code"] = o.exit_code;
  return d;
}

}  // namespace

PYBIND11_MODULE(_qrelay, m) {
  m.doc() = "Trusted-relay QKD network simulator";

  g_error = py::reinterpret_borrow<py::object>(PyErr_NewException("qrelay.QrelayError", PyExc_RuntimeError, nullptr));
  g_validation_error =
      py::reinterpret_borrow<py::object>(PyErr_NewException("qrelay.ConfigError", g_error.ptr(), nullptr));
  m.attr("QrelayError") = g_error;
  m.attr("ConfigError") = g_validation_error;

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::list v;
      for (const auto& x : e.violations()) v.append(py::make_tuple(x.location, x.message));
      py::object exc = g_validation_error(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("violations") = v;
      PyErr_SetObject(g_validation_error.ptr(), exc.ptr());
    } catch (const Error& e) {
      py::object exc = g_error(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(g_error.ptr(), exc.ptr());
    }
  });

  m.def(
      "run_scenario",
      [](const std::string& config_text, std::optional<std::uint64_t> seed) {
        ScenarioConfig c = parse_config(config_text);
        if (seed) {
          c.seed = *seed;
          c.network.seed = *seed;
        }
        ScenarioOutcome o;
        {
          py::gil_scoped_release release;
          o = run_scenario(c);
        }
        return outcome_dict(o);
      },
      py::arg("config_text"), py::arg("seed") = py::none(),
      "Run a scenario given as JSON text. Returns report (JSON text), summary, transcript and exit_code.");

  m.def(
      "normalize_config", [](const std::string& text) { return render_config(parse_config(text)); },
      py::arg("config_text"), "Parse and re-render a scenario with every default spelled out.");

  m.def(
      "validate_config",
      [](const std::string& text) {
        std::vector<std::pair<std::string, std::string>> out;
        try {
          parse_config(text);
        } catch (const ValidationError& e) {
          for (const auto& v : e.violations()) out.emplace_back(v.location, v.message);
        }
        return out;
      },
      py::arg("config_text"), "List (location, message) for every problem; empty when valid.");

  m.def(
      "report_summary", [](const std::string& report_text) { return report_summary(parse_report(report_text)); },
      py::arg("report_text"));

  m.def(
      "replay_transcript",
      [](const std::string& jsonl) {
        const ReplayReport r = replay_transcript(jsonl);
        py::dict d;
        d["ok"] = r.ok();
        d["well_formed"] = r.well_formed;
        d["records"] = r.records;
        d["tag_checks"] = r.tag_checks;
        d["sift_checks"] = r.sift_checks;
        d["accounting_checks"] = r.accounting_checks;
        py::list issues;
        for (const auto& i : r.issues) issues.append(py::make_tuple(i.record, i.type, i.message));
        d["issues"] = issues;
        return d;
      },
      py::arg("transcript"));

  m.def(
      "classify_round",
      [](const std::vector<std::string>& bases) {
        std::vector<Basis> b;
        for (const auto& s : bases) b.push_back(parse_basis(s));
        std::vector<std::pair<std::size_t, std::size_t>> runs;
        for (const auto& r : classify_round(b).runs) runs.emplace_back(r.pair.first, r.pair.last);
        return runs;
      },
      py::arg("bases"), "Beneficiary runs (first, last) of one round's announced bases.");

  m.def(
      "usable_fraction",
      [](std::size_t chain_length, std::size_t rounds, std::uint64_t seed, double noise) {
        Chain c;
        for (std::size_t i = 0; i < chain_length; ++i) c.nodes.push_back("n" + std::to_string(i));
        py::gil_scoped_release release;
        return sift(run_quantum_phase(c, rounds, NoiseModel::with_flip(noise), std::nullopt, Rng(seed)))
            .usable_fraction();
      },
      py::arg("chain_length"), py::arg("rounds"), py::arg("seed") = 1, py::arg("noise") = 0.0);

  m.def(
      "compute_tag",
      [](const std::vector<std::uint8_t>& key_bits, const py::bytes& data, std::size_t tag_bits) {
        const std::string s = data;
        const Bytes input(s.begin(), s.end());
        return compute_tag(key_bits, input, tag_bits);
      },
      py::arg("key_bits"), py::arg("data"), py::arg("tag_bits") = 64);

  m.def("exit_code_for", [](const std::string& failure) {
    const auto k = parse_failure_kind(failure);
    if (!k) throw py::value_error("unknown failure kind " + failure);
    return exit_code_for(*k);
  });

  m.attr("__version__") = "0.1.0";
}
