#include "blockcd/algorithms.hpp"
#include "blockcd/config.hpp"
#include "blockcd/experiment.hpp"
#include "blockcd/problems.hpp"
#include "blockcd/smoothness.hpp"
#include "blockcd/suites.hpp"
#include "blockcd/theory_check.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace bcd;

namespace {

py::dict trace_dict(const RunTrace& t) {
  const std::size_t n = t.rows.size();
  py::array_t<double> F(n), s(n), v(n), u(n), work(n);
  py::array_t<std::uint64_t> evals(n);
  auto f = F.mutable_unchecked<1>();
  auto sa = s.mutable_unchecked<1>();
  auto va = v.mutable_unchecked<1>();
  auto ua = u.mutable_unchecked<1>();
  auto wa = work.mutable_unchecked<1>();
  auto ea = evals.mutable_unchecked<1>();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = t.rows[k];
    f(k) = r.F;
    sa(k) = r.s;
    va(k) = r.v;
    ua(k) = r.u;
    wa(k) = r.work;
    ea(k) = r.grad_component_evals;
  }
  py::dict d;
  d["F"] = F;
  d["s"] = s;
  d["v"] = v;
  d["u"] = u;
  d["work"] = work;
  d["grad_component_evals"] = evals;
  d["output_index"] = t.output_index;
  if (!t.iterates.empty()) d["iterates"] = t.iterates;
  return d;
}

py::dict result_dict(const RunResult& r) {
  py::dict d;
  d["x"] = r.x;
  d["trace"] = trace_dict(r.trace);
  d["metric"] = r.metric.diag();
  return d;
}

py::dict report_dict(const BoundReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["expectation"] = r.kind == CheckKind::expectation;
  d["pass"] = r.pass;
  d["seeds"] = r.seeds;
  d["flags"] = r.flags;
  d["violations"] = r.violations();
  py::list rows;
  for (const auto& row : r.rows) rows.append(py::make_tuple(row.k, row.lhs, row.rhs, row.slack, row.pass));
  d["rows"] = rows;
  return d;
}

py::list reports_list(const std::vector<BoundReport>& reps) {
  py::list out;
  for (const auto& r : reps) out.append(report_dict(r));
  return out;
}

DiagonalMetric metric_for(const Objective& prob, const std::optional<Vector>& diag) {
  if (diag) return DiagonalMetric(*diag, prob.partition());
  if (auto q = dynamic_cast<const QuadraticFiniteSum*>(&prob)) return quadratic_block_metric(*q);
  if (auto s = dynamic_cast<const StreamingQuadratic*>(&prob)) return quadratic_block_metric(*s);
  throw Error("pass metric= for non-quadratic objectives");
}

BlockPartition partition_arg(Index d, const py::object& blocks) {
  if (py::isinstance<py::int_>(blocks)) return BlockPartition::uniform(d, blocks.cast<Index>());
  return BlockPartition(blocks.cast<std::vector<Index>>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cyclic block coordinate descent core";

  // translators run newest first, so the base class goes first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<BlockPartition>(m, "BlockPartition")
      .def(py::init<std::vector<Index>>())
      .def_static("uniform", &BlockPartition::uniform)
      .def_property_readonly("sizes", &BlockPartition::sizes)
      .def_property_readonly("dim", &BlockPartition::dim)
      .def_property_readonly("num_blocks", &BlockPartition::num_blocks)
      .def("offset", &BlockPartition::offset);

  py::class_<Regularizer>(m, "Regularizer")
      .def_static("zero", &Regularizer::zero)
      .def_static("l1", &Regularizer::l1, py::arg("weight"))
      .def_static("box", &Regularizer::box, py::arg("lo"), py::arg("hi"))
      .def("value", [](const Regularizer& r, const Vector& x) { return r.value(x); })
      .def("prox",
           [](const Regularizer& r, const Vector& center, const Vector& linear, double eta, const Vector& lam) {
             return r.metric_prox(center, linear, eta, lam);
           },
           py::arg("center"), py::arg("linear"), py::arg("eta"), py::arg("metric"))
      .def("__repr__", &Regularizer::describe);

  py::class_<Objective>(m, "Objective")
      .def_property_readonly("dim", &Objective::dim)
      .def_property_readonly("n", &Objective::num_components)
      .def_property_readonly("family", &Objective::family)
      .def_property_readonly("partition", &Objective::partition)
      .def("value", &Objective::value)
      .def("full_grad", &Objective::full_grad)
      .def("block_grad", &Objective::block_grad)
      .def("component_value", &Objective::component_value)
      .def("component_grad", &Objective::component_grad);

  py::class_<QuadraticFiniteSum, Objective>(m, "QuadraticFiniteSum")
      .def(py::init([](std::vector<Matrix> A, std::vector<Vector> b, std::vector<double> c, py::object blocks) {
             const Index d = A.empty() ? 0 : A.front().rows();
             return QuadraticFiniteSum(std::move(A), std::move(b), std::move(c), partition_arg(d, blocks));
           }),
           py::arg("A"), py::arg("b"), py::arg("c"), py::arg("blocks"))
      .def_property_readonly("mean_A", &QuadraticFiniteSum::mean_A)
      .def_property_readonly("mean_b", &QuadraticFiniteSum::mean_b)
      .def("minimizer", &QuadraticFiniteSum::minimizer);

  py::class_<SigmoidClassification, Objective>(m, "SigmoidClassification")
      .def_property_readonly("data", &SigmoidClassification::data)
      .def_property_readonly("labels", &SigmoidClassification::labels);

  m.def("generate_quadratic",
        [](std::uint64_t seed, std::size_t n, Index d, py::object blocks, double kappa, bool convex) {
          return generate_quadratic(seed, n, d, partition_arg(d, blocks), kappa, convex);
        },
        py::arg("seed"), py::arg("n"), py::arg("d"), py::arg("blocks"), py::arg("condition_number") = 10.0,
        py::arg("convex") = true);
  m.def("generate_classification",
        [](std::uint64_t seed, std::size_t n, Index d, py::object blocks, double margin) {
          return generate_classification(seed, n, d, partition_arg(d, blocks), margin);
        },
        py::arg("seed"), py::arg("n"), py::arg("d"), py::arg("blocks"), py::arg("margin") = 2.0);

  m.def("block_metric", [](const QuadraticFiniteSum& q) { return quadratic_block_metric(q).diag(); },
        "Lambda_j = L_j I from the component block norms");
  m.def("L_constants",
        [](const QuadraticFiniteSum& q, std::optional<Vector> metric, bool mean_function) {
          const auto lam = metric_for(q, metric);
          const auto L = compute_L_constants(
              exact_Q_list(q, lam, mean_function ? QKind::mean_function : QKind::component_average), lam);
          return py::make_tuple(L.L_hat, L.L_tilde);
        },
        py::arg("prob"), py::arg("metric") = py::none(), py::arg("mean_function") = false);
  m.def("spectral_norm", [](const Matrix& a, double tol) { return spectral_norm(a, tol); }, py::arg("m"),
        py::arg("tol") = 1e-10);
  m.def("step_size",
        [](double L_hat, double L_tilde, double p, std::uint64_t b, std::uint64_t bprime,
           std::optional<std::uint64_t> n) {
          return step_size({L_hat, L_tilde}, p, b, bprime, n, StepMode::theorem3).eta;
        },
        py::arg("L_hat"), py::arg("L_tilde"), py::arg("p"), py::arg("b"), py::arg("bprime"), py::arg("n"));

  m.def("pccd",
        [](const Objective& prob, const Regularizer& reg, const Vector& x0, std::size_t K,
           std::optional<Vector> metric, bool backtracking, double eta, bool full_vector, bool record_iterates) {
          PccdConfig c;
          c.K = K;
          c.x0 = x0;
          c.eta = eta;
          c.backtracking = backtracking;
          if (!backtracking) c.metric = metric_for(prob, metric);
          c.diagnostics.record_iterates = record_iterates;
          py::gil_scoped_release release;
          return full_vector ? baseline_prox_gd(prob, reg, c) : pccd_run(prob, reg, c);
        },
        py::arg("prob"), py::arg("reg"), py::arg("x0"), py::arg("K"), py::arg("metric") = py::none(),
        py::arg("backtracking") = false, py::arg("eta") = 1.0, py::arg("full_vector") = false,
        py::arg("record_iterates") = false, "P-CCD, or proximal gradient descent with full_vector=True");

  m.def("vrccd",
        [](const Objective& prob, const Regularizer& reg, const Vector& x0, std::size_t K, double eta, double p,
           std::uint64_t b, std::uint64_t bprime, std::uint64_t seed, bool shared, std::optional<Vector> metric,
           bool full_vector, bool record_u) {
          VrccdConfig c;
          c.K = K;
          c.x0 = x0;
          c.eta = eta;
          c.p = p;
          c.b = b;
          c.bprime = bprime;
          c.seed = seed;
          c.sharing = shared ? SampleSharing::shared_per_cycle : SampleSharing::fresh_per_block;
          c.metric = metric_for(prob, metric);
          c.diagnostics.record_u = record_u;
          py::gil_scoped_release release;
          return full_vector ? baseline_page(prob, reg, c) : vrccd_run(prob, reg, c);
        },
        py::arg("prob"), py::arg("reg"), py::arg("x0"), py::arg("K"), py::arg("eta"), py::arg("p"), py::arg("b"),
        py::arg("bprime"), py::arg("seed") = 0, py::arg("shared") = false, py::arg("metric") = py::none(),
        py::arg("full_vector") = false, py::arg("record_u") = false);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("x", &RunResult::x)
      .def_property_readonly("trace", [](const RunResult& r) { return trace_dict(r.trace); })
      .def_property_readonly("metric", [](const RunResult& r) { return r.metric.diag(); })
      .def("as_dict", &result_dict);

  m.def("run_config",
        [](const std::string& text, std::map<std::string, std::string> overrides, std::string out_dir,
           std::optional<std::uint64_t> seed, std::size_t jobs) {
          auto cfg = parse_config(text, overrides);
          RunOptions o;
          o.seed = seed;
          o.jobs = jobs;
          o.write_files = !out_dir.empty();
          if (o.write_files) o.out_dir = out_dir;
          ExperimentOutcome out;
          {
            py::gil_scoped_release release;
            out = run_experiment(cfg, o);
          }
          py::dict d;
          d["exit_code"] = out.exit_code;
          d["escalated"] = out.escalated;
          d["files"] = out.files;
          d["reports"] = reports_list(out.reports);
          py::list traces;
          for (const auto& t : out.traces) traces.append(trace_dict(t));
          d["traces"] = traces;
          std::ostringstream os;
          write_report_text(os, out.reports);
          d["report_text"] = os.str();
          return d;
        },
        py::arg("text"), py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("out_dir") = "",
        py::arg("seed") = py::none(), py::arg("jobs") = 1);

  m.def("sweep",
        [](const std::string& text, const std::string& axis, const std::vector<std::string>& values, std::size_t jobs) {
          RunOptions o;
          o.jobs = jobs;
          o.write_files = false;
          const auto cfg = parse_config(text);
          std::vector<SweepRow> rows;
          {
            py::gil_scoped_release release;
            rows = sweep(cfg, axis, values, o);
          }
          py::list out;
          for (const auto& r : rows) out.append(py::make_tuple(r.value, r.seed, r.final_F, r.final_s, r.total_work));
          return out;
        },
        py::arg("text"), py::arg("axis"), py::arg("values"), py::arg("jobs") = 1);

  m.def("suite_names", &suite_names);
  m.def("run_suite",
        [](const std::string& name, std::size_t jobs) {
          SuiteOptions o;
          o.jobs = jobs;
          SuiteResult r;
          {
            py::gil_scoped_release release;
            r = run_suite(name, o);
          }
          py::dict d;
          d["criterion"] = r.criterion;
          d["name"] = r.name;
          d["pass"] = r.pass;
          d["exit_code"] = r.exit_code;
          d["summary"] = r.summary;
          d["seconds"] = r.seconds;
          d["reports"] = reports_list(r.reports);
          return d;
        },
        py::arg("name"), py::arg("jobs") = 1);
}
