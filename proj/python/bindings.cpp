#include "borat/harness.hpp"
#include "borat/simplex_qp.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>

namespace py = pybind11;
using namespace borat;

namespace {

py::dict solution_dict(const DualSolution& s, std::size_t n) {
    py::dict d;
    d["alpha"] = s.alpha;
    d["value"] = s.value;
    d["support"] = subset_indices(s.support, n);
    d["multiplier"] = s.multiplier_c;
    d["fallback_used"] = s.fallback_used;
    return d;
}

py::dict record_dict(const TraceRecord& r) {
    py::dict d;
    d["step"] = r.step;
    d["sampled_loss"] = r.sampled_loss;
    d["full_obj"] = r.full_obj;
    d["accuracy"] = r.accuracy;
    d["dual_value"] = r.dual_value;
    d["step_type"] = r.step_type;
    d["alpha"] = r.alpha;
    d["param_norm_sq"] = r.param_norm_sq;
    return d;
}

} // namespace

PYBIND11_MODULE(_borat, m) {
    m.doc() = "Bundle optimizer core";
    m.attr("__version__") = kVersion;

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "solve_dual",
        [](const Eigen::MatrixXd& rows, const Eigen::VectorXd& offsets, double eta) {
            std::vector<ParamVector> r;
            for (Eigen::Index i = 0; i < rows.rows(); ++i) {
                r.push_back(rows.row(i).transpose());
            }
            std::vector<double> b(offsets.data(), offsets.data() + offsets.size());
            const auto problem = build_dual_problem(r, b, eta);
            return solution_dict(solve_dual(problem), problem.n());
        },
        py::arg("rows"), py::arg("offsets"), py::arg("eta"),
        "Solve the simplex dual for gradient rows (one per row) and offsets.");

    m.def("solve_dual_q",
          [](const Eigen::MatrixXd& q, const Eigen::VectorXd& b) {
              const DualProblem problem(q, b);
              return solution_dict(solve_dual(problem), problem.n());
          },
          py::arg("q"), py::arg("b"));

    m.def("closed_form_n2", &solve_dual_closed_form_n2, py::arg("loss"), py::arg("grad_norm_sq"), py::arg("eta"));

    m.def(
        "project",
        [](const Eigen::VectorXd& w, std::optional<double> r) {
            return project(r ? FeasibleRegion::l2_ball(*r) : FeasibleRegion::none(), w);
        },
        py::arg("w"), py::arg("r") = py::none(), "Project onto the ball of squared radius r.");

    m.def(
        "run",
        [](const std::string& problem, const std::string& optimizer, std::size_t n, double eta, std::size_t steps,
           std::uint64_t seed, std::optional<double> r, double momentum, std::size_t log_every) {
            RunConfig c;
            c.problem = ProblemSpec::defaults_for(problem);
            c.method = optimizer == "alig" ? Method::alig : Method::borat;
            if (optimizer != "alig" && optimizer != "borat") {
                throw InvalidInput("optimizer must be alig or borat");
            }
            c.optimizer.bundle_size = n;
            c.optimizer.eta = eta;
            c.optimizer.max_steps = steps;
            c.optimizer.seed = seed;
            c.optimizer.momentum = momentum;
            if (r) {
                c.optimizer.region = FeasibleRegion::l2_ball(*r);
            }
            c.log_every = log_every;
            c.validate();
            RunOutcome out;
            {
                py::gil_scoped_release release;
                out = borat::run(c);
            }
            py::list records;
            for (const auto& rec : out.trace.records) {
                records.append(record_dict(rec));
            }
            py::dict d;
            d["records"] = records;
            d["final_params"] = out.final_params;
            d["ok"] = out.ok;
            d["error"] = out.trace.error;
            return d;
        },
        py::arg("problem") = "lsq", py::arg("optimizer") = "borat", py::arg("n") = 3, py::arg("eta") = 0.1,
        py::arg("steps") = 1000, py::arg("seed") = 0, py::arg("r") = py::none(), py::arg("momentum") = 0.0,
        py::arg("log_every") = 100);

    m.def(
        "objective",
        [](const std::string& problem, const Eigen::VectorXd& w, std::optional<std::size_t> sample) {
            const auto obj = make_objective(ProblemSpec::defaults_for(problem));
            if (sample) {
                const auto lg = obj->sample_loss_grad(*sample, w);
                return py::make_tuple(lg.loss, lg.grad);
            }
            std::vector<std::size_t> all(obj->num_samples());
            for (std::size_t i = 0; i < all.size(); ++i) {
                all[i] = i;
            }
            const auto lg = obj->loss_and_grad(all, w);
            return py::make_tuple(lg.loss, lg.grad);
        },
        py::arg("problem"), py::arg("w"), py::arg("sample") = py::none(),
        "Loss and gradient of a default problem, on one sample or the full set.");

    m.def(
        "initial_point",
        [](const std::string& problem, std::uint64_t seed) {
            return make_objective(ProblemSpec::defaults_for(problem))->initial_point(seed);
        },
        py::arg("problem"), py::arg("seed") = 0);
}
