#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "care/commands.hpp"
#include "care/error.hpp"
#include "care/estimation.hpp"
#include "care/inference.hpp"
#include "care/io.hpp"
#include "care/model.hpp"
#include "care/simulation.hpp"

namespace py = pybind11;
using namespace care;

namespace {

using EdgeTuple = std::tuple<std::size_t, std::size_t, std::int64_t, std::int64_t>;

ComparisonData make_data(std::size_t n, const std::vector<EdgeTuple>& edges) {
  std::vector<Comparison> out;
  out.reserve(edges.size());
  for (const auto& [i, j, trials, wins] : edges) out.push_back({i, j, trials, wins});
  return ComparisonData(n, std::move(out));
}

std::vector<EdgeTuple> edge_list(const ComparisonData& data) {
  std::vector<EdgeTuple> out;
  for (const Comparison& e : data.edges()) out.emplace_back(e.i, e.j, e.trials, e.wins_j);
  return out;
}

FitConfig make_config(std::optional<double> step_size, std::size_t max_iters,
                      double grad_tol, double ridge_alpha,
                      std::optional<double> likelihood_scale) {
  FitConfig config;
  config.step_size = step_size;
  config.max_iters = max_iters;
  config.grad_tol = grad_tol;
  config.ridge_alpha = ridge_alpha;
  config.likelihood_scale = likelihood_scale;
  config.validate();
  return config;
}

}  // namespace

PYBIND11_MODULE(_care, m) {
  m.doc() = "Covariate-assisted ranking from pairwise comparisons";

  auto error = py::register_exception<Error>(m, "CareError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<ConnectivityError>(m, "ConnectivityError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DegenerateDesignError>(m, "DegenerateDesignError", error.ptr());
  py::register_exception<DegenerateContrastError>(m, "DegenerateContrastError",
                                                  error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());

  py::class_<ComparisonData>(m, "ComparisonData")
      .def(py::init(&make_data), py::arg("n_items"), py::arg("edges"),
           "Edges are (i, j, trials, wins_j) tuples; wins_j counts wins of j over i.")
      .def_property_readonly("n_items", &ComparisonData::n_items)
      .def_property_readonly("n_edges", &ComparisonData::n_edges)
      .def_property_readonly("total_trials", &ComparisonData::total_trials)
      .def_property_readonly("edges", &edge_list)
      .def("is_connected", [](const ComparisonData& d) { return is_connected(d); })
      .def("__eq__", [](const ComparisonData& a, const ComparisonData& b) { return a == b; });

  py::class_<CovariateMatrix>(m, "CovariateMatrix")
      .def_readonly("raw", &CovariateMatrix::raw)
      .def_readonly("scale_k", &CovariateMatrix::scale_k)
      .def_readonly("scaled", &CovariateMatrix::scaled)
      .def_readonly("augmented", &CovariateMatrix::augmented)
      .def_readonly("column_means", &CovariateMatrix::column_means)
      .def_readonly("column_sds", &CovariateMatrix::column_sds);

  py::class_<ParamVector>(m, "ParamVector")
      .def(py::init([](Vector alpha, Vector beta) {
             return ParamVector{std::move(alpha), std::move(beta), false};
           }),
           py::arg("alpha"), py::arg("beta"))
      .def_readonly("alpha", &ParamVector::alpha)
      .def_readonly("beta", &ParamVector::beta)
      .def_readonly("identified", &ParamVector::identified)
      .def("joint", &ParamVector::joint);

  py::class_<ProjectionOperator>(m, "ProjectionOperator")
      .def_readonly("matrix", &ProjectionOperator::matrix_p)
      .def("apply", &ProjectionOperator::apply)
      .def("theta_basis", &ProjectionOperator::theta_basis);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("converged", &FitResult::converged)
      .def_property_readonly("stop_reason",
                             [](const FitResult& f) { return to_string(f.stop_reason); })
      .def_property_readonly("iterations",
                             [](const FitResult& f) { return f.diagnostics.iterations; })
      .def_property_readonly("grad_norm",
                             [](const FitResult& f) { return f.diagnostics.final_grad_norm; })
      .def_property_readonly("kappa1", [](const FitResult& f) { return f.diagnostics.kappa1; })
      .def_readonly("objective_trace", &FitResult::objective_trace)
      .def_readonly("step_size", &FitResult::step_size)
      .def_readonly("scores", &FitResult::scores)
      .def_readonly("covariate_scores", &FitResult::covariate_scores);

  py::class_<PipelineResult>(m, "PipelineResult")
      .def_readonly("covariates", &PipelineResult::covariates)
      .def_readonly("projection", &PipelineResult::projection)
      .def_readonly("fit", &PipelineResult::fit);

  py::class_<VarianceModel>(m, "VarianceModel")
      .def_readonly("pseudoinverse", &VarianceModel::pseudoinverse)
      .def_readonly("eigenvalues", &VarianceModel::eigenvalues)
      .def_readonly("null_dim", &VarianceModel::null_dim)
      .def_readonly("warning", &VarianceModel::warning);

  py::class_<ContrastResult>(m, "ContrastResult")
      .def_readonly("estimate", &ContrastResult::estimate)
      .def_readonly("std_error", &ContrastResult::std_error)
      .def_readonly("z_stat", &ContrastResult::z_stat)
      .def_readonly("p_value", &ContrastResult::p_value)
      .def_readonly("ci_low", &ContrastResult::ci_low)
      .def_readonly("ci_high", &ContrastResult::ci_high);

  py::class_<RankingScores>(m, "RankingScores")
      .def_readonly("scores1", &RankingScores::scores1)
      .def_readonly("scores2", &RankingScores::scores2)
      .def_readonly("taus", &RankingScores::taus)
      .def_readonly("ranks1", &RankingScores::ranks1)
      .def_readonly("ranks2", &RankingScores::ranks2);

  py::class_<SyntheticTruth>(m, "SyntheticTruth")
      .def_readonly("covariates", &SyntheticTruth::covariates)
      .def_readonly("projection", &SyntheticTruth::projection)
      .def_readonly("truth", &SyntheticTruth::truth)
      .def_readonly("kappa1", &SyntheticTruth::kappa1);

  m.def("win_probability", &win_probability, py::arg("score_i"), py::arg("score_j"));
  m.def("preprocess_covariates", &preprocess_covariates, py::arg("raw"),
        py::arg("standardize") = true);
  m.def("intercept_only_covariates", &intercept_only_covariates, py::arg("n"));
  m.def("build_projection", &build_projection, py::arg("covariates"));
  m.def(
      "neg_log_likelihood",
      [](const ComparisonData& d, const CovariateMatrix& c, const ParamVector& p) {
        return neg_log_likelihood(d, c, p);
      },
      py::arg("data"), py::arg("covariates"), py::arg("params"));
  m.def(
      "gradient",
      [](const ComparisonData& d, const CovariateMatrix& c, const ParamVector& p) {
        return gradient(d, c, p);
      },
      py::arg("data"), py::arg("covariates"), py::arg("params"));
  m.def(
      "hessian",
      [](const ComparisonData& d, const CovariateMatrix& c, const ParamVector& p) {
        return hessian(d, c, p);
      },
      py::arg("data"), py::arg("covariates"), py::arg("params"));

  m.def(
      "fit",
      [](const ComparisonData& data, const Matrix& raw, bool standardize,
         std::optional<double> step_size, std::size_t max_iters, double grad_tol,
         double ridge_alpha, std::optional<double> likelihood_scale) {
        const FitConfig config =
            make_config(step_size, max_iters, grad_tol, ridge_alpha, likelihood_scale);
        py::gil_scoped_release release;
        return fit_care_scores_pipeline(data, raw, config, standardize);
      },
      py::arg("data"), py::arg("raw_covariates"), py::arg("standardize") = true,
      py::arg("step_size") = py::none(), py::arg("max_iters") = 20000,
      py::arg("grad_tol") = 1e-8, py::arg("ridge_alpha") = 0.0,
      py::arg("likelihood_scale") = py::none(),
      "Preprocess covariates, build the projection and fit by projected gradient descent.");

  m.def(
      "variance_model",
      [](const ComparisonData& data, const PipelineResult& pr, double cutoff) {
        return variance_model_at(data, pr.covariates, pr.projection, pr.fit.params, cutoff);
      },
      py::arg("data"), py::arg("result"), py::arg("eigen_cutoff") = kDefaultEigenCutoff);
  m.def(
      "contrast",
      [](const Vector& c, const PipelineResult& pr, const VarianceModel& vm, double level) {
        return contrast_inference(c, pr.fit, vm, level);
      },
      py::arg("c"), py::arg("result"), py::arg("variance_model"), py::arg("level") = 0.95);
  m.def(
      "coefficient_table",
      [](const PipelineResult& pr, const VarianceModel& vm, double level) {
        py::list rows;
        for (const CoefficientRow& r : build_inference_report(pr.fit, vm, level).rows) {
          py::dict row;
          row["kind"] = r.kind == CoefficientKind::kAlpha ? "alpha" : "beta";
          row["index"] = r.index;
          row["estimate"] = r.estimate;
          row["std_error"] = r.std_error;
          row["z_stat"] = r.z_stat;
          row["p_value"] = r.p_value;
          row["ci_low"] = r.ci_low;
          row["ci_high"] = r.ci_high;
          rows.append(row);
        }
        return rows;
      },
      py::arg("result"), py::arg("variance_model"), py::arg("level") = 0.95);
  m.def(
      "ranking",
      [](const PipelineResult& pr, const VarianceModel& vm, double q) {
        return care_ranking_scores(pr.fit, vm, q);
      },
      py::arg("result"), py::arg("variance_model"),
      py::arg("quantile_level") = kDefaultQuantileLevel);
  m.def("soft_threshold", &soft_threshold, py::arg("x"), py::arg("tau"));

  m.def(
      "generate_truth",
      [](std::size_t n, std::size_t d, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.n = n;
        spec.d = d;
        spec.seed = seed;
        return generate_truth(spec);
      },
      py::arg("n") = 200, py::arg("d") = 5, py::arg("seed") = 0);
  m.def(
      "sample_comparisons",
      [](const SyntheticTruth& t, double p, std::int64_t trials, std::uint64_t seed,
         std::uint64_t stream_id) {
        return sample_comparisons(t.covariates, t.truth, p, trials, seed, stream_id);
      },
      py::arg("truth"), py::arg("p"), py::arg("trials"), py::arg("seed"),
      py::arg("stream_id") = 1);

  m.def(
      "read_comparisons",
      [](const std::filesystem::path& path) {
        io::ParsedComparisons p = io::parse_comparisons_csv(path);
        return py::make_tuple(p.data, p.item_ids, p.ties_rejected);
      },
      py::arg("path"), "Returns (data, item_ids, ties_rejected).");
  m.def(
      "read_covariates",
      [](const std::filesystem::path& path, const std::vector<std::string>& ids) {
        io::ParsedCovariates p = io::parse_covariates_csv(path, ids);
        return py::make_tuple(p.raw, p.feature_names);
      },
      py::arg("path"), py::arg("item_ids"), "Returns (raw matrix, feature names).");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "care");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return cli::main(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Run the command line tool in-process; returns the exit code.");

  m.attr("__version__") = cli::kVersion;
}
