#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "timeagg/artifact.hpp"
#include "timeagg/cohort_io.hpp"
#include "timeagg/errors.hpp"
#include "timeagg/interpret.hpp"
#include "timeagg/metrics.hpp"
#include "timeagg/synth.hpp"
#include "timeagg/tpe.hpp"
#include "timeagg/tsne.hpp"

namespace py = pybind11;
using namespace timeagg;

namespace {

py::array_t<double> matrix_to_numpy(const Eigen::MatrixXd& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  auto buf = out.mutable_unchecked<2>();
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) buf(r, c) = m(r, c);
  }
  return out;
}

Eigen::MatrixXd numpy_to_matrix(const py::array_t<double>& a) {
  if (a.ndim() != 2) throw DataError("expected a 2-D array");
  auto buf = a.unchecked<2>();
  Eigen::MatrixXd m(a.shape(0), a.shape(1));
  for (py::ssize_t r = 0; r < a.shape(0); ++r) {
    for (py::ssize_t c = 0; c < a.shape(1); ++c) m(r, c) = buf(r, c);
  }
  return m;
}

HyperParams hp_from_kwargs(int units_input, int units_agg, int units_dense, double l1,
                           double l2, double dropout, int conv_kernel) {
  HyperParams hp;
  hp.units_input = units_input;
  hp.units_agg = units_agg;
  hp.units_dense = units_dense;
  hp.l1 = l1;
  hp.l2 = l2;
  hp.dropout = dropout;
  hp.conv_kernel = conv_kernel;
  hp.validate();
  return hp;
}

py::dict hp_to_dict(const HyperParams& hp) {
  py::dict d;
  d["units_input"] = hp.units_input;
  d["units_agg"] = hp.units_agg;
  d["units_dense"] = hp.units_dense;
  d["l1"] = hp.l1;
  d["l2"] = hp.l2;
  d["dropout"] = hp.dropout;
  d["conv_kernel"] = hp.conv_kernel;
  return d;
}

struct PyPrepared {
  PreparedData data;

  const GridSet& split(int i) const {
    if (i < 0 || i >= static_cast<int>(data.splits.size())) {
      throw DataError("split index out of range");
    }
    return data.splits[i];
  }
};

struct PyModel {
  TrainedModel model;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Windowed time-aggregation forecasting core (C++)";

  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericError>(m, "NumericError");

  py::class_<Cohort>(m, "Cohort")
      .def_property_readonly("size",
                             [](const Cohort& c) { return c.patients.size(); })
      .def("prevalence", &Cohort::prevalence)
      .def_property_readonly("variable_names",
                             [](const Cohort& c) {
                               std::vector<std::string> names;
                               for (const auto& v : c.schema.variables) {
                                 names.push_back(v.name);
                               }
                               return names;
                             })
      .def("save",
           [](const Cohort& c, const std::string& cohort_path,
              const std::string& schema_path) {
             save_cohort(c, cohort_path);
             save_schema(c.schema, schema_path);
           },
           py::arg("cohort_path"), py::arg("schema_path"))
      .def_static("load", &load_cohort, py::arg("cohort_path"), py::arg("schema_path"));

  m.def(
      "generate_cohort",
      [](int n_patients, std::uint64_t seed, double signal_strength,
         double prevalence_target, double mean_visits, double visit_gap_median,
         const std::string& id_prefix) {
        GeneratorConfig cfg;
        cfg.n_patients = n_patients;
        cfg.seed = seed;
        cfg.signal_strength = signal_strength;
        cfg.prevalence_target = prevalence_target;
        cfg.mean_visits = mean_visits;
        cfg.visit_gap_median = visit_gap_median;
        cfg.id_prefix = id_prefix;
        return generate_cohort(cfg);
      },
      py::arg("n_patients") = 600, py::arg("seed") = 1,
      py::arg("signal_strength") = 0.7, py::arg("prevalence_target") = 0.4,
      py::arg("mean_visits") = 8.0, py::arg("visit_gap_median") = 100.0,
      py::arg("id_prefix") = "p");

  m.def("make_benchmark_pair", &make_benchmark_pair, py::arg("seed") = 1);

  py::class_<PyPrepared>(m, "Prepared")
      .def_property_readonly(
          "n_splits", [](const PyPrepared& p) { return p.data.splits.size(); })
      .def("size", [](const PyPrepared& p, int split) { return p.split(split).size(); })
      .def("labels",
           [](const PyPrepared& p, int split) { return p.split(split).labels(); })
      .def("ids",
           [](const PyPrepared& p, int split) {
             std::vector<std::string> ids;
             for (const auto& g : p.split(split).grids) ids.push_back(g.patient_id);
             return ids;
           })
      .def("values", [](const PyPrepared& p, int split) {
        const GridSet& set = p.split(split);
        const int W = set.window_cfg.n_windows;
        const int F = set.schema.size();
        py::array_t<double> out(
            {static_cast<long>(set.size()), static_cast<long>(W), static_cast<long>(F)});
        auto buf = out.mutable_unchecked<3>();
        for (int i = 0; i < set.size(); ++i) {
          for (int w = 0; w < W; ++w) {
            for (int f = 0; f < F; ++f) buf(i, w, f) = set.grids[i].values(w, f);
          }
        }
        return out;
      });

  m.def(
      "prepare",
      [](const Cohort& cohort, const std::vector<double>& fractions, std::uint64_t seed,
         int window_len, int n_windows) {
        PyPrepared out;
        out.data = split_and_prepare(cohort, fractions, seed, {window_len, n_windows});
        return out;
      },
      py::arg("cohort"), py::arg("fractions") = std::vector<double>{0.638, 0.161, 0.201},
      py::arg("seed") = 7, py::arg("window_len") = 100, py::arg("n_windows") = 3);

  m.def("architectures", [] {
    std::vector<std::string> names;
    for (ArchKind k : all_arch_kinds()) names.push_back(to_string(k));
    return names;
  });

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("kind",
                             [](const PyModel& m_) { return to_string(m_.model.kind); })
      .def_property_readonly("best_epoch",
                             [](const PyModel& m_) { return m_.model.best_epoch; })
      .def_property_readonly("best_val_loss",
                             [](const PyModel& m_) { return m_.model.best_val_loss; })
      .def_property_readonly("hyperparams",
                             [](const PyModel& m_) { return hp_to_dict(m_.model.hp); })
      .def("predict",
           [](const PyModel& m_, const PyPrepared& p, int split) {
             const Eigen::VectorXd probs = predict(m_.model, p.split(split));
             return py::array_t<double>(probs.size(), probs.data());
           },
           py::arg("prepared"), py::arg("split"))
      .def("representation",
           [](const PyModel& m_, const PyPrepared& p, int split) {
             return matrix_to_numpy(extract_representation(m_.model, p.split(split)));
           },
           py::arg("prepared"), py::arg("split"))
      .def("save", [](const PyModel& m_, const std::string& path) {
        save_model(m_.model, path);
      })
      .def_static("load", [](const std::string& path) {
        return PyModel{load_model(path)};
      });

  m.def(
      "train",
      [](const std::string& kind, const PyPrepared& prepared, int train_split,
         int val_split, int units_input, int units_agg, int units_dense, double l1,
         double l2, double dropout, int conv_kernel, std::uint64_t seed, int epochs,
         int batch_size) {
        TrainConfig cfg;
        cfg.seed = seed;
        cfg.max_epochs = epochs;
        cfg.batch_size = batch_size;
        PyModel out{train(arch_from_string(kind),
                          hp_from_kwargs(units_input, units_agg, units_dense, l1, l2,
                                         dropout, conv_kernel),
                          prepared.split(train_split), prepared.split(val_split), cfg)};
        out.model.stats = prepared.data.stats;
        return out;
      },
      py::arg("kind"), py::arg("prepared"), py::arg("train_split") = 0,
      py::arg("val_split") = 1, py::arg("units_input") = 16, py::arg("units_agg") = 16,
      py::arg("units_dense") = 16, py::arg("l1") = 0.0, py::arg("l2") = 0.0,
      py::arg("dropout") = 0.0, py::arg("conv_kernel") = 2, py::arg("seed") = 1,
      py::arg("epochs") = 200, py::arg("batch_size") = 64);

  m.def(
      "tune",
      [](const std::string& kind, const PyPrepared& prepared, int trials,
         std::uint64_t seed, int epochs, int batch_size) {
        TrainConfig cfg;
        cfg.max_epochs = epochs;
        cfg.batch_size = batch_size;
        const StudyResult study =
            tune_architecture(arch_from_string(kind), prepared.split(0),
                              prepared.split(1), trials, seed, cfg);
        py::dict out = hp_to_dict(study.best.hp);
        out["objective"] = study.best.objective;
        out["n_trials"] = study.trials.size();
        return out;
      },
      py::arg("kind"), py::arg("prepared"), py::arg("trials") = 30, py::arg("seed") = 1,
      py::arg("epochs") = 200, py::arg("batch_size") = 64);

  m.def(
      "auroc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return auroc({scores, labels});
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "delong_ci",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         double alpha) {
        const DelongCi ci = delong_ci({scores, labels}, alpha);
        return py::make_tuple(ci.auc, ci.lo, ci.hi);
      },
      py::arg("scores"), py::arg("labels"), py::arg("alpha") = 0.05);

  m.def("relative_difference", &relative_difference, py::arg("permuted_mean"),
        py::arg("original"));

  m.def(
      "tsne",
      [](const py::array_t<double>& x, double perplexity, int iters,
         std::uint64_t seed) {
        TsneConfig cfg;
        cfg.perplexity = perplexity;
        cfg.iters = iters;
        cfg.seed = seed;
        return matrix_to_numpy(tsne(numpy_to_matrix(x), cfg).embedding);
      },
      py::arg("x"), py::arg("perplexity") = 30.0, py::arg("iters") = 1000,
      py::arg("seed") = 0);

  m.def(
      "permutation_importance",
      [](const PyModel& model, const PyPrepared& prepared, int test_split,
         int train_split, int rounds, std::uint64_t seed) {
        const ImportanceHeatmap map =
            permutation_importance(model.model, prepared.split(test_split),
                                   prepared.split(train_split), rounds, seed);
        py::dict out;
        out["variables"] = map.variables;
        out["baseline_auroc"] = map.baseline_auroc;
        out["relative_difference"] = matrix_to_numpy(map.relative_difference);
        out["mean_permuted_auroc"] = matrix_to_numpy(map.mean_permuted_auroc);
        return out;
      },
      py::arg("model"), py::arg("prepared"), py::arg("test_split") = 2,
      py::arg("train_split") = 0, py::arg("rounds") = 20, py::arg("seed") = 0);
}
