#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tscm/adjustment.hpp"
#include "tscm/geometry.hpp"
#include "tscm/io.hpp"
#include "tscm/metrics.hpp"
#include "tscm/pipeline.hpp"
#include "tscm/ploss.hpp"
#include "tscm/populations.hpp"
#include "tscm/synth.hpp"
#include "tscm/version.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_tscm, m) {
  m.doc() = "two-stage causal debiasing for relationship classification";
  m.attr("__version__") = tscm::kVersion;

  py::register_exception<tscm::validation_error>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<tscm::io_error>(m, "IoError", PyExc_OSError);

  // domain types
  py::class_<tscm::BoundingBox>(m, "BoundingBox")
      .def(py::init<>())
      .def(py::init([](double cx, double cy, double h, double w) {
             return tscm::BoundingBox{cx, cy, h, w};
           }),
           py::arg("cx"), py::arg("cy"), py::arg("h"), py::arg("w"))
      .def_readwrite("cx", &tscm::BoundingBox::cx)
      .def_readwrite("cy", &tscm::BoundingBox::cy)
      .def_readwrite("h", &tscm::BoundingBox::h)
      .def_readwrite("w", &tscm::BoundingBox::w)
      .def("__repr__", [](const tscm::BoundingBox& b) {
        return "BoundingBox(cx=" + std::to_string(b.cx) + ", cy=" + std::to_string(b.cy) +
               ", h=" + std::to_string(b.h) + ", w=" + std::to_string(b.w) + ")";
      });

  py::class_<tscm::ObjectInstance>(m, "ObjectInstance")
      .def(py::init<>())
      .def(py::init([](int category, tscm::BoundingBox box) {
             return tscm::ObjectInstance{category, box};
           }),
           py::arg("category"), py::arg("box"))
      .def_readwrite("category", &tscm::ObjectInstance::category)
      .def_readwrite("box", &tscm::ObjectInstance::box);

  py::class_<tscm::TripletInstance>(m, "TripletInstance")
      .def(py::init<>())
      .def(py::init([](int s, int o, int p) { return tscm::TripletInstance{s, o, p}; }),
           py::arg("subject_idx"), py::arg("object_idx"), py::arg("predicate"))
      .def_readwrite("subject_idx", &tscm::TripletInstance::subject_idx)
      .def_readwrite("object_idx", &tscm::TripletInstance::object_idx)
      .def_readwrite("predicate", &tscm::TripletInstance::predicate);

  py::class_<tscm::ImageRecord>(m, "ImageRecord")
      .def(py::init<>())
      .def_readwrite("image_id", &tscm::ImageRecord::image_id)
      .def_readwrite("objects", &tscm::ImageRecord::objects)
      .def_readwrite("triplets", &tscm::ImageRecord::triplets);

  py::class_<tscm::Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("C", &tscm::Dataset::C)
      .def_readwrite("K", &tscm::Dataset::K)
      .def_readwrite("records", &tscm::Dataset::records);

  py::class_<tscm::LogitRecord>(m, "LogitRecord")
      .def(py::init<>())
      .def_readwrite("image_id", &tscm::LogitRecord::image_id)
      .def_readwrite("pair_id", &tscm::LogitRecord::pair_id)
      .def_readwrite("gt_predicate", &tscm::LogitRecord::gt_predicate)
      .def_readwrite("fg_logits", &tscm::LogitRecord::fg_logits)
      .def_readwrite("bg_logit", &tscm::LogitRecord::bg_logit);

  py::class_<tscm::LogitDump>(m, "LogitDump")
      .def(py::init<>())
      .def_readwrite("K", &tscm::LogitDump::K)
      .def_readwrite("records", &tscm::LogitDump::records);

  py::class_<tscm::PopulationTable>(m, "PopulationTable")
      .def(py::init<>())
      .def_readwrite("alpha", &tscm::PopulationTable::alpha)
      .def_readwrite("populations", &tscm::PopulationTable::populations);

  py::class_<tscm::FrequencyVector>(m, "FrequencyVector")
      .def(py::init<>())
      .def_readwrite("pi", &tscm::FrequencyVector::pi);

  py::class_<tscm::AdjustmentMatrix>(m, "AdjustmentMatrix")
      .def(py::init<>())
      .def_static("identity", &tscm::AdjustmentMatrix::identity, py::arg("K"), py::arg("beta"))
      .def_readwrite("beta", &tscm::AdjustmentMatrix::beta)
      .def_readwrite("factors", &tscm::AdjustmentMatrix::factors);

  py::class_<tscm::PredictionRecord>(m, "PredictionRecord")
      .def(py::init<>())
      .def_readwrite("image_id", &tscm::PredictionRecord::image_id)
      .def_readwrite("pair_id", &tscm::PredictionRecord::pair_id)
      .def_readwrite("gt_predicate", &tscm::PredictionRecord::gt_predicate)
      .def_readwrite("predicted", &tscm::PredictionRecord::predicted)
      .def_readwrite("scores", &tscm::PredictionRecord::scores);

  py::class_<tscm::PredictionSet>(m, "PredictionSet")
      .def(py::init<>())
      .def_readwrite("K", &tscm::PredictionSet::K)
      .def_readwrite("records", &tscm::PredictionSet::records);

  py::class_<tscm::FeatureSet>(m, "FeatureSet")
      .def(py::init<>())
      .def_readwrite("d", &tscm::FeatureSet::d)
      .def_readwrite("x", &tscm::FeatureSet::x)
      .def_readwrite("labels", &tscm::FeatureSet::labels);

  // geometry
  m.def("canonicalize_pair", &tscm::canonicalize_pair, py::arg("subject"), py::arg("object"));
  m.def(
      "pair_feature",
      [](const tscm::BoundingBox& s, const tscm::BoundingBox& o) {
        return tscm::pair_feature(s, o).psi;
      },
      py::arg("subject"), py::arg("object"));
  m.def("pair_feature_set", &tscm::pair_feature_set, py::arg("dataset"));

  // populations
  m.def("class_frequencies", &tscm::class_frequencies, py::arg("dataset"));
  m.def(
      "build_populations",
      [](const tscm::Dataset& ds, int alpha) { return tscm::build_populations(ds, alpha); },
      py::arg("dataset"), py::arg("alpha"));

  // population loss and trainer
  py::class_<tscm::PLossContext>(m, "PLossContext")
      .def(py::init<tscm::FrequencyVector, tscm::PopulationTable>(), py::arg("pi"),
           py::arg("populations"))
      .def_static("uniform", &tscm::PLossContext::uniform, py::arg("K"))
      .def_property_readonly("K", &tscm::PLossContext::K)
      .def("weight", &tscm::PLossContext::weight, py::arg("y"), py::arg("y_prime"));

  m.def(
      "p_loss",
      [](const tscm::PLossContext& ctx, int y, const std::vector<double>& f) {
        return tscm::p_loss(ctx, y, f);
      },
      py::arg("ctx"), py::arg("y"), py::arg("logits"));
  m.def(
      "p_loss_gradient",
      [](const tscm::PLossContext& ctx, int y, const std::vector<double>& f) {
        return tscm::p_loss_gradient(ctx, y, f);
      },
      py::arg("ctx"), py::arg("y"), py::arg("logits"));

  py::class_<tscm::LinearModel>(m, "LinearModel")
      .def(py::init<>())
      .def_readwrite("weights", &tscm::LinearModel::weights)
      .def_readwrite("bias", &tscm::LinearModel::bias)
      .def("logits", [](const tscm::LinearModel& model, const std::vector<double>& x) {
        return model.logits(x);
      });

  py::class_<tscm::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("lr", &tscm::TrainConfig::lr)
      .def_readwrite("epochs", &tscm::TrainConfig::epochs)
      .def_readwrite("batch", &tscm::TrainConfig::batch)
      .def_readwrite("seed", &tscm::TrainConfig::seed)
      .def_readwrite("l2", &tscm::TrainConfig::l2);

  py::class_<tscm::TrainResult>(m, "TrainResult")
      .def_readonly("model", &tscm::TrainResult::model)
      .def_readonly("epoch_mean_loss", &tscm::TrainResult::epoch_mean_loss);

  m.def("train_linear", &tscm::train_linear, py::arg("data"), py::arg("ctx"), py::arg("config"));

  // adjustment
  py::class_<tscm::AugmentedLogits>(m, "AugmentedLogits")
      .def_readonly("z", &tscm::AugmentedLogits::z)
      .def_readonly("guidance", &tscm::AugmentedLogits::guidance);

  py::class_<tscm::BoundSet>(m, "BoundSet")
      .def(py::init<>())
      .def_readwrite("class_id", &tscm::BoundSet::class_id)
      .def_readwrite("rank", &tscm::BoundSet::rank)
      .def_readwrite("lower", &tscm::BoundSet::lower)
      .def_readwrite("upper", &tscm::BoundSet::upper);

  py::class_<tscm::SweepResult>(m, "SweepResult")
      .def_readonly("chosen_t", &tscm::SweepResult::chosen_t)
      .def_readonly("satisfied_count", &tscm::SweepResult::satisfied_count)
      .def_readonly("interval_lo", &tscm::SweepResult::interval_lo)
      .def_readonly("interval_hi", &tscm::SweepResult::interval_hi);

  m.def("augment_logits", &tscm::augment_logits, py::arg("record"));
  m.def("rank_classes", &tscm::rank_classes, py::arg("augmented"));
  m.def("extract_bounds", &tscm::extract_bounds, py::arg("dump"), py::arg("class_id"),
        py::arg("rank"));
  m.def("balance_bounds", &tscm::balance_bounds, py::arg("bounds"), py::arg("seed"));
  m.def("sweep_optimal_factor", &tscm::sweep_optimal_factor, py::arg("bounds"));
  m.def("fit_adjustment", &tscm::fit_adjustment, py::arg("dump"), py::arg("beta"),
        py::arg("seed"), py::arg("n_threads") = 1);
  m.def(
      "apply_adjustment",
      [](const tscm::LogitDump& dump, const tscm::AdjustmentMatrix& T) {
        return tscm::apply_adjustment(dump, T);
      },
      py::arg("dump"), py::arg("factors"));

  // metrics
  py::class_<tscm::MetricsReport>(m, "MetricsReport")
      .def_readonly("r_at", &tscm::MetricsReport::r_at)
      .def_readonly("mr_at", &tscm::MetricsReport::mr_at)
      .def_readonly("per_class_recall", &tscm::MetricsReport::per_class_recall)
      .def_readonly("micro_accuracy", &tscm::MetricsReport::micro_accuracy)
      .def_readonly("mr_argmax", &tscm::MetricsReport::mr_argmax)
      .def_readonly("avg_r", &tscm::MetricsReport::avg_r)
      .def_readonly("avg_mr", &tscm::MetricsReport::avg_mr)
      .def_readonly("mr_combined", &tscm::MetricsReport::mr_combined)
      .def_readonly("mc_at", &tscm::MetricsReport::mc_at)
      .def_readonly("mc_argmax", &tscm::MetricsReport::mc_argmax)
      .def_readonly("gt_rank_percent", &tscm::MetricsReport::gt_rank_percent)
      .def_readonly("false_prediction_count", &tscm::MetricsReport::false_prediction_count);

  m.def("per_class_recall", &tscm::per_class_recall, py::arg("preds"));
  m.def("recall_at_k", &tscm::recall_at_k, py::arg("preds"), py::arg("k"));
  m.def("mean_recall_at_k", &tscm::mean_recall_at_k, py::arg("preds"), py::arg("k"));
  m.def("correction_rate_argmax", &tscm::correction_rate_argmax, py::arg("baseline"),
        py::arg("adjusted"));
  m.def("correction_rate_at_k", &tscm::correction_rate_at_k, py::arg("baseline"),
        py::arg("adjusted"), py::arg("k"));
  m.def("gt_rank_distribution", &tscm::gt_rank_distribution, py::arg("preds"));
  m.def(
      "evaluate",
      [](const tscm::PredictionSet& preds, const std::vector<int>& ks,
         const tscm::PredictionSet* baseline) { return tscm::evaluate(preds, ks, baseline); },
      py::arg("preds"), py::arg("ks"), py::arg("baseline") = nullptr);
  m.def("mean_within_cluster_margin", &tscm::mean_within_cluster_margin, py::arg("dump"),
        py::arg("cluster_of_class"));

  // synthetic world
  py::enum_<tscm::BgMode>(m, "BgMode")
      .value("CONSTANT", tscm::BgMode::kConstant)
      .value("UNIFORM", tscm::BgMode::kUniform);

  py::class_<tscm::BgConfig>(m, "BgConfig")
      .def(py::init<>())
      .def_readwrite("mode", &tscm::BgConfig::mode)
      .def_readwrite("constant", &tscm::BgConfig::constant)
      .def_readwrite("lo", &tscm::BgConfig::lo)
      .def_readwrite("hi", &tscm::BgConfig::hi)
      .def_readwrite("seed", &tscm::BgConfig::seed);

  py::class_<tscm::SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("K", &tscm::SynthConfig::K)
      .def_readwrite("C", &tscm::SynthConfig::C)
      .def_readwrite("n_train", &tscm::SynthConfig::n_train)
      .def_readwrite("n_test", &tscm::SynthConfig::n_test)
      .def_readwrite("zipf_s", &tscm::SynthConfig::zipf_s)
      .def_readwrite("n_clusters", &tscm::SynthConfig::n_clusters)
      .def_readwrite("cluster_spread", &tscm::SynthConfig::cluster_spread)
      .def_readwrite("noise_sigma", &tscm::SynthConfig::noise_sigma)
      .def_readwrite("d", &tscm::SynthConfig::d)
      .def_readwrite("seed", &tscm::SynthConfig::seed)
      .def_readwrite("pairs_per_image", &tscm::SynthConfig::pairs_per_image);

  py::class_<tscm::SynthSplit>(m, "SynthSplit")
      .def_readonly("dataset", &tscm::SynthSplit::dataset)
      .def_readonly("features", &tscm::SynthSplit::features);

  py::class_<tscm::SynthWorld>(m, "SynthWorld")
      .def_readonly("train", &tscm::SynthWorld::train)
      .def_readonly("test", &tscm::SynthWorld::test)
      .def_readonly("cluster_of_class", &tscm::SynthWorld::cluster_of_class);

  m.def("generate", &tscm::generate, py::arg("config"));
  m.def(
      "simulate_biased_logits",
      [](const tscm::LinearModel& model, const tscm::FeatureSet& feats, const tscm::Dataset& ds,
         const tscm::BgConfig& bg) { return tscm::simulate_biased_logits(model, feats, ds, bg); },
      py::arg("model"), py::arg("features"), py::arg("dataset"), py::arg("bg"));
  m.def("zipf_counts", &tscm::zipf_counts, py::arg("K"), py::arg("s"), py::arg("n"));

  // file formats
  m.def("load_dataset", &tscm::load_dataset, py::arg("path"));
  m.def(
      "save_dataset",
      [](const tscm::Dataset& ds, const std::string& path) { tscm::save_dataset(ds, path); },
      py::arg("dataset"), py::arg("path"));
  m.def("load_logits", &tscm::load_logits, py::arg("path"));
  m.def(
      "save_logits",
      [](const tscm::LogitDump& d, const std::string& path) { tscm::save_logits(d, path); },
      py::arg("dump"), py::arg("path"));
  m.def("load_populations", &tscm::load_populations, py::arg("path"));
  m.def(
      "save_populations",
      [](const tscm::PopulationTable& p, const std::string& path) {
        tscm::save_populations(p, path);
      },
      py::arg("populations"), py::arg("path"));
  m.def("load_adjustment", &tscm::load_adjustment, py::arg("path"));
  m.def(
      "save_adjustment",
      [](const tscm::AdjustmentMatrix& a, const std::string& path) {
        tscm::save_adjustment(a, path);
      },
      py::arg("factors"), py::arg("path"));
  m.def("load_features", &tscm::load_features, py::arg("path"));
  m.def(
      "save_features",
      [](const tscm::FeatureSet& f, const std::string& path) { tscm::save_features(f, path); },
      py::arg("features"), py::arg("path"));
  m.def("load_predictions", &tscm::load_predictions, py::arg("path"));
  m.def(
      "save_predictions",
      [](const tscm::PredictionSet& p, const std::string& path) {
        tscm::save_predictions(p, path);
      },
      py::arg("predictions"), py::arg("path"));
  m.def("load_model", &tscm::load_model, py::arg("path"));
  m.def("save_model", &tscm::save_model, py::arg("model"), py::arg("path"));

  // pipeline
  py::class_<tscm::PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("seed", &tscm::PipelineConfig::seed)
      .def_readwrite("synth", &tscm::PipelineConfig::synth)
      .def_readwrite("alpha", &tscm::PipelineConfig::alpha)
      .def_readwrite("beta", &tscm::PipelineConfig::beta)
      .def_readwrite("train", &tscm::PipelineConfig::train)
      .def_readwrite("bg", &tscm::PipelineConfig::bg)
      .def_readwrite("ks", &tscm::PipelineConfig::ks)
      .def_readwrite("threads", &tscm::PipelineConfig::threads);

  py::class_<tscm::PipelineSummary>(m, "PipelineSummary")
      .def_readonly("margin_ce", &tscm::PipelineSummary::margin_ce)
      .def_readonly("margin_ploss", &tscm::PipelineSummary::margin_ploss)
      .def_readonly("ce_raw", &tscm::PipelineSummary::ce_raw)
      .def_readonly("ce_adjusted", &tscm::PipelineSummary::ce_adjusted)
      .def_readonly("ploss_raw", &tscm::PipelineSummary::ploss_raw)
      .def_readonly("ploss_adjusted", &tscm::PipelineSummary::ploss_adjusted);

  m.def("run_pipeline", &tscm::run_pipeline, py::arg("config"), py::arg("out_dir"));
  m.def("pipeline_config_from_json", &tscm::pipeline_config_from_json, py::arg("text"));
  m.def("pipeline_config_to_json", &tscm::pipeline_config_to_json, py::arg("config"));
}
