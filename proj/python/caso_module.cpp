#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "caso/config.hpp"
#include "caso/eval.hpp"
#include "caso/io.hpp"
#include "caso/structure_metrics.hpp"

namespace py = pybind11;
using namespace caso;

namespace {

py::dict metrics_dict(const RankingMetrics& m) {
  py::dict out;
  out["recall"] = m.recall_at;
  out["ndcg"] = m.ndcg_at;
  out["n_evaluated_users"] = m.n_evaluated_users;
  return out;
}

TrainingConfig config_from_kwargs(const py::kwargs& kwargs) {
  TrainingConfig cfg;
  for (const auto& [key, value] : kwargs) {
    std::string text = py::str(value);
    if (py::isinstance<py::bool_>(value)) text = value.cast<bool>() ? "true" : "false";
    apply_setting(cfg, key.cast<std::string>(), text);
  }
  cfg.validate();
  return cfg;
}

struct TrainedModel {
  TrainingConfig config;
  FitResult result;
  EmbeddingMatrix user_emb;
  std::uint64_t provenance = 0;
};

TrainedModel train_model(const DatasetBundle& data, const TrainingConfig& cfg) {
  cfg.validate();
  const SplitResult split = split_for_config(data.memberships, cfg);
  TrainedModel model{cfg, fit(data.graph, split.train, split.validation, cfg), {}, data.content_hash};
  model.user_emb = user_embeddings(model.result.state, data.graph, split.train, cfg);
  return model;
}

RankingMetrics score_split(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, const DatasetBundle& data,
                           const TrainingConfig& cfg, const std::vector<Index>& ks) {
  const SplitResult split = split_for_config(data.memberships, cfg);
  return evaluate_embeddings(users, communities, merge(split.train, split.validation), split.test, ks);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Community recommendation with community-aware social encoders";

  py::enum_<NscMeasure>(m, "Measure")
      .value("CN", NscMeasure::CN)
      .value("AAI", NscMeasure::AAI)
      .value("RAI", NscMeasure::RAI)
      .value("SI", NscMeasure::SI)
      .value("LHNI", NscMeasure::LHNI);

  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init(&config_from_kwargs))
      .def_static("from_text",
                  [](const std::string& text) {
                    TrainingConfig cfg;
                    apply_settings(cfg, parse_key_values(text));
                    cfg.validate();
                    return cfg;
                  })
      .def("to_text", &format_config)
      .def("validate", &TrainingConfig::validate)
      .def("set", [](TrainingConfig& cfg, const std::string& key, const std::string& value) {
        apply_setting(cfg, key, value);
      })
      .def_readwrite("alpha", &TrainingConfig::alpha)
      .def_readwrite("beta", &TrainingConfig::beta)
      .def_readwrite("gamma", &TrainingConfig::gamma)
      .def_readwrite("lambda_", &TrainingConfig::lambda)
      .def_readwrite("theta", &TrainingConfig::theta)
      .def_readwrite("zeta", &TrainingConfig::zeta)
      .def_readwrite("T", &TrainingConfig::steps)
      .def_readwrite("dim", &TrainingConfig::dim)
      .def_readwrite("learning_rate", &TrainingConfig::learning_rate)
      .def_readwrite("batch_size", &TrainingConfig::batch_size)
      .def_readwrite("max_epochs", &TrainingConfig::max_epochs)
      .def_readwrite("patience", &TrainingConfig::patience)
      .def_readwrite("seed", &TrainingConfig::seed)
      .def_readwrite("measure", &TrainingConfig::measure)
      .def("__repr__", [](const TrainingConfig& cfg) { return "TrainingConfig(\n" + format_config(cfg) + ")"; });

  py::class_<DatasetBundle>(m, "Dataset")
      .def_property_readonly("n_users", [](const DatasetBundle& d) { return d.graph.n_users(); })
      .def_property_readonly("n_edges", [](const DatasetBundle& d) { return d.graph.n_edges(); })
      .def_property_readonly("n_communities", [](const DatasetBundle& d) { return d.memberships.n_communities(); })
      .def_property_readonly("n_memberships", [](const DatasetBundle& d) { return d.memberships.n_memberships(); })
      .def_readonly("content_hash", &DatasetBundle::content_hash)
      .def_readonly("dropped_self_loops", &DatasetBundle::dropped_self_loops)
      .def("memberships", [](const DatasetBundle& d) { return d.memberships.pairs(); })
      .def("neighbors",
           [](const DatasetBundle& d, Index user) {
             const auto nb = d.graph.neighbors(user);
             return std::vector<Index>(nb.begin(), nb.end());
           })
      .def("user_token", [](const DatasetBundle& d, Index i) { return d.users.token(i); })
      .def("community_token", [](const DatasetBundle& d, Index i) { return d.communities.token(i); })
      .def("save", &write_dataset, py::arg("directory"));

  m.def("load_dataset", &load_dataset, py::arg("graph"), py::arg("memberships"));
  m.def(
      "make_dataset",
      [](const std::vector<TokenPair>& edges, const std::vector<TokenPair>& memberships) {
        return make_bundle(edges, memberships, "python");
      },
      py::arg("edges"), py::arg("memberships"));
  m.def(
      "planted_partition",
      [](Index n, Index blocks, double p_in, double p_out, Index memberships_per_user, std::uint64_t seed) {
        return generate_planted_partition({n, blocks, p_in, p_out, memberships_per_user, seed});
      },
      py::arg("n") = 400, py::arg("blocks") = 4, py::arg("p_in") = 0.3, py::arg("p_out") = 0.01,
      py::arg("memberships_per_user") = 1, py::arg("seed") = 0);

  m.def(
      "structure_report",
      [](const DatasetBundle& d, std::uint64_t samples, std::uint64_t seed) {
        const StructureReport r = structure_report(d.graph, d.memberships, {samples, seed});
        py::dict out;
        out["ac_intra"] = r.ac_intra;
        out["ac_inter"] = r.ac_inter;
        out["acn_intra"] = r.acn_intra;
        out["acn_inter"] = r.acn_inter;
        out["acc_intra"] = r.acc_intra;
        out["acc_inter"] = r.acc_inter;
        out["modularity"] = r.modularity_std;
        out["modularity_normalized"] = r.modularity_norm;
        return out;
      },
      py::arg("dataset"), py::arg("samples") = 0, py::arg("seed") = 0);

  py::class_<TrainedModel>(m, "Model")
      .def_readonly("config", &TrainedModel::config)
      .def_property_readonly("user_base", [](const TrainedModel& t) { return t.result.state.user_base; })
      .def_property_readonly("community_embeddings", [](const TrainedModel& t) { return t.result.state.community_emb; })
      .def_readonly("user_embeddings", &TrainedModel::user_emb)
      .def_property_readonly("best_epoch", [](const TrainedModel& t) { return t.result.best_epoch; })
      .def_property_readonly("best_valid_ndcg", [](const TrainedModel& t) { return t.result.best_valid_ndcg; })
      .def_property_readonly("log",
                             [](const TrainedModel& t) {
                               py::list rows;
                               for (const auto& e : t.result.log) {
                                 py::dict row;
                                 row["epoch"] = e.epoch;
                                 row["loss"] = e.loss;
                                 row["bpr"] = e.bpr;
                                 row["kl"] = e.kl;
                                 row["valid_ndcg"] = e.valid_ndcg;
                                 rows.append(row);
                               }
                               return rows;
                             })
      .def(
          "evaluate",
          [](const TrainedModel& t, const DatasetBundle& d, const std::vector<Index>& ks) {
            return metrics_dict(score_split(t.user_emb, t.result.state.community_emb, d, t.config, ks));
          },
          py::arg("dataset"), py::arg("ks") = std::vector<Index>{1, 3, 5, 10})
      .def(
          "save",
          [](const TrainedModel& t, const std::filesystem::path& path) {
            save_checkpoint(path, {format_config(t.config), t.provenance, t.result.state.user_base,
                                   t.result.state.community_emb, t.user_emb});
          },
          py::arg("path"));

  m.def("train", &train_model, py::arg("dataset"), py::arg("config"), py::call_guard<py::gil_scoped_release>());

  m.def(
      "evaluate_embeddings",
      [](const EmbeddingMatrix& users, const EmbeddingMatrix& communities, const DatasetBundle& d,
         const TrainingConfig& cfg, const std::vector<Index>& ks) {
        return metrics_dict(score_split(users, communities, d, cfg, ks));
      },
      py::arg("users"), py::arg("communities"), py::arg("dataset"), py::arg("config"),
      py::arg("ks") = std::vector<Index>{1, 3, 5, 10});

  m.def(
      "cross_validate",
      [](const DatasetBundle& d, const TrainingConfig& cfg, Index folds, const std::vector<Index>& ks) {
        CrossValidationResult r;
        {
          py::gil_scoped_release release;
          r = cross_validate(d.graph, d.memberships, cfg, folds, ks);
        }
        py::dict out;
        py::list per_fold;
        for (const auto& f : r.folds) per_fold.append(metrics_dict(f));
        out["folds"] = per_fold;
        out["mean"] = metrics_dict(r.mean);
        out["stddev"] = metrics_dict(r.stddev);
        return out;
      },
      py::arg("dataset"), py::arg("config"), py::arg("folds") = 5, py::arg("ks") = std::vector<Index>{1, 3, 5, 10});

  m.def(
      "split",
      [](const DatasetBundle& d, const TrainingConfig& cfg) {
        const SplitResult s = split_for_config(d.memberships, cfg);
        return py::make_tuple(s.train.pairs(), s.validation.pairs(), s.test.pairs());
      },
      py::arg("dataset"), py::arg("config"));

  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& path) {
        const Checkpoint c = load_checkpoint(path);
        py::dict out;
        out["config"] = c.config_text;
        out["provenance"] = c.provenance;
        out["user_base"] = c.user_base;
        out["community_embeddings"] = c.community_emb;
        out["user_embeddings"] = c.user_emb;
        return out;
      },
      py::arg("path"));
  m.def(
      "save_checkpoint",
      [](const std::filesystem::path& path, const TrainingConfig& cfg, std::uint64_t provenance,
         const EmbeddingMatrix& user_base, const EmbeddingMatrix& communities, const EmbeddingMatrix& users) {
        save_checkpoint(path, {format_config(cfg), provenance, user_base, communities, users});
      },
      py::arg("path"), py::arg("config"), py::arg("provenance"), py::arg("user_base"), py::arg("community_embeddings"),
      py::arg("user_embeddings"));

  m.def(
      "rank_candidates",
      [](const Vector& scores, std::vector<Index> known) {
        std::sort(known.begin(), known.end());
        return rank_candidates(scores, known);
      },
      py::arg("scores"), py::arg("known") = std::vector<Index>{});
  m.def(
      "recall_at_k",
      [](const std::vector<Index>& ranked, std::vector<Index> test, Index k) {
        std::sort(test.begin(), test.end());
        return recall_at_k(ranked, test, k);
      },
      py::arg("ranked"), py::arg("test"), py::arg("k"));
  m.def(
      "ndcg_at_k",
      [](const std::vector<Index>& ranked, std::vector<Index> test, Index k) {
        std::sort(test.begin(), test.end());
        return ndcg_at_k(ranked, test, k);
      },
      py::arg("ranked"), py::arg("test"), py::arg("k"));
}
