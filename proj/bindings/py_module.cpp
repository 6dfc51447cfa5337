#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "minitod/corpus.hpp"
#include "minitod/database.hpp"
#include "minitod/engine.hpp"
#include "minitod/evaluator.hpp"
#include "minitod/model.hpp"
#include "minitod/ontology.hpp"
#include "minitod/schema.hpp"
#include "minitod/tokenizer.hpp"

namespace py = pybind11;
using namespace minitod;

namespace {

using PyTriplet = std::tuple<std::string, std::string, std::string>;

BeliefState belief_from_py(const std::vector<PyTriplet>& triplets) {
  BeliefState state;
  for (const auto& [d, s, v] : triplets) state.push_back({d, s, v});
  return state;
}

std::vector<PyTriplet> belief_to_py(const BeliefState& state) {
  std::vector<PyTriplet> out;
  for (const auto& b : state) out.emplace_back(b.domain, b.slot, b.value);
  return out;
}

}  // namespace

PYBIND11_MODULE(_minitod, m) {
  m.doc() = "single sequence task oriented dialogue toolkit";

  py::class_<Vocab>(m, "Vocab")
      .def(py::init<>())
      .def_static("build", &Vocab::build, py::arg("texts"), py::arg("specials"))
      .def_static("load", &Vocab::load, py::arg("path"))
      .def("save", &Vocab::save, py::arg("path"))
      .def("encode", &Vocab::encode, py::arg("text"), py::arg("max_len") = 1024)
      .def("decode", &Vocab::decode, py::arg("ids"))
      .def("id", &Vocab::id, py::arg("token"))
      .def("token", &Vocab::token, py::arg("id"))
      .def("size", &Vocab::size);

  m.def("segment_specials", &tok::segment_specials,
        "special marker tokens in canonical order");

  m.def(
      "serialize_belief",
      [](const std::vector<PyTriplet>& belief) {
        return serialize_belief(belief_from_py(belief), {});
      },
      py::arg("belief"));
  m.def(
      "parse_belief",
      [](const std::string& text, const std::vector<std::string>& slot_names) {
        ParsedBelief parsed = parse_belief(text, SlotLexicon(slot_names));
        return py::make_tuple(belief_to_py(parsed.state), parsed.failed);
      },
      py::arg("text"), py::arg("slot_names"));
  m.def(
      "canonicalize",
      [](const std::vector<PyTriplet>& belief) {
        return belief_to_py(canonicalize(belief_from_py(belief)));
      },
      py::arg("belief"));

  m.def("bleu", &bleu, py::arg("candidates"), py::arg("references"));
  m.def("combined_score", &combined_score, py::arg("inform"), py::arg("success"),
        py::arg("bleu"));
  m.def(
      "joint_goal_accuracy",
      [](const std::vector<std::vector<PyTriplet>>& pred,
         const std::vector<std::vector<PyTriplet>>& gold) {
        std::vector<BeliefState> p, g;
        for (const auto& b : pred) p.push_back(belief_from_py(b));
        for (const auto& b : gold) g.push_back(belief_from_py(b));
        return joint_goal_accuracy(p, g);
      },
      py::arg("predicted"), py::arg("gold"));

  m.def(
      "gen_corpus",
      [](const std::string& out_dir, int train, int test, uint64_t seed) {
        GenConfig config{train, test, seed};
        GeneratedData data = generate_corpus(config);
        data.ontology.save(out_dir + "/ontology.json");
        data.db.save(out_dir + "/db.json");
        save_corpus(data.train, out_dir + "/train.json");
        save_corpus(data.test, out_dir + "/test.json");
        return py::make_tuple(data.train.total_turns(), data.test.total_turns());
      },
      py::arg("out_dir"), py::arg("train") = 500, py::arg("test") = 100,
      py::arg("seed") = 1);

  m.def(
      "training_sequences",
      [](const std::string& corpus_path, const std::string& ontology_path) {
        Ontology onto = Ontology::load(ontology_path);
        return training_sequences(load_corpus(corpus_path, onto), {});
      },
      py::arg("corpus_path"), py::arg("ontology_path"));

  m.def(
      "db_query",
      [](const std::string& db_path, const std::string& ontology_path,
         const std::vector<PyTriplet>& belief, const std::string& domain) {
        Ontology onto = Ontology::load(ontology_path);
        Database db = Database::load(db_path, onto);
        std::vector<std::map<std::string, std::string>> out;
        for (const EntityRow* row : db.query(belief_from_py(belief), domain, onto)) {
          std::map<std::string, std::string> attrs;
          for (const auto& [k, v] : row->attrs) attrs[k] = v;
          out.push_back(std::move(attrs));
        }
        return out;
      },
      py::arg("db_path"), py::arg("ontology_path"), py::arg("belief"),
      py::arg("domain"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("layers", &ModelConfig::layers)
      .def_readwrite("heads", &ModelConfig::heads)
      .def_readwrite("dim", &ModelConfig::dim)
      .def_readwrite("ff", &ModelConfig::ff)
      .def_readwrite("vocab_size", &ModelConfig::vocab_size)
      .def_readwrite("max_len", &ModelConfig::max_len);

  py::class_<Model>(m, "Model")
      .def(py::init<const ModelConfig&>(), py::arg("config"))
      .def_static("load", &Model::load, py::arg("path"))
      .def("save", &Model::save, py::arg("path"))
      .def_static(
          "random_init",
          [](const ModelConfig& cfg, uint64_t seed) {
            return Model::random_init(cfg, seed);
          },
          py::arg("config"), py::arg("seed"))
      .def(
          "train",
          [](Model& self, const std::vector<std::vector<int>>& sequences,
             int steps, int batch, double lr, uint64_t seed) {
            std::vector<Model::Example> examples;
            for (const auto& tokens : sequences) {
              Model::Example ex;
              ex.tokens = tokens;
              examples.push_back(std::move(ex));
            }
            Model::TrainOptions opts;
            opts.steps = steps;
            opts.batch_size = batch;
            opts.lr = lr;
            opts.seed = seed;
            opts.verbose = false;
            return self.train(examples, opts);
          },
          py::arg("sequences"), py::arg("steps"), py::arg("batch") = 8,
          py::arg("lr") = 1e-3, py::arg("seed") = 1)
      .def("greedy_decode", &Model::greedy_decode, py::arg("prefix"),
           py::arg("stop_ids"), py::arg("max_new"));
}
