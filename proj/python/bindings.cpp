#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "emomt/bleu.hpp"
#include "emomt/corpus.hpp"
#include "emomt/emotion.hpp"
#include "emomt/error.hpp"
#include "emomt/experiment.hpp"
#include "emomt/prompting.hpp"

namespace py = pybind11;
using namespace emomt;

namespace {

py::dict bleu_dict(const BleuScore& b) {
  py::dict d;
  d["score"] = b.score;
  d["precisions"] = std::vector<double>(b.precisions.begin(), b.precisions.end());
  d["bp"] = b.brevity_penalty;
  d["sys_len"] = b.hyp_len;
  d["ref_len"] = b.ref_len;
  d["counts"] = std::vector<std::size_t>(b.correct.begin(), b.correct.end());
  d["totals"] = std::vector<std::size_t>(b.total.begin(), b.total.end());
  return d;
}

py::dict example_dict(const PromptExample& e) {
  py::dict d;
  d["id"] = e.utterance_id;
  d["prompt"] = e.prompt_text;
  d["completion"] = e.completion_text;
  d["template"] = std::string(to_string(e.kind));
  d["dimension"] = e.dimension ? py::cast(std::string(to_string(*e.dimension))) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_emomt, m) {
  m.doc() = "Emotion-conditioned translation prompts, BLEU and experiment reports";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", error.ptr());
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  py::register_exception<RecordError>(m, "RecordError", validation.ptr());
  py::register_exception<CoverageError>(m, "CoverageError", error.ptr());
  py::register_exception<TransportError>(m, "TransportError", error.ptr());
  py::register_exception<BackendError>(m, "BackendError", error.ptr());

  py::class_<EmotionScores>(m, "EmotionScores")
      .def(py::init<double, double, double>(), py::arg("arousal"), py::arg("dominance"), py::arg("valence"))
      .def_readwrite("arousal", &EmotionScores::arousal)
      .def_readwrite("dominance", &EmotionScores::dominance)
      .def_readwrite("valence", &EmotionScores::valence);

  py::class_<EmotionTag>(m, "EmotionTag")
      .def_property_readonly("dimension", [](const EmotionTag& t) { return std::string(to_string(t.dimension)); })
      .def_property_readonly("status", [](const EmotionTag& t) { return std::string(to_string(t.status)); })
      .def_property_readonly("polarity", [](const EmotionTag& t) { return std::string(to_string(t.polarity)); })
      .def("__eq__", [](const EmotionTag& a, const EmotionTag& b) { return a == b; })
      .def("__repr__", [](const EmotionTag& t) {
        return "EmotionTag(" + std::string(to_string(t.dimension)) + ", " + std::string(to_string(t.status)) + ", " +
               std::string(to_string(t.polarity)) + ")";
      });

  m.def(
      "binarize",
      [](const EmotionScores& s, const std::string& dimension, double threshold) {
        return binarize(s, parse_dimension(dimension), threshold);
      },
      py::arg("scores"), py::arg("dimension"), py::arg("threshold") = kDefaultThreshold);

  m.def(
      "render",
      [](const std::string& kind, const std::string& src, std::optional<std::string> tgt,
         std::optional<EmotionTag> tag) {
        std::optional<std::string_view> t;
        if (tgt) t = *tgt;
        return example_dict(render(parse_template(kind), src, t, tag));
      },
      py::arg("template"), py::arg("src"), py::arg("tgt") = py::none(), py::arg("tag") = py::none());

  m.def(
      "parse_hypothesis",
      [](const std::string& kind, const std::string& text) { return parse_hypothesis(parse_template(kind), text); },
      py::arg("template"), py::arg("text"));

  m.def("has_emotion_markup", [](const std::string& text) { return has_emotion_markup(text); });

  m.def("tokenize_13a", [](const std::string& line) { return tokenize_13a(line); });

  m.def(
      "corpus_bleu",
      [](const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
        if (hyps.size() != refs.size()) throw ValidationError("hypotheses and references differ in length");
        std::vector<EvalPair> pairs;
        for (std::size_t i = 0; i < hyps.size(); ++i) pairs.push_back({hyps[i], refs[i]});
        return bleu_dict(corpus_bleu(pairs));
      },
      py::arg("hypotheses"), py::arg("references"));

  m.def("load_corpus", [](const std::filesystem::path& path) {
    const Corpus corpus = load_corpus(path);
    py::list out;
    for (const auto& u : corpus.utterances()) {
      py::dict d;
      d["id"] = u.id;
      d["src_text"] = u.src_text;
      d["tgt_text"] = u.tgt_text;
      d["split"] = std::string(to_string(u.split));
      d["audio_ref"] = u.audio_ref ? py::cast(*u.audio_ref) : py::none();
      out.append(std::move(d));
    }
    return out;
  });

  // Reports cross the boundary as JSON text; the Python wrapper converts.
  m.def("_select_best", [](const std::string& report) {
    return select_best(ExperimentReport::from_json(json::parse(report)));
  });
  m.def("_compute_deltas", [](const std::string& report, const std::string& baseline) {
    return compute_deltas(ExperimentReport::from_json(json::parse(report)), baseline).to_json().dump();
  });
  m.def("_render_table", [](const std::string& report) {
    return render_table(ExperimentReport::from_json(json::parse(report)));
  });
}
