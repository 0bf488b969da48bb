#include "emomt/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>

#include "emomt/comet.hpp"
#include "emomt/emotion.hpp"
#include "emomt/error.hpp"
#include "emomt/evaluation.hpp"
#include "emomt/http.hpp"

namespace emomt {

namespace {

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string template_variant(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::emotion_source: return "source-side";
    case TemplateKind::emotion_target: return "target-side";
    case TemplateKind::emotion_token: return "token";
    default: return std::string(to_string(kind));
  }
}

std::string slug(const std::string& label) {
  std::string out;
  for (unsigned char c : label) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(c));
    else if (!out.empty() && out.back() != '_') out.push_back('_');
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "row" : out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::string fmt1(double v, bool sign = false) {
  char buf[32];
  const double r = round1(v);
  std::snprintf(buf, sizeof(buf), sign ? "%+.1f" : "%.1f", r == 0.0 ? 0.0 : r);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentSpec s;
  try {
    s.name = j.value("name", s.name);
    s.manifest = resolve(j.at("manifest").get<std::string>(), base_dir);
    if (auto it = j.find("annotations"); it != j.end() && !it->is_null())
      s.annotations = resolve(it->get<std::string>(), base_dir);
    s.ser_endpoint = j.value("ser_endpoint", std::string());
    s.comet_endpoint = j.value("comet_endpoint", std::string());
    if (auto it = j.find("baseline"); it != j.end() && !it->is_null()) s.baseline = it->get<std::string>();
    s.threshold = j.value("threshold", s.threshold);
    s.run_dir = resolve(j.value("run_dir", std::string("runs")), base_dir);
    if (j.contains("training")) s.training = TrainingConfig::from_json(j.at("training"));

    for (const auto& b : j.at("backends")) {
      BackendSpec bs;
      bs.config = b.value("config", json::object());
      bs.label = b.value("label", bs.config.value("label", std::string("toy")));
      bs.base_template = parse_template(b.value("base_template", std::string("base_plain")));
      if (is_emotion_template(bs.base_template)) throw UsageError("backend '" + bs.label + "': base_template must be a base_* template");
      s.backends.push_back(std::move(bs));
    }
    for (const auto& c : j.at("configurations")) {
      for (const char* key : {"init_from", "checkpoint", "resume_from"}) {
        if (c.contains(key) && !c[key].is_null()) {
          throw UsageError(std::string("configuration sets '") + key +
                           "': every configuration must train from the backend's initial state, not from a checkpoint");
        }
      }
      ConfigurationSpec cs;
      const std::string t = c.value("template", std::string("base"));
      if (t != "base") cs.kind = parse_template(t);
      if (auto it = c.find("dimension"); it != c.end() && !it->is_null()) cs.dimension = parse_dimension(it->get<std::string>());
      const bool emotional = cs.kind && is_emotion_template(*cs.kind);
      if (emotional != cs.dimension.has_value()) {
        throw UsageError("configuration '" + t + "': emotion templates need a dimension and base templates take none");
      }
      s.configurations.push_back(cs);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed experiment spec: ") + e.what());
  }

  if (s.backends.empty()) throw UsageError("experiment spec lists no backends");
  if (s.configurations.empty()) throw UsageError("experiment spec lists no configurations");

  bool any_emotion = false;
  for (const auto& c : s.configurations) any_emotion |= c.dimension.has_value();
  if (any_emotion) {
    std::size_t base_rows = 0;
    for (const auto& c : s.configurations) base_rows += c.dimension ? 0 : 1;
    if (base_rows != 1) {
      throw UsageError("an emotion-conditioning experiment needs exactly one baseline (base template) configuration, found " +
                       std::to_string(base_rows));
    }
    if (!s.annotations && s.ser_endpoint.empty() && env_or_empty("EMOMT_SER_ENDPOINT").empty()) {
      throw UsageError("emotion configurations need an annotations file or a SER endpoint");
    }
  }

  std::set<std::string> labels;
  for (const auto& b : s.backends) {
    for (const auto& c : s.configurations) {
      const auto label = row_label(b, c);
      if (!labels.insert(label).second) throw UsageError("duplicate experiment row '" + label + "'");
    }
  }
  return s;
}

ExperimentSpec ExperimentSpec::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

std::string row_label(const BackendSpec& backend, const ConfigurationSpec& config) {
  if (!config.dimension) {
    if (config.kind && *config.kind != backend.base_template) return backend.label + " [" + std::string(to_string(*config.kind)) + "]";
    return backend.label;
  }
  return backend.label + " +" + std::string(to_string(*config.dimension)) + " " + template_variant(*config.kind);
}

bool ExperimentReport::complete() const {
  if (rows.empty()) return false;
  for (const auto& r : rows)
    if (!r.complete()) return false;
  return true;
}

const ReportRow& ExperimentReport::row(const std::string& label) const {
  for (const auto& r : rows)
    if (r.label == label) return r;
  throw UsageError("no report row labelled '" + label + "'");
}

json ExperimentReport::to_json() const {
  json rs = json::array();
  for (const auto& r : rows) {
    rs.push_back({{"label", r.label},
                  {"bleu_dev", optional_number(r.bleu_dev)},
                  {"bleu_test", optional_number(r.bleu_test)},
                  {"comet_dev", optional_number(r.comet_dev)},
                  {"comet_test", optional_number(r.comet_test)},
                  {"complete", r.complete()},
                  {"backend", r.backend},
                  {"template", r.template_name},
                  {"dimension", r.dimension},
                  {"checkpoint_ref", r.checkpoint_ref},
                  {"initial_checksum", r.initial_checksum},
                  {"epochs_ran", r.epochs_ran},
                  {"run_dir", r.run_dir},
                  {"error", r.error}});
  }
  json ds = json::array();
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!deltas[i]) {
      ds.push_back(nullptr);
      continue;
    }
    const auto& d = *deltas[i];
    ds.push_back({{"label", rows[i].label},
                  {"bleu_dev", d.bleu_dev},
                  {"bleu_test", d.bleu_test},
                  {"comet_dev", d.comet_dev},
                  {"comet_test", d.comet_test}});
  }
  return {{"name", name},
          {"baseline_label", baseline_label},
          {"best_label", best_label ? json(*best_label) : json(nullptr)},
          {"complete", complete()},
          {"rows", std::move(rs)},
          {"deltas", std::move(ds)}};
}

ExperimentReport ExperimentReport::from_json(const json& j) {
  ExperimentReport rep;
  try {
    rep.name = j.value("name", std::string());
    rep.baseline_label = j.value("baseline_label", std::string());
    for (const auto& r : j.at("rows")) {
      ReportRow row;
      row.label = r.at("label").get<std::string>();
      row.bleu_dev = read_optional(r, "bleu_dev");
      row.bleu_test = read_optional(r, "bleu_test");
      row.comet_dev = read_optional(r, "comet_dev");
      row.comet_test = read_optional(r, "comet_test");
      row.backend = r.value("backend", std::string());
      row.template_name = r.value("template", std::string());
      row.dimension = r.value("dimension", std::string());
      row.checkpoint_ref = r.value("checkpoint_ref", std::string());
      row.initial_checksum = r.value("initial_checksum", std::string());
      row.epochs_ran = r.value("epochs_ran", 0);
      row.run_dir = r.value("run_dir", std::string());
      row.error = r.value("error", std::string());
      rep.rows.push_back(std::move(row));
    }
    if (auto it = j.find("best_label"); it != j.end() && !it->is_null()) rep.best_label = it->get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  const std::string baseline = rep.baseline_label;
  if (!baseline.empty() && rep.row(baseline).complete()) rep = compute_deltas(std::move(rep), baseline);
  return rep;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  const Corpus corpus = load_corpus(spec.manifest);

  bool any_emotion = false;
  for (const auto& c : spec.configurations) any_emotion |= c.dimension.has_value();
  std::optional<AnnotationSet> annotations;
  if (any_emotion) {
    std::unique_ptr<EmotionAnnotator> annotator;
    if (spec.annotations) {
      annotator = std::make_unique<FileAnnotator>(*spec.annotations);
    } else {
      const std::string url = spec.ser_endpoint.empty() ? env_or_empty("EMOMT_SER_ENDPOINT") : spec.ser_endpoint;
      annotator = std::make_unique<EndpointAnnotator>(url);
    }
    annotations = annotate(corpus, *annotator);
  }
  auto comet = make_comet_client(spec.comet_endpoint);

  ExperimentReport report;
  report.name = spec.name;
  std::set<std::string> seen_checkpoints;

  for (const auto& backend_spec : spec.backends) {
    for (const auto& config : spec.configurations) {
      ReportRow row;
      row.label = row_label(backend_spec, config);
      const TemplateKind kind = config.kind.value_or(backend_spec.base_template);
      row.template_name = std::string(to_string(kind));
      row.dimension = config.dimension ? std::string(to_string(*config.dimension)) : std::string();
      const auto dir = spec.run_dir / (slug(row.label) + "__seed" + std::to_string(spec.training.seed));
      row.run_dir = dir.string();
      std::cerr << "[emomt] row '" << row.label << "'\n";
      try {
        // A fresh backend per row: nothing carries over between configurations.
        auto backend = make_backend(backend_spec.config);
        row.backend = backend->backend_id();
        std::filesystem::create_directories(dir);
        const PromptSetOptions opts{.dimension = config.dimension,
                                    .annotations = annotations ? &*annotations : nullptr,
                                    .threshold = spec.threshold};
        const auto train_set = build_prompt_set(corpus, Split::train, kind, opts);
        const auto dev_set = build_prompt_set(corpus, Split::dev, kind, opts);
        if (!is_emotion_template(kind)) {
          for (const auto& e : train_set)
            if (has_emotion_markup(e.prompt_text + e.completion_text))
              throw ValidationError("emotion markup leaked into baseline training example '" + e.utterance_id + "'");
        }
        save_prompt_set(train_set, dir / "train.jsonl");
        write_json_file(dir / "config.json", {{"label", row.label},
                                              {"template", row.template_name},
                                              {"dimension", row.dimension},
                                              {"backend", backend->config()},
                                              {"training", spec.training.to_json()},
                                              {"threshold", spec.threshold}});

        const auto handle = train(*backend, train_set, dev_set, spec.training, dir / "model");
        if (!seen_checkpoints.insert(handle.checkpoint_ref).second) {
          throw ValidationError("checkpoint " + handle.checkpoint_ref + " is shared with an earlier row");
        }
        write_json_file(dir / "handle.json", handle.to_json());
        row.checkpoint_ref = handle.checkpoint_ref;
        row.initial_checksum = handle.initial_checksum;
        row.epochs_ran = handle.epochs_ran;

        const EvaluateOptions eval_opts{.annotations = annotations ? &*annotations : nullptr, .threshold = spec.threshold};
        const auto dev = evaluate_run(*backend, handle, corpus, Split::dev, kind, config.dimension, eval_opts, *comet);
        save_evaluation_artifacts(dev, dir);
        const auto test = evaluate_run(*backend, handle, corpus, Split::test, kind, config.dimension, eval_opts, *comet);
        save_evaluation_artifacts(test, dir);
        row.bleu_dev = dev.bleu.score;
        row.comet_dev = dev.comet.score;
        row.bleu_test = test.bleu.score;
        row.comet_test = test.comet.score;
      } catch (const std::exception& e) {
        row.error = e.what();
        std::cerr << "[emomt] row '" << row.label << "' failed: " << e.what() << "\n";
      }
      report.rows.push_back(std::move(row));
    }
  }

  std::string baseline = spec.baseline.value_or(row_label(spec.backends.front(), ConfigurationSpec{}));
  bool has_baseline = false;
  for (const auto& r : report.rows) has_baseline |= r.label == baseline;
  if (!has_baseline) baseline = report.rows.front().label;
  if (report.row(baseline).complete()) report = compute_deltas(std::move(report), baseline);
  else report.baseline_label = baseline;
  if (report.complete()) report.best_label = select_best(report);
  return report;
}

std::string select_best(const ExperimentReport& report) {
  if (report.rows.empty()) throw ValidationError("cannot select from an empty report");
  for (const auto& r : report.rows) {
    if (!r.complete()) throw ValidationError("report row '" + r.label + "' is incomplete");
  }
  const ReportRow* best = &report.rows.front();
  for (const auto& r : report.rows) {
    if (*r.comet_dev > *best->comet_dev || (*r.comet_dev == *best->comet_dev && *r.bleu_dev > *best->bleu_dev)) {
      best = &r;
    }
  }
  return best->label;
}

ExperimentReport compute_deltas(ExperimentReport report, const std::string& baseline_label) {
  const ReportRow& base = report.row(baseline_label);
  if (!base.complete()) throw ValidationError("baseline row '" + baseline_label + "' is incomplete");
  const ReportRow baseline = base;
  report.baseline_label = baseline_label;
  report.deltas.assign(report.rows.size(), std::nullopt);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    if (!r.complete()) continue;
    report.deltas[i] = RowDelta{*r.bleu_dev - *baseline.bleu_dev, *r.bleu_test - *baseline.bleu_test,
                                *r.comet_dev - *baseline.comet_dev, *r.comet_test - *baseline.comet_test};
  }
  return report;
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

std::string render_table(const ExperimentReport& report) {
  std::size_t label_w = 5;
  for (const auto& r : report.rows) label_w = std::max(label_w, r.label.size() + 2);
  constexpr std::size_t cell = 7;
  auto pair_header = [&](const std::string& name) { return pad(name, 2 * cell); };

  std::string out;
  out += pad("Model", label_w) + "  " + pair_header("BLEU") + "  " + pair_header("COMET") + "  " +
         pair_header("Δ BLEU") + "  " + pair_header("Δ COMET") + "\n";
  auto sub = lpad("dev", cell) + lpad("test", cell);
  out += pad("", label_w) + "  " + sub + "  " + sub + "  " + sub + "  " + sub + "\n";
  out += std::string(label_w + 2 + 4 * (2 * cell + 2) - 2, '-') + "\n";

  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    const bool best = report.best_label && *report.best_label == r.label;
    auto num = [&](const std::optional<double>& v) { return lpad(v ? fmt1(*v) : "n/a", cell); };
    std::string line = pad((best ? "* " : "  ") + r.label, label_w) + "  " + num(r.bleu_dev) + num(r.bleu_test) + "  " +
                       num(r.comet_dev) + num(r.comet_test) + "  ";
    if (i < report.deltas.size() && report.deltas[i]) {
      const auto& d = *report.deltas[i];
      line += lpad(fmt1(d.bleu_dev, true), cell) + lpad(fmt1(d.bleu_test, true), cell) + "  " +
              lpad(fmt1(d.comet_dev, true), cell) + lpad(fmt1(d.comet_test, true), cell);
    } else {
      line += lpad("n/a", cell) + lpad("n/a", cell) + "  " + lpad("n/a", cell) + lpad("n/a", cell);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  out += "\nbaseline: " + report.baseline_label;
  if (report.best_label) out += "    best (dev COMET, then dev BLEU): " + *report.best_label;
  out += "\n";
  for (const auto& r : report.rows) {
    if (!r.error.empty()) out += "incomplete: " + r.label + ": " + r.error + "\n";
  }
  return out;
}

}  // namespace emomt
