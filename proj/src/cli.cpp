// Copyright 2026 The AttriPrior Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attriprior/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "attriprior/attribution.hpp"
#include "attriprior/checkpoint.hpp"
#include "attriprior/config.hpp"
#include "attriprior/error.hpp"
#include "attriprior/evaluation.hpp"
#include "attriprior/kernels.hpp"
#include "attriprior/planted_corpus.hpp"
#include "attriprior/training.hpp"

namespace attriprior::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const evaluation::MetricReport& m) {
  return json{{"n", m.n},       {"accuracy", m.accuracy}, {"f1", m.f1},           {"auc", optional_number(m.auc)},
              {"fp", m.fp_rate}, {"fn", m.fn_rate},       {"tp_count", m.tp},     {"fp_count", m.fp},
              {"tn_count", m.tn}, {"fn_count", m.fn}};
}

json bias_json(const evaluation::BiasReport& b) {
  json per_term = json::object();
  for (const auto& [term, r] : b.per_term) {
    per_term[term] = json{{"n", r.n}, {"fpr", optional_number(r.fpr)}, {"fnr", optional_number(r.fnr)}};
  }
  return json{{"auc", optional_number(b.auc)},
              {"fped", b.fped},
              {"fned", b.fned},
              {"overall_fpr", b.overall_fpr},
              {"overall_fnr", b.overall_fnr},
              {"per_term", per_term},
              {"skipped_fpr", b.skipped_fpr},
              {"skipped_fnr", b.skipped_fnr}};
}

json epoch_json(const training::EpochRecord& r, const std::string& phase) {
  return json{{"phase", phase},
              {"epoch", r.epoch},
              {"loss", r.loss},
              {"cross_entropy", r.cross_entropy},
              {"prior", r.prior},
              {"dev_accuracy", r.dev_accuracy},
              {"dev_f1", r.dev_f1},
              {"dev_auc", optional_number(r.dev_auc)}};
}

std::string fixed(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string fixed(const std::optional<double>& v, int precision = 4) { return v ? fixed(*v, precision) : "n/a"; }

std::vector<std::string> load_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::vector<int> labels_of(const std::vector<text::TokenizedExample>& examples) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.label);
  return out;
}

// Synthetic template set for the bias report, encoded for `vocab`.
struct SyntheticEval {
  std::vector<text::TokenizedExample> examples;
  std::vector<std::string> tags;
};

std::optional<SyntheticEval> synthetic_eval(const config::ExperimentConfig& cfg, const text::Vocabulary& vocab,
                                            const text::TermList* identity) {
  if (cfg.paths.templates.empty()) return std::nullopt;
  if (!identity) throw Error("data.templates requires data.identity_terms");
  text::TemplateSet set;
  set.templates = text::TemplateSet::load_templates(cfg.paths.templates);
  set.identity_fill = identity->terms();
  if (!cfg.paths.names.empty()) set.name_fill = load_lines(cfg.paths.names);
  SyntheticEval out;
  std::vector<text::LabeledText> rows;
  for (auto& s : text::generate_synthetic(set)) {
    rows.push_back({std::move(s.text), s.label});
    out.tags.push_back(std::move(s.identity));
  }
  out.examples = training::encode_for_mode(rows, vocab, cfg.mode, identity, cfg.model.max_seq_len);
  return out;
}

training::Splits load_splits(const config::ExperimentConfig& cfg) {
  const std::size_t c = cfg.model.num_classes;
  return {text::load_dataset(cfg.paths.train, c), text::load_dataset(cfg.paths.dev, c),
          text::load_dataset(cfg.paths.test, c)};
}

void apply_overrides(config::ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed,
                     const std::optional<std::size_t>& ig_steps, const std::string& out) {
  if (seed) cfg.seeds = {*seed};
  if (ig_steps) {
    cfg.train.ig.steps = *ig_steps;
    cfg.train.ig.validate();
  }
  if (!out.empty()) cfg.paths.output_dir = out;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ig_steps;
  std::string out;
};

int cmd_train(const TrainOptions& opt) {
  config::ExperimentConfig cfg = config::load_config(opt.config);
  apply_overrides(cfg, opt.seed, opt.ig_steps, opt.out);
  const training::Splits splits = load_splits(cfg);
  const std::optional<text::TermList> identity = cfg.identity_list();
  const text::TermList* id_ptr = identity ? &*identity : nullptr;
  const training::TrainMode data_mode =
      cfg.mode == training::TrainMode::Finetune ? training::TrainMode::Baseline : cfg.mode;
  const training::PreparedData data = training::prepare_data(splits, data_mode, id_ptr, cfg.data);
  const std::optional<training::TargetSpec> spec = cfg.target_spec();
  const training::TargetSpec* joint_spec = cfg.mode == training::TrainMode::Joint && spec ? &*spec : nullptr;
  const std::optional<SyntheticEval> synth = synthetic_eval(cfg, data.vocab, id_ptr);
  const std::vector<int> test_labels = labels_of(data.test);

  OutputSet outputs;
  json runs = json::array();
  std::map<std::string, std::vector<double>> series;
  for (std::uint64_t seed : cfg.seeds) {
    training::TrainConfig tc = cfg.train;
    tc.seed = seed;
    const model::ModelParams init = model::init_params(cfg.model, data.vocab.size(), seed);
    std::string history;
    auto log = [&history](const std::string& phase) {
      return [&history, phase](const training::EpochRecord& r) { history += epoch_json(r, phase).dump() + "\n"; };
    };
    training::TrainResult result = training::train(init, data.train, data.dev, joint_spec, tc, log("train"));
    if (cfg.mode == training::TrainMode::Finetune) {
      result = training::finetune(result.params, data.train, data.dev, *spec, tc, cfg.finetune_epochs,
                                  log("finetune"));
    }

    const fs::path dir = cfg.paths.output_dir / ("seed-" + std::to_string(seed));
    model::save_checkpoint(outputs.add(dir / "model.ckpt"), model::Checkpoint{result.params, data.vocab});
    outputs.write_text(dir / "history.jsonl", history);

    const auto test = evaluation::classification_metrics(model::predict_scores(result.params, data.test), test_labels);
    json run{{"seed", seed}, {"best_epoch", result.best_epoch}, {"test", metrics_json(test)}};
    series["test_accuracy"].push_back(test.accuracy);
    series["test_f1"].push_back(test.f1);
    if (test.auc) series["test_auc"].push_back(*test.auc);
    if (synth) {
      const auto bias = evaluation::equality_differences(model::predict_scores(result.params, synth->examples),
                                                         labels_of(synth->examples), synth->tags);
      run["synthetic"] = bias_json(bias);
      series["synthetic_fped"].push_back(bias.fped);
      series["synthetic_fned"].push_back(bias.fned);
      if (bias.auc) series["synthetic_auc"].push_back(*bias.auc);
    }
    runs.push_back(run);
    std::cout << "seed " << seed << ": best epoch " << result.best_epoch << ", test acc " << fixed(test.accuracy)
              << ", f1 " << fixed(test.f1) << ", auc " << fixed(test.auc) << "\n";
  }

  json stats = json::object();
  std::cout << "\nsummary over " << cfg.seeds.size() << " run(s), mode " << training::to_string(cfg.mode) << "\n";
  for (const auto& [name, values] : series) {
    const Stats s = mean_variance(values);
    stats[name] = json{{"mean", s.mean}, {"variance", s.variance}};
    std::cout << "  " << std::left << std::setw(16) << name << fixed(s.mean) << " +- " << fixed(s.variance, 6) << "\n";
  }
  json summary{{"mode", training::to_string(cfg.mode)}, {"seeds", cfg.seeds}, {"stats", stats}, {"runs", runs}};
  outputs.write_text(cfg.paths.output_dir / "summary.json", summary.dump(2) + "\n");
  outputs.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string checkpoint;
  std::string data;
  std::string tags;
  std::string filter;
  std::string replace_identity;
  double threshold = evaluation::kDefaultThreshold;
  std::string out;
};

void print_metrics(const std::string& title, const evaluation::MetricReport& m) {
  std::cout << title << " (n=" << m.n << ")\n"
            << "  accuracy " << fixed(m.accuracy) << "  f1 " << fixed(m.f1) << "  auc " << fixed(m.auc) << "  fp "
            << fixed(m.fp_rate) << "  fn " << fixed(m.fn_rate) << "\n";
}

int cmd_eval(const EvalOptions& opt) {
  const model::Checkpoint ckpt = model::load_checkpoint(opt.checkpoint);
  const std::size_t classes = ckpt.params.config.num_classes;
  if (ckpt.vocab.size() != ckpt.params.vocab_size()) throw Error("eval: checkpoint vocabulary does not match embedding");
  const std::vector<text::LabeledText> rows = text::load_dataset(opt.data, classes);
  if (rows.empty()) throw Error("eval: dataset is empty");

  std::optional<text::TermList> replace;
  if (!opt.replace_identity.empty()) replace = text::TermList::load(opt.replace_identity, text::TermKind::Identity);
  const auto mode = replace ? training::TrainMode::TokReplace : training::TrainMode::Baseline;
  const auto examples = training::encode_for_mode(rows, ckpt.vocab, mode, replace ? &*replace : nullptr,
                                                  ckpt.params.config.max_seq_len);
  const std::vector<double> scores = model::predict_scores(ckpt.params, examples);
  const std::vector<int> labels = labels_of(examples);

  std::string records;
  const auto all = evaluation::classification_metrics(scores, labels, opt.threshold);
  records += json{{"kind", "metrics"}, {"subset", "all"}, {"metrics", metrics_json(all)}}.dump() + "\n";
  print_metrics("all examples", all);

  fs::path tag_path = opt.tags;
  if (tag_path.empty() && fs::exists(opt.data + ".terms")) tag_path = opt.data + ".terms";
  if (!tag_path.empty()) {
    const std::vector<std::string> tags = load_lines(tag_path);
    const auto bias = evaluation::equality_differences(scores, labels, tags, opt.threshold);
    records += json{{"kind", "bias"}, {"report", bias_json(bias)}}.dump() + "\n";
    std::cout << "synthetic bias: auc " << fixed(bias.auc) << "  fped " << fixed(bias.fped) << "  fned "
              << fixed(bias.fned) << "\n";
    std::cout << "  " << std::left << std::setw(16) << "term" << std::setw(8) << "n" << std::setw(10) << "fpr"
              << "fnr\n";
    for (const auto& [term, r] : bias.per_term) {
      std::cout << "  " << std::left << std::setw(16) << term << std::setw(8) << r.n << std::setw(10)
                << fixed(r.fpr, 3) << fixed(r.fnr, 3) << "\n";
    }
  }

  if (!opt.filter.empty()) {
    const text::TermList terms = text::TermList::load(opt.filter, text::TermKind::Identity);
    const auto idx = evaluation::filter_by_terms(examples, terms);
    if (idx.empty()) {
      records += json{{"kind", "metrics"}, {"subset", "filtered"}, {"empty", true}}.dump() + "\n";
      std::cout << "filtered subset is empty; no metrics reported\n";
    } else {
      const auto sub = evaluation::classification_metrics(evaluation::select(scores, idx),
                                                          evaluation::select(labels, idx), opt.threshold);
      records += json{{"kind", "metrics"}, {"subset", "filtered"}, {"metrics", metrics_json(sub)}}.dump() + "\n";
      print_metrics("examples with filter terms", sub);
    }
  }

  OutputSet outputs;
  if (!opt.out.empty()) outputs.write_text(opt.out, records);
  outputs.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// attribute

struct AttributeOptions {
  std::string checkpoint;
  std::string text;
  std::string file;
  bool labeled = false;
  std::size_t ig_steps = attribution::IGConfig::kDefaultSteps;
  std::size_t target_class = 1;
  std::string out;
};

int cmd_attribute(const AttributeOptions& opt) {
  const model::Checkpoint ckpt = model::load_checkpoint(opt.checkpoint);
  const std::size_t max_len = ckpt.params.config.max_seq_len;
  std::vector<text::LabeledText> inputs;
  std::vector<bool> has_label;
  if (!opt.text.empty()) {
    inputs.push_back({opt.text, 0});
    has_label.push_back(false);
  } else if (opt.labeled) {
    inputs = text::load_dataset(opt.file, ckpt.params.config.num_classes);
    has_label.assign(inputs.size(), true);
  } else {
    for (auto& line : load_lines(opt.file)) inputs.push_back({std::move(line), 0});
    has_label.assign(inputs.size(), false);
  }
  if (inputs.empty()) throw Error("attribute: no input text");

  attribution::IGConfig ig;
  ig.steps = opt.ig_steps;
  ig.target_class = opt.target_class;
  if (opt.target_class >= ckpt.params.config.num_classes) throw Error("attribute: target class out of range");

  std::string records;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const text::Tokens raw = text::tokenize(inputs[i].text);
    if (raw.empty()) throw Error("attribute: empty text on input " + std::to_string(i + 1));
    const text::TokenizedExample ex = text::make_example(raw, inputs[i].label, ckpt.vocab, max_len);
    const attribution::AttributionVector av = attribution::attribute_example(ckpt.params, ex.token_ids, ig);
    const model::Prediction pred = model::predict(ckpt.params, ex.token_ids);

    const std::size_t visible = std::min(raw.size(), max_len);
    text::Tokens shown;
    std::vector<double> values;
    for (std::size_t t = 0; t < visible; ++t) {
      shown.push_back(ckpt.vocab.token(ex.token_ids[t]));
      values.push_back(av.per_token[t]);
    }
    const std::size_t predicted = static_cast<std::size_t>(
        std::max_element(pred.probs.data().begin(), pred.probs.data().end()) - pred.probs.data().begin());
    json rec{{"text", inputs[i].text},
             {"tokens", shown},
             {"attributions", values},
             {"probability", pred.prob(ig.target_class)},
             {"prediction", predicted}};
    rec["label"] = has_label[i] ? json(inputs[i].label) : json(nullptr);
    records += rec.dump() + "\n";
    std::cout << "p(class " << ig.target_class << ") = " << fixed(pred.prob(ig.target_class)) << "  "
              << render_attributions(shown, Tensor::vector(values)) << "\n";
  }
  OutputSet outputs;
  if (!opt.out.empty()) outputs.write_text(opt.out, records);
  outputs.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::string templates;
  std::string identity;
  std::string names;
  std::string out;
};

int cmd_synth(const SynthOptions& opt) {
  text::TemplateSet set;
  set.templates = text::TemplateSet::load_templates(opt.templates);
  set.identity_fill = text::TermList::load(opt.identity, text::TermKind::Identity).terms();
  if (!opt.names.empty()) set.name_fill = load_lines(opt.names);
  const auto rows = text::generate_synthetic(set);

  std::string data, tags;
  for (const auto& r : rows) {
    data += std::to_string(r.label) + "\t" + r.text + "\n";
    tags += r.identity + "\n";
  }
  OutputSet outputs;
  outputs.write_text(opt.out, data);
  outputs.write_text(opt.out + ".terms", tags);
  outputs.commit();
  std::cout << "wrote " << rows.size() << " examples to " << opt.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// scarcity

struct ScarcityOptions {
  std::string config;
  std::vector<double> ratios{0.01, 0.05, 0.1, 0.2, 0.4};
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ig_steps;
  std::string out;
};

int cmd_scarcity(const ScarcityOptions& opt) {
  config::ExperimentConfig cfg = config::load_config(opt.config);
  apply_overrides(cfg, opt.seed, opt.ig_steps, opt.out);
  for (double r : opt.ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw Error("scarcity: ratios must lie in (0, 1]");
  }
  if (cfg.paths.toxic_terms.empty() && cfg.prior.preset != config::PriorPreset::Scarcity) {
    throw Error("scarcity: data.toxic_terms or a scarcity prior is required");
  }
  training::TargetSpec spec = cfg.prior.preset == config::PriorPreset::Scarcity
                                  ? *cfg.target_spec()
                                  : training::TargetSpec::scarcity(
                                        text::TermList::load(cfg.paths.toxic_terms, text::TermKind::Toxic));
  const training::Splits splits = load_splits(cfg);
  // The vocabulary always comes from the full training split.
  const training::PreparedData data = training::prepare_data(splits, training::TrainMode::Baseline, nullptr, cfg.data);
  const std::vector<int> test_labels = labels_of(data.test);

  std::vector<int> rule_pred;
  for (const auto& ex : data.test) rule_pred.push_back(evaluation::rule_based_classify(ex.tokens, spec.terms));
  std::size_t rule_correct = 0;
  for (std::size_t i = 0; i < rule_pred.size(); ++i) rule_correct += rule_pred[i] == test_labels[i];
  const double rule_acc = static_cast<double>(rule_correct) / static_cast<double>(test_labels.size());

  std::string records;
  std::cout << std::left << std::setw(8) << "ratio" << std::setw(12) << "baseline" << std::setw(12) << "joint"
            << "rule-based\n";
  for (double ratio : opt.ratios) {
    std::vector<double> base_acc, joint_acc, base_attr, joint_attr;
    for (std::uint64_t seed : cfg.seeds) {
      training::TrainConfig tc = cfg.train;
      tc.seed = seed;
      const auto rows = training::subsample_training(splits.train, ratio, seed);
      const auto train = training::encode_for_mode(rows, data.vocab, training::TrainMode::Baseline, nullptr,
                                                   cfg.model.max_seq_len);
      const model::ModelParams init = model::init_params(cfg.model, data.vocab.size(), seed);
      for (const bool joint : {false, true}) {
        const auto result = training::train(init, train, data.dev, joint ? &spec : nullptr, tc);
        const auto m =
            evaluation::classification_metrics(model::predict_scores(result.params, data.test), test_labels);
        const auto attr = evaluation::mean_term_attribution(result.params, data.test, spec.terms, tc.ig);
        double mean_attr = 0.0;
        for (const auto& [term, v] : attr.mean) mean_attr += v / static_cast<double>(attr.mean.size());
        (joint ? joint_acc : base_acc).push_back(m.accuracy);
        (joint ? joint_attr : base_attr).push_back(mean_attr);
      }
    }
    const Stats b = mean_variance(base_acc), j = mean_variance(joint_acc);
    const Stats ba = mean_variance(base_attr), ja = mean_variance(joint_attr);
    records += json{{"ratio", ratio},
                    {"baseline_accuracy", b.mean},
                    {"baseline_variance", b.variance},
                    {"joint_accuracy", j.mean},
                    {"joint_variance", j.variance},
                    {"rule_based_accuracy", rule_acc},
                    {"baseline_toxic_attribution", ba.mean},
                    {"joint_toxic_attribution", ja.mean}}
                   .dump() +
               "\n";
    std::cout << std::left << std::setw(8) << ratio << std::setw(12) << fixed(b.mean) << std::setw(12)
              << fixed(j.mean) << fixed(rule_acc) << "\n";
  }
  OutputSet outputs;
  outputs.write_text(cfg.paths.output_dir / "scarcity.jsonl", records);
  outputs.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string config;
  int min_exp = 0;
  int max_exp = 8;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ig_steps;
  std::string out;
};

int cmd_sweep(const SweepOptions& opt) {
  config::ExperimentConfig cfg = config::load_config(opt.config);
  apply_overrides(cfg, opt.seed, opt.ig_steps, opt.out);
  if (opt.max_exp < opt.min_exp) throw Error("sweep: max exponent below min exponent");
  const std::optional<training::TargetSpec> spec = cfg.target_spec();
  if (!spec) throw Error("sweep: the config needs a [prior] preset");
  const training::Splits splits = load_splits(cfg);
  const std::optional<text::TermList> identity = cfg.identity_list();
  const training::PreparedData data = training::prepare_data(splits, training::TrainMode::Baseline,
                                                             identity ? &*identity : nullptr, cfg.data);
  training::TrainConfig tc = cfg.train;
  tc.seed = cfg.seeds.front();
  const model::ModelParams init = model::init_params(cfg.model, data.vocab.size(), tc.seed);
  std::vector<int> exponents;
  for (int e = opt.min_exp; e <= opt.max_exp; ++e) exponents.push_back(e);
  const auto points = training::sweep_lambda(init, data.train, data.dev, *spec, tc, exponents);

  std::string records;
  std::vector<double> f1s;
  for (const auto& p : points) {
    records += json{{"lambda", p.lambda}, {"dev_f1", p.dev_f1}}.dump() + "\n";
    f1s.push_back(p.dev_f1);
    std::cout << "lambda " << std::left << std::setw(10) << p.lambda << " dev f1 " << fixed(p.dev_f1) << "\n";
  }
  const std::size_t best = training::select_best_epoch(f1s);
  std::cout << "best lambda " << points[best].lambda << "\n";
  OutputSet outputs;
  outputs.write_text(cfg.paths.output_dir / "sweep.jsonl", records);
  outputs.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// planted

struct PlantedOptions {
  std::string out;
  std::uint64_t seed = 7;
  std::size_t examples = 10000;
};

std::string rows_text(const std::vector<text::LabeledText>& rows) {
  std::string s;
  for (const auto& r : rows) s += std::to_string(r.label) + "\t" + r.text + "\n";
  return s;
}

std::string lines_text(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

int cmd_planted(const PlantedOptions& opt) {
  planted::PlantedConfig pc;
  pc.seed = opt.seed;
  pc.examples = opt.examples;
  const training::Splits splits = planted::generate(pc);
  const fs::path dir = opt.out;

  std::string templates;
  for (const auto& t : planted::evaluation_templates()) {
    templates += t.pattern + "\t" + (t.label ? "toxic" : "non-toxic") + "\n";
  }
  config::ExperimentConfig cfg;
  // Paths are relative to the config file, which sits next to the data.
  cfg.paths = {"train.tsv", "dev.tsv", "test.tsv", "templates.tsv", "names.txt", "identity.txt", "toxic.txt", "out"};
  cfg.model.embed_dim = 32;
  cfg.model.filters_per_width = 32;
  cfg.model.max_seq_len = 16;
  cfg.data.min_frequency = 2;
  cfg.train.batch_size = 32;
  cfg.train.epochs = 20;
  cfg.train.ig.steps = attribution::IGConfig::kFastSteps;
  cfg.mode = training::TrainMode::Joint;
  cfg.prior.preset = config::PriorPreset::Fairness;
  // The preset's 1e6 stalls learning on a corpus this small.
  cfg.prior.lambda = 1e3;

  std::ostringstream ini;
  config::write_config(ini, cfg);

  OutputSet outputs;
  outputs.write_text(dir / "train.tsv", rows_text(splits.train));
  outputs.write_text(dir / "dev.tsv", rows_text(splits.dev));
  outputs.write_text(dir / "test.tsv", rows_text(splits.test));
  outputs.write_text(dir / "identity.txt", lines_text(planted::identity_terms(pc).terms()));
  outputs.write_text(dir / "toxic.txt", lines_text(planted::toxic_words()));
  outputs.write_text(dir / "names.txt", lines_text(planted::names()));
  outputs.write_text(dir / "templates.tsv", templates);
  outputs.write_text(dir / "experiment.ini", ini.str());
  outputs.commit();
  std::cout << "wrote planted corpus (" << splits.train.size() << "/" << splits.dev.size() << "/"
            << splits.test.size() << ") to " << dir.string() << "\n";
  return 0;
}

}  // namespace

Stats mean_variance(std::span<const double> values) {
  Stats s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.variance += (v - s.mean) * (v - s.mean);
  s.variance /= static_cast<double>(values.size());
  return s;
}

std::string render_attributions(const text::Tokens& tokens, const Tensor& per_token, int precision) {
  if (per_token.numel() < tokens.size()) throw ShapeError("render_attributions: fewer attributions than tokens");
  std::ostringstream os;
  os << std::showpos << std::fixed << std::setprecision(precision);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) os << ' ';
    os << tokens[i] << '[' << per_token[i] << ']';
  }
  return os.str();
}

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
  for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) {
    if (fs::is_directory(*it, ec) && fs::is_empty(*it, ec)) fs::remove(*it, ec);
  }
}

void OutputSet::make_dirs(const fs::path& dir) {
  if (dir.empty() || fs::exists(dir)) return;
  make_dirs(dir.parent_path());
  fs::create_directory(dir);
  dirs_.push_back(dir);
}

const fs::path& OutputSet::add(const fs::path& path) {
  make_dirs(path.parent_path());
  files_.push_back(path);
  return files_.back();
}

void OutputSet::write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(add(path), std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write " + path.string());
}

int run(int argc, char** argv) {
  kernels::configure_threads_from_env();
  CLI::App app{"Train text classifiers with attribution priors and evaluate them for bias."};
  app.require_subcommand(1);

  TrainOptions train_opt;
  auto* train = app.add_subcommand("train", "train one model per seed from an experiment config");
  train->add_option("--config", train_opt.config, "experiment config")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", train_opt.seed, "train only this seed");
  train->add_option("--ig-steps", train_opt.ig_steps, "Riemann steps of the attribution path integral");
  train->add_option("--out", train_opt.out, "output directory (overrides data.output_dir)");

  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a labeled dataset");
  eval->add_option("--checkpoint", eval_opt.checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_opt.data, "label<TAB>text dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--tags", eval_opt.tags, "identity tag per example (default: <data>.terms if present)")
      ->check(CLI::ExistingFile);
  eval->add_option("--filter", eval_opt.filter, "also report metrics on examples containing these terms")
      ->check(CLI::ExistingFile);
  eval->add_option("--replace-identity", eval_opt.replace_identity,
                   "map these terms to <id> before scoring (token-replacement models)")
      ->check(CLI::ExistingFile);
  eval->add_option("--threshold", eval_opt.threshold, "decision threshold")->capture_default_str();
  eval->add_option("--out", eval_opt.out, "write JSON-lines report here");

  AttributeOptions attr_opt;
  auto* attribute = app.add_subcommand("attribute", "per-token Integrated Gradients attributions");
  attribute->add_option("--checkpoint", attr_opt.checkpoint, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  auto* text_opt = attribute->add_option("--text", attr_opt.text, "text to attribute");
  auto* file_opt = attribute->add_option("--file", attr_opt.file, "one text per line")->check(CLI::ExistingFile);
  text_opt->excludes(file_opt);
  attribute->add_flag("--labeled", attr_opt.labeled, "--file holds label<TAB>text lines")->needs(file_opt);
  attribute->add_option("--ig-steps", attr_opt.ig_steps, "Riemann steps")->capture_default_str();
  attribute->add_option("--target-class", attr_opt.target_class, "class whose posterior is attributed")
      ->capture_default_str();
  attribute->add_option("--out", attr_opt.out, "write JSON-lines records here");

  SynthOptions synth_opt;
  auto* synth = app.add_subcommand("synth", "expand templates into a labeled synthetic dataset");
  synth->add_option("--templates", synth_opt.templates, "pattern<TAB>label lines")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--identity", synth_opt.identity, "identity terms")->required()->check(CLI::ExistingFile);
  synth->add_option("--names", synth_opt.names, "names for the name slot")->check(CLI::ExistingFile);
  synth->add_option("--out", synth_opt.out, "dataset path; tags go to <out>.terms")->required();

  ScarcityOptions scarcity_opt;
  auto* scarcity = app.add_subcommand("scarcity", "test accuracy against training-set size");
  scarcity->add_option("--config", scarcity_opt.config, "experiment config")->required()->check(CLI::ExistingFile);
  scarcity->add_option("--ratios", scarcity_opt.ratios, "training fractions in (0, 1]")
      ->delimiter(',')
      ->capture_default_str();
  scarcity->add_option("--seed", scarcity_opt.seed, "run only this seed");
  scarcity->add_option("--ig-steps", scarcity_opt.ig_steps, "Riemann steps");
  scarcity->add_option("--out", scarcity_opt.out, "output directory");

  SweepOptions sweep_opt;
  auto* sweep = app.add_subcommand("sweep", "dev F1 for lambda = 10^min .. 10^max");
  sweep->add_option("--config", sweep_opt.config, "experiment config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--min-exp", sweep_opt.min_exp, "smallest exponent")->capture_default_str();
  sweep->add_option("--max-exp", sweep_opt.max_exp, "largest exponent")->capture_default_str();
  sweep->add_option("--seed", sweep_opt.seed, "seed");
  sweep->add_option("--ig-steps", sweep_opt.ig_steps, "Riemann steps");
  sweep->add_option("--out", sweep_opt.out, "output directory");

  PlantedOptions planted_opt;
  auto* planted_cmd = app.add_subcommand("planted", "write the planted-bias toy corpus and a matching config");
  planted_cmd->add_option("--out", planted_opt.out, "output directory")->required();
  planted_cmd->add_option("--seed", planted_opt.seed, "generator seed")->capture_default_str();
  planted_cmd->add_option("--examples", planted_opt.examples, "number of sentences")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(train_opt);
    if (*eval) return cmd_eval(eval_opt);
    if (*attribute) {
      if (attr_opt.text.empty() && attr_opt.file.empty()) throw Error("attribute: give --text or --file");
      return cmd_attribute(attr_opt);
    }
    if (*synth) return cmd_synth(synth_opt);
    if (*scarcity) return cmd_scarcity(scarcity_opt);
    if (*sweep) return cmd_sweep(sweep_opt);
    if (*planted_cmd) return cmd_planted(planted_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace attriprior::cli
