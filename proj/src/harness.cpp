#include "qsep/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qsep/svg.hpp"

namespace qsep {

namespace {

constexpr double kNearBoundary = 0.1;

std::string fmt(double x) { return format_double(x, 12); }

std::string angle_label(double rad) {
  const double over_pi = rad / std::numbers::pi;
  return "theta=" + format_double(over_pi, 4) + "pi";
}

std::string phase_label(double rad) { return "phi=" + format_double(rad / std::numbers::pi, 4) + "pi"; }

bool same(double a, double b) { return std::abs(a - b) <= 1e-9; }

}  // namespace

double table_boundary(const DatasetTable& t, double theta, double phi) {
  const auto star = t.theory() ? ppt_boundary(theta, phi) : noisy_boundary(theta, phi, t.source());
  return star ? *star : std::numeric_limits<double>::quiet_NaN();
}

ClassifierScore score_predictions(const std::string& name, const DatasetTable& t, const std::vector<int>& predicted) {
  if (predicted.size() != t.rows.size()) throw std::invalid_argument("prediction count does not match dataset");
  if (t.rows.empty()) throw DegenerateDataError("evaluation set is empty");
  ClassifierScore s;
  s.name = name;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const DatasetRow& r = t.rows[i];
    auto it = std::find_if(s.per_state.begin(), s.per_state.end(),
                           [&](const StateRate& x) { return same(x.theta, r.theta) && same(x.phi, r.phi); });
    if (it == s.per_state.end()) {
      s.per_state.push_back(StateRate{r.theta, r.phi, table_boundary(t, r.theta, r.phi), 0, 0});
      it = std::prev(s.per_state.end());
    }
    const bool ok = predicted[i] == r.label;
    ++it->n;
    it->hits += ok;
    hits += ok;
    if (r.label == 1)
      (predicted[i] == 1 ? s.confusion.true_entangled : s.confusion.false_separable)++;
    else
      (predicted[i] == 1 ? s.confusion.false_entangled : s.confusion.true_separable)++;
    if (!ok) s.mismatches.push_back(Mismatch{r.theta, r.phi, r.p, it->p_star, r.label, predicted[i]});
  }
  s.overall = double(hits) / double(t.rows.size());
  if (!s.mismatches.empty()) {
    std::size_t near = 0;
    for (const Mismatch& m : s.mismatches) near += std::abs(m.p - m.p_star) < kNearBoundary;
    s.near_boundary_fraction = double(near) / double(s.mismatches.size());
  }
  return s;
}

std::vector<int> predict_all(const Model& m, const DatasetTable& t, double threshold) {
  std::vector<int> out;
  out.reserve(t.rows.size());
  for (const DatasetRow& r : t.rows) out.push_back(to_int(predict(m, r.f, threshold)));
  return out;
}

std::vector<int> chsh_baseline_predictions(const DatasetTable& t) {
  std::vector<int> out;
  out.reserve(t.rows.size());
  for (const DatasetRow& r : t.rows) out.push_back(to_int(chsh_classifier_best(r.f)));
  return out;
}

EvalReport evaluate(const ModelFile& model, const DatasetTable& t) {
  const std::string plan = t.plan();
  if (model.plan != plan)
    throw PlanMismatchError("model was trained on plan '" + model.plan + "' but the dataset uses plan '" + plan + "'");
  EvalReport r;
  r.model = score_predictions(arch_of(model.model).is_linear() ? "linear" : "mlp" + std::to_string(arch_of(model.model).n_ne),
                              t, predict_all(model.model, t, model.threshold));
  if (plan == "xz") r.baseline = score_predictions("standard_chsh", t, chsh_baseline_predictions(t));
  return r;
}

json to_json(const ClassifierScore& s) {
  json states = json::array();
  for (const StateRate& x : s.per_state)
    states.push_back(json{{"theta", x.theta},
                          {"phi", x.phi},
                          {"p_star", std::isfinite(x.p_star) ? json(x.p_star) : json(nullptr)},
                          {"n", x.n},
                          {"matches", x.hits},
                          {"match_rate", x.rate()}});
  double mean_of_states = 0.0;
  for (const StateRate& x : s.per_state) mean_of_states += x.rate();
  mean_of_states /= double(std::max<std::size_t>(s.per_state.size(), 1));
  return json{{"classifier", s.name},
              {"overall_match_rate", s.overall},
              {"mean_state_match_rate", mean_of_states},
              {"per_state", states},
              {"confusion",
               {{"true_entangled", s.confusion.true_entangled},
                {"true_separable", s.confusion.true_separable},
                {"false_entangled", s.confusion.false_entangled},
                {"false_separable", s.confusion.false_separable}}},
              {"mismatch_count", s.mismatches.size()},
              {"mismatch_near_boundary_fraction", s.near_boundary_fraction}};
}

json to_json(const EvalReport& r) {
  json j{{"model", to_json(r.model)}};
  j["baseline"] = r.baseline ? to_json(*r.baseline) : json(nullptr);
  return j;
}

std::string mismatch_csv(const ClassifierScore& s) {
  std::string out = "theta,phi,p,p_star,label,predicted\n";
  for (const Mismatch& m : s.mismatches)
    out += fmt(m.theta) + "," + fmt(m.phi) + "," + fmt(m.p) + "," + fmt(m.p_star) + "," + std::to_string(m.label) +
           "," + std::to_string(m.predicted) + "\n";
  return out;
}

void write_artifacts(const std::filesystem::path& dir, const Artifacts& a) {
  for (const auto& [name, content] : a) write_text(dir / name, content);
}

SourceModel default_source() {
  static const SourceModel m = calibrate_source(0.914, 0.927).model;
  return m;
}

ReproduceOptions default_reproduce_options(std::uint64_t seed) {
  ReproduceOptions o;
  o.seed = seed;
  o.source = default_source();
  o.train.seed = seed;
  return o;
}

json to_json(const ReproduceOptions& o) {
  return json{{"seed", o.seed},
              {"shots", o.shots},
              {"source", to_json(o.source)},
              {"train_config", to_json(o.train)},
              {"hidden_widths", o.hidden_widths}};
}

namespace {

TrainedClassifier fit(const Arch& arch, const DatasetTable& train, const DatasetTable& test, const std::string& plan,
                      const TrainConfig& cfg) {
  const auto data = examples(train);
  TrainResult r = qsep::train(data, arch, cfg);
  ModelFile mf{r.model, plan, cfg.threshold, cfg, train.sidecar};
  const std::string name = arch.is_linear() ? "linear" : "mlp" + std::to_string(arch.n_ne);
  ClassifierScore score = score_predictions(name, test, predict_all(mf.model, test, cfg.threshold));
  return TrainedClassifier{arch, std::move(mf), std::move(r.report), std::move(score)};
}

std::string labels_header(const std::vector<std::string>& names) {
  std::string h = "theta,phi,p,p_star,true_label";
  for (const auto& n : names) h += "," + n;
  return h + "\n";
}

}  // namespace

LinearStudy run_linear_study(const ReproduceOptions& o) {
  ProtocolSpec spec = default_linear_spec(o.seed);
  spec.shots = o.shots;
  LinearStudy s;
  s.train = to_table(gen_linear_dataset(spec, o.source, "train"));
  s.test = to_table(gen_linear_dataset(spec, o.source, "test"));
  TrainedClassifier c = fit(Arch{0}, s.train, s.test, spec.plan, o.train);
  s.model = std::move(c.model);
  s.report = std::move(c.report);
  s.eval = evaluate(s.model, s.test);
  return s;
}

NonlinearStudy run_nonlinear_study(const ReproduceOptions& o, bool with_theory) {
  ProtocolSpec spec = default_nonlinear_spec(o.seed);
  spec.shots = o.shots;
  TrainTest tt = gen_nonlinear_dataset(spec, o.source);
  NonlinearStudy s;
  s.train = to_table(tt.train);
  s.test = to_table(tt.test);
  std::vector<Arch> archs{Arch{0}};
  for (int n : o.hidden_widths) archs.push_back(Arch{n});
  for (const Arch& a : archs) s.experiment.push_back(fit(a, s.train, s.test, spec.plan, o.train));
  if (with_theory) {
    s.theory_train = to_table(gen_theory_dataset(spec, Split::Margin));
    for (const Arch& a : archs) s.theory.push_back(fit(a, s.theory_train, s.test, spec.plan, o.train));
  }
  return s;
}

namespace {

svg::WheelSection wheel_section(const StateRate& st, const DatasetTable& t, const std::vector<int>& pred) {
  svg::WheelSection w{angle_label(st.theta), st.p_star, {}};
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (same(t.rows[i].theta, st.theta) && same(t.rows[i].phi, st.phi)) w.points.emplace_back(t.rows[i].p, pred[i]);
  return w;
}

Artifacts label_wheel_artifacts(const std::string& prefix, const std::string& title, const DatasetTable& test,
                                const std::vector<std::pair<std::string, std::vector<int>>>& classifiers,
                                const ClassifierScore& first_score) {
  Artifacts a;
  std::vector<std::string> names;
  for (const auto& c : classifiers) names.push_back(c.first);
  std::string labels = labels_header(names);
  for (std::size_t i = 0; i < test.rows.size(); ++i) {
    const DatasetRow& r = test.rows[i];
    labels += fmt(r.theta) + "," + fmt(r.phi) + "," + fmt(r.p) + "," + fmt(table_boundary(test, r.theta, r.phi)) +
              "," + std::to_string(r.label);
    for (const auto& c : classifiers) labels += "," + std::to_string(c.second[i]);
    labels += "\n";
  }
  a[prefix + "_labels.csv"] = labels;
  std::vector<svg::WheelSection> sections;
  for (const StateRate& st : first_score.per_state) sections.push_back(wheel_section(st, test, classifiers[0].second));
  a[prefix + ".svg"] = svg::label_wheel(title, sections);
  return a;
}

std::string match_table(const std::vector<ClassifierScore>& scores) {
  std::string out = "theta,phi,n";
  for (const auto& s : scores) out += "," + s.name;
  out += "\n";
  const auto& states = scores.front().per_state;
  for (std::size_t k = 0; k < states.size(); ++k) {
    out += fmt(states[k].theta) + "," + fmt(states[k].phi) + "," + std::to_string(states[k].n);
    for (const auto& s : scores) out += "," + fmt(s.per_state[k].rate());
    out += "\n";
  }
  out += "all,all," + std::to_string(scores.front().per_state.empty() ? 0 : [&] {
    std::size_t n = 0;
    for (const auto& st : states) n += st.n;
    return n;
  }());
  for (const auto& s : scores) out += "," + fmt(s.overall);
  return out + "\n";
}

}  // namespace

Artifacts fig3_artifacts(const LinearStudy& s) {
  const auto linear = predict_all(s.model.model, s.test, s.model.threshold);
  const auto chsh = chsh_baseline_predictions(s.test);
  Artifacts a = label_wheel_artifacts("fig3", "Linear classifier labels (gray: PPT separable)", s.test,
                                      {{"linear", linear}, {"standard_chsh", chsh}}, s.eval.model);
  a["fig3_test.csv"] = dataset_csv(s.test);
  a["fig3_train.csv"] = dataset_csv(s.train);
  a["fig3_model.json"] = model_json(s.model).dump(2) + "\n";
  a["fig3_eval.json"] = to_json(s.eval).dump(2) + "\n";
  a["fig3_mismatches.csv"] = mismatch_csv(s.eval.model);
  std::vector<ClassifierScore> scores{s.eval.model};
  if (s.eval.baseline) scores.push_back(*s.eval.baseline);
  a["fig3_match.csv"] = match_table(scores);

  std::vector<std::string> cats;
  std::vector<svg::Series> series;
  for (const auto& sc : scores) series.push_back({sc.name, {}});
  for (std::size_t k = 0; k < s.eval.model.per_state.size(); ++k) {
    cats.push_back(angle_label(s.eval.model.per_state[k].theta));
    for (std::size_t c = 0; c < scores.size(); ++c) series[c].values.push_back(scores[c].per_state[k].rate());
  }
  cats.push_back("all");
  for (std::size_t c = 0; c < scores.size(); ++c) series[c].values.push_back(scores[c].overall);
  a["fig3_match.svg"] = svg::bar_chart("Match rate: trained linear vs standard CHSH", cats, series, 0.0, 1.0);
  return a;
}

Artifacts figS1_artifacts(const LinearStudy& s) {
  const auto chsh = chsh_baseline_predictions(s.test);
  const ClassifierScore score = score_predictions("standard_chsh", s.test, chsh);
  Artifacts a = label_wheel_artifacts("figS1", "Standard CHSH labels (gray: PPT separable)", s.test,
                                      {{"standard_chsh", chsh}}, score);
  a["figS1_match.csv"] = match_table({score});
  return a;
}

Artifacts fig4_artifacts(const NonlinearStudy& s) {
  Artifacts a;
  std::vector<std::string> names;
  std::vector<ClassifierScore> scores;
  std::vector<std::vector<int>> preds;
  for (const auto& c : s.experiment) {
    names.push_back(c.score.name);
    scores.push_back(c.score);
    preds.push_back(predict_all(c.model.model, s.test, c.model.threshold));
  }
  std::string labels = labels_header(names);
  for (std::size_t i = 0; i < s.test.rows.size(); ++i) {
    const DatasetRow& r = s.test.rows[i];
    labels += fmt(r.theta) + "," + fmt(r.phi) + "," + fmt(r.p) + "," + fmt(table_boundary(s.test, r.theta, r.phi)) +
              "," + std::to_string(r.label);
    for (const auto& p : preds) labels += "," + std::to_string(p[i]);
    labels += "\n";
  }
  a["fig4_labels.csv"] = labels;
  a["fig4_match.csv"] = match_table(scores);
  a["fig4_train.csv"] = dataset_csv(s.train);
  a["fig4_test.csv"] = dataset_csv(s.test);
  for (const auto& c : s.experiment) a["fig4_model_" + c.score.name + ".json"] = model_json(c.model).dump(2) + "\n";

  // One wheel per classifier, sections ordered by phase class then theta.
  for (std::size_t c = 0; c < s.experiment.size(); ++c) {
    std::vector<svg::WheelSection> sections;
    for (const StateRate& st : scores[c].per_state) {
      svg::WheelSection w = wheel_section(st, s.test, preds[c]);
      w.label = phase_label(st.phi) + " " + format_double(st.theta / std::numbers::pi, 3) + "pi";
      sections.push_back(std::move(w));
    }
    a["fig4_" + names[c] + ".svg"] = svg::label_wheel(names[c] + " labels (gray: PPT separable)", sections);
  }
  return a;
}

Artifacts fig5_artifacts(const NonlinearStudy& s) {
  Artifacts a;
  std::string table = "n_ne,training,overall";
  const auto& states = s.experiment.front().score.per_state;
  for (const StateRate& st : states) table += "," + phase_label(st.phi) + "_" + angle_label(st.theta);
  table += "\n";
  std::vector<std::string> x;
  svg::Series exp_series{"experiment-trained", {}}, th_series{"theory-trained", {}};
  auto row = [&](const TrainedClassifier& c, const std::string& kind) {
    std::string line = std::to_string(c.arch.n_ne) + "," + kind + "," + fmt(c.score.overall);
    for (const StateRate& st : c.score.per_state) line += "," + fmt(st.rate());
    return line + "\n";
  };
  for (std::size_t i = 0; i < s.experiment.size(); ++i) {
    x.push_back(std::to_string(s.experiment[i].arch.n_ne));
    table += row(s.experiment[i], "experiment");
    exp_series.values.push_back(s.experiment[i].score.overall);
  }
  for (const auto& c : s.theory) {
    table += row(c, "theory");
    th_series.values.push_back(c.score.overall);
  }
  a["fig5_match.csv"] = table;
  a["fig5_theory_train.csv"] = s.theory.empty() ? std::string() : dataset_csv(s.theory_train);
  std::vector<svg::Series> series{exp_series};
  if (!s.theory.empty()) series.push_back(th_series);
  a["fig5.svg"] = svg::line_chart("Match rate vs hidden neurons (0 = linear)", x, series, 0.8, 1.0);
  return a;
}

Artifacts reproduce(const std::string& figure, const ReproduceOptions& o) {
  Artifacts a;
  if (figure == "fig3" || figure == "figS1") {
    const LinearStudy s = run_linear_study(o);
    a = figure == "fig3" ? fig3_artifacts(s) : figS1_artifacts(s);
  } else if (figure == "fig4") {
    a = fig4_artifacts(run_nonlinear_study(o, false));
  } else if (figure == "fig5") {
    a = fig5_artifacts(run_nonlinear_study(o, true));
  } else {
    throw std::invalid_argument("unknown figure '" + figure + "' (expected fig3, fig4, fig5, figS1)");
  }
  a["provenance.json"] = json{{"command", "reproduce"}, {"figure", figure}, {"options", to_json(o)}}.dump(2) + "\n";
  return a;
}

}  // namespace qsep
