#include "qsep/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qsep {

std::string format_double(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

namespace {

double round_to(double x, int digits) { return std::stod(format_double(x, digits)); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(where + ": cannot parse number '" + s + "'");
  }
}

std::string split_name(Split s) { return s == Split::Grid ? "grid" : "margin"; }

}  // namespace

std::string DatasetTable::plan() const { return sidecar.value("plan", json::object()).value("name", ""); }

bool DatasetTable::theory() const { return sidecar.value("theory", false); }

SourceModel DatasetTable::source() const {
  if (!sidecar.contains("source")) return SourceModel{};
  return source_from_json(sidecar.at("source"));
}

DatasetTable to_table(const Dataset& ds) {
  DatasetTable t;
  t.sidecar = sidecar_json(ds.provenance);
  t.rows.reserve(ds.samples.size());
  for (const LabeledSample& s : ds.samples) {
    DatasetRow r;
    r.theta = round_to(s.theta, 12);
    r.phi = round_to(s.phi, 12);
    r.p = round_to(s.p, 12);
    for (int k = 0; k < 4; ++k) r.f[k] = round_to(s.features[k], 12);
    r.label = to_int(s.label);
    r.seed = ds.provenance.spec.seed;
    t.rows.push_back(r);
  }
  return t;
}

std::string dataset_csv(const DatasetTable& t) {
  std::string out = std::string(kDatasetHeader) + "\n";
  for (const DatasetRow& r : t.rows) {
    out += format_double(r.theta, 12) + "," + format_double(r.phi, 12) + "," + format_double(r.p, 12);
    for (double f : r.f) out += "," + format_double(f, 12);
    out += "," + std::to_string(r.label) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  return p;
}

void write_dataset(const std::filesystem::path& csv, const DatasetTable& t) {
  write_text(csv, dataset_csv(t));
  write_json(sidecar_path(csv), t.sidecar);
}

DatasetTable read_dataset(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw std::invalid_argument("cannot open dataset " + csv.string());
  std::string line;
  if (!std::getline(in, line) || line != kDatasetHeader)
    throw std::invalid_argument(csv.string() + ": unexpected header");
  DatasetTable t;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = csv.string() + ":" + std::to_string(lineno);
    if (cells.size() != 9) throw std::invalid_argument(where + ": expected 9 columns");
    DatasetRow r;
    r.theta = parse_double(cells[0], where);
    r.phi = parse_double(cells[1], where);
    r.p = parse_double(cells[2], where);
    for (int k = 0; k < 4; ++k) r.f[k] = parse_double(cells[3 + k], where);
    if (cells[7] != "0" && cells[7] != "1") throw std::invalid_argument(where + ": label must be 0 or 1");
    r.label = cells[7] == "1";
    const auto [ptr, ec] = std::from_chars(cells[8].data(), cells[8].data() + cells[8].size(), r.seed);
    if (ec != std::errc{} || ptr != cells[8].data() + cells[8].size())
      throw std::invalid_argument(where + ": bad seed");
    t.rows.push_back(r);
  }
  const auto side = sidecar_path(csv);
  t.sidecar = std::filesystem::exists(side) ? read_json(side) : json::object();
  return t;
}

void write_matrices(const std::filesystem::path& csv, const Dataset& ds) {
  std::string out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (!out.empty()) out += ",";
      out += "re" + std::to_string(i) + std::to_string(j) + ",im" + std::to_string(i) + std::to_string(j);
    }
  out += "\n";
  for (const LabeledSample& s : ds.samples) {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const Complex z = s.reconstructed(i, j);
        if (i + j > 0) out += ",";
        out += format_double(z.real(), 12) + "," + format_double(z.imag(), 12);
      }
    out += "\n";
  }
  write_text(csv, out);
}

std::vector<Example> examples(const DatasetTable& t) {
  std::vector<Example> out;
  out.reserve(t.rows.size());
  for (const DatasetRow& r : t.rows) out.push_back(Example{r.f, r.label});
  return out;
}

json to_json(const SourceModel& m) { return json{{"v", m.v}, {"d", m.d}, {"g", m.g}}; }

SourceModel source_from_json(const json& j) {
  SourceModel m{j.value("v", 1.0), j.value("d", 1.0), j.value("g", 0.0)};
  m.validate();
  return m;
}

json to_json(const ProtocolSpec& s) {
  return json{{"protocol", to_string(s.kind)},
              {"thetas", s.thetas},
              {"phis", s.phis},
              {"p_grid", s.p_grid},
              {"margin_count", s.margin_count},
              {"margin_halfwidth", s.margin_halfwidth},
              {"plan", s.plan},
              {"shots", s.shots},
              {"seed", s.seed}};
}

json to_json(const FeaturePlan& p) {
  auto dir = [](const BlochDirection& d) { return json::array({d.x(), d.y(), d.z()}); };
  return json{{"name", p.name}, {"a0", dir(p.a0)}, {"a0p", dir(p.a0p)}, {"b0", dir(p.b0)}, {"b0p", dir(p.b0p)}};
}

json sidecar_json(const Provenance& p) {
  return json{{"spec", to_json(p.spec)},
              {"source", to_json(p.source)},
              {"seed", p.spec.seed},
              {"plan", to_json(plan_by_name(p.spec.plan))},
              {"split", split_name(p.split)},
              {"theory", p.theory},
              {"acquisition", p.acquisition},
              {"substreams",
               "pool: (seed, 'pool', fnv1a(acquisition, or 'pool' for both nonlinear splits), theta_index, phi_index); "
               "sample: (seed, 'samp', fnv1a(acquisition), theta_index, phi_index, p_index, 0); "
               "margin p: (seed, 'marg', fnv1a(acquisition), theta_index, phi_index, draw)"}};
}

json to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate}, {"epochs", c.epochs},     {"init_halfwidth", c.init_halfwidth},
              {"seed", c.seed},                   {"threshold", c.threshold}, {"max_halvings", c.max_halvings},
              {"standardize", c.standardize}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.init_halfwidth = j.value("init_halfwidth", c.init_halfwidth);
  c.seed = j.value("seed", c.seed);
  c.threshold = j.value("threshold", c.threshold);
  c.max_halvings = j.value("max_halvings", c.max_halvings);
  c.standardize = j.value("standardize", c.standardize);
  return c;
}

json model_json(const ModelFile& m) {
  const Arch arch = arch_of(m.model);
  json weights = json::array();
  for (double w : flatten(m.model)) weights.push_back(json::parse(format_double(w, 17)));
  return json{{"arch", arch.name()},
              {"n_ne", arch.n_ne},
              {"weights", weights},
              {"plan", m.plan},
              {"threshold", m.threshold},
              {"train_config", to_json(m.config)},
              {"dataset_provenance", m.dataset_provenance}};
}

ModelFile model_from_json(const json& j) {
  try {
    const std::string arch = j.at("arch").get<std::string>();
    const int n_ne = j.at("n_ne").get<int>();
    if (arch != "linear" && arch != "mlp") throw std::invalid_argument("model: unknown arch '" + arch + "'");
    if ((arch == "linear") != (n_ne == 0)) throw std::invalid_argument("model: arch and n_ne disagree");
    const auto w = j.at("weights").get<std::vector<double>>();
    ModelFile m{unflatten(Arch{n_ne}, w), j.at("plan").get<std::string>(), j.value("threshold", 0.5),
                train_config_from_json(j.value("train_config", json::object())),
                j.value("dataset_provenance", json::object())};
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

}  // namespace qsep
