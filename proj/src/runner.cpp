#include "morphconn/runner.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "morphconn/csv.hpp"
#include "morphconn/error.hpp"
#include "morphconn/features.hpp"
#include "morphconn/random.hpp"
#include "morphconn/select.hpp"
#include "morphconn/sha256.hpp"
#include "morphconn/synth.hpp"

namespace morphconn::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::vector<std::string> kPathFields = {"atlas", "phenotypes", "morphometry", "stats_dir",
                                              "output_dir"};

// Fields that only affect where/how fast a run executes, not what it computes.
const std::vector<std::string> kExecutionOnlyFields = {"output_dir", "jobs"};

}  // namespace

json default_config() {
  json j;
  j["atlas"] = "bundled";
  j["phenotypes"] = nullptr;
  j["morphometry"] = nullptr;
  j["stats_dir"] = nullptr;
  j["output_dir"] = "out";
  j["join"] = "strict";
  j["bands"] = {"6to11", "11to18", "6to18"};
  j["feature_kinds"] = {"MF", "MCF"};
  j["alpha"] = 0.05;
  j["ttest"] = "welch";
  j["selection_scope"] = "train_only";
  j["standardization_scope"] = "train_only";
  j["standardization_pool"] = "band";
  json forest = to_json(ForestParams{});
  forest.erase("seed");
  forest.erase("criterion");
  j["forest"] = forest;
  j["split"] = {{"train_fraction", 0.8}, {"stratify_by_label", true}};
  j["top_k"] = 100;
  j["edge_criterion"] = "pvalue";
  j["repeats"] = 1;
  j["seed"] = nullptr;
  j["jobs"] = 1;
  return j;
}

json load_config_file(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("MissingFile", "config file not found: " + path.string());
  json j;
  try {
    j = json::parse(csv::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("BadConfig", path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("BadConfig", path.string() + ": expected a JSON object");
  if (j.value("schema", "") == "morphconn-manifest") {
    j = j.at("config");
  }
  const fs::path base = fs::absolute(path).parent_path();
  for (const auto& field : kPathFields) {
    if (!j.contains(field) || !j[field].is_string()) continue;
    const std::string v = j[field].get<std::string>();
    if (field == "atlas" && v == "bundled") continue;
    const fs::path p(v);
    if (p.is_relative()) j[field] = (base / p).lexically_normal().string();
  }
  return j;
}

namespace {

template <typename T, typename Parse>
T parse_enum(const json& j, const std::string& field, Parse parse) {
  const auto& v = j.at(field);
  if (!v.is_string()) throw ConfigError("BadConfig", "config field '" + field + "' must be a string");
  const auto parsed = parse(v.get<std::string>());
  if (!parsed) {
    throw ConfigError("BadConfig", "config field '" + field + "': unknown value '" + v.get<std::string>() + "'");
  }
  return *parsed;
}

std::optional<fs::path> opt_path(const json& j, const std::string& field) {
  if (!j.contains(field) || j[field].is_null()) return std::nullopt;
  return fs::path(j[field].get<std::string>());
}

AgeBand parse_band(const json& b) {
  if (b.is_string()) return band_by_label(b.get<std::string>());
  AgeBand band{b.at("label").get<std::string>(), b.at("lower").get<double>(),
               b.at("upper").get<double>(), b.value("upper_inclusive", false)};
  if (!(band.lower < band.upper)) {
    throw ConfigError("BadConfig", "band '" + band.label + "': lower must be < upper");
  }
  return band;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  try {
    c.atlas = j.at("atlas").get<std::string>();
    c.phenotypes = opt_path(j, "phenotypes");
    c.morphometry = opt_path(j, "morphometry");
    c.stats_dir = opt_path(j, "stats_dir");
    c.output_dir = j.at("output_dir").get<std::string>();
    const auto join = j.at("join").get<std::string>();
    if (join != "strict" && join != "lenient") {
      throw ConfigError("BadConfig", "config field 'join' must be strict or lenient");
    }
    c.join = join == "strict" ? JoinMode::kStrict : JoinMode::kLenient;
    for (const auto& b : j.at("bands")) c.bands.push_back(parse_band(b));
    for (const auto& k : j.at("feature_kinds")) {
      const auto kind = parse_feature_kind(k.get<std::string>());
      if (!kind) throw ConfigError("BadConfig", "config field 'feature_kinds': unknown kind");
      c.kinds.push_back(*kind);
    }
    if (c.bands.empty() || c.kinds.empty()) {
      throw ConfigError("BadConfig", "config fields 'bands' and 'feature_kinds' must be nonempty");
    }
    auto& e = c.experiment;
    e.alpha = j.at("alpha").get<double>();
    if (!(e.alpha >= 0.0 && e.alpha <= 1.0)) {
      throw ConfigError("BadConfig", "config field 'alpha' must lie in [0, 1]");
    }
    e.ttest = parse_enum<TTestVariant>(j, "ttest", parse_ttest_variant);
    e.selection_scope = parse_enum<FitScope>(j, "selection_scope", parse_fit_scope);
    e.standardization_scope = parse_enum<FitScope>(j, "standardization_scope", parse_fit_scope);
    e.standardization_pool =
        parse_enum<StandardizationPool>(j, "standardization_pool", parse_standardization_pool);
    e.forest = forest_params_from_json(j.at("forest"));
    if (e.forest.n_trees < 1) throw ConfigError("BadConfig", "config field 'forest.n_trees' must be >= 1");
    e.split.train_fraction = j.at("split").at("train_fraction").get<double>();
    e.split.stratify_by_label = j.at("split").value("stratify_by_label", true);
    if (!(e.split.train_fraction > 0.0 && e.split.train_fraction < 1.0)) {
      throw ConfigError("BadConfig", "config field 'split.train_fraction' must lie in (0, 1)");
    }
    e.top_k = j.at("top_k").get<std::size_t>();
    e.edge_criterion = parse_enum<EdgeCriterion>(j, "edge_criterion", parse_edge_criterion);
    e.repeats = j.at("repeats").get<int>();
    if (e.repeats < 1) throw ConfigError("BadConfig", "config field 'repeats' must be >= 1");
    if (!j.at("seed").is_null()) {
      c.seed = j.at("seed").get<std::uint64_t>();
      e.master_seed = *c.seed;
    }
    c.jobs = j.at("jobs").get<int>();
    if (c.jobs < 1) throw ConfigError("BadConfig", "config field 'jobs' must be >= 1");
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("BadConfig", ex.what());
  }
  return c;
}

void require_inputs(const RunConfig& c, bool need_data) {
  if (!c.seed) {
    throw ConfigError("MissingSeed",
                      "config field 'seed' is required (set it in the config or pass --seed)");
  }
  if (c.atlas != "bundled" && !fs::exists(c.atlas)) {
    throw ConfigError("MissingFile", "config field 'atlas': no such file: " + c.atlas);
  }
  if (!need_data) return;
  if (!c.phenotypes) throw ConfigError("MissingField", "config field 'phenotypes' is required");
  if (!fs::exists(*c.phenotypes)) {
    throw ConfigError("MissingFile", "config field 'phenotypes': no such file: " + c.phenotypes->string());
  }
  if (!c.morphometry && !c.stats_dir) {
    throw ConfigError("MissingField", "config field 'morphometry' (or 'stats_dir') is required");
  }
  if (c.morphometry && !fs::exists(*c.morphometry)) {
    throw ConfigError("MissingFile", "config field 'morphometry': no such file: " + c.morphometry->string());
  }
  if (c.stats_dir && !fs::is_directory(*c.stats_dir)) {
    throw ConfigError("MissingFile", "config field 'stats_dir': no such directory: " + c.stats_dir->string());
  }
}

namespace {

/// Raw flag values; an option only lands in the override layer if given.
struct Flags {
  std::string config;
  std::string seed;
  int jobs = 0;
  std::string out;
  std::string atlas, phenotypes, morphometry, stats_dir, join;
  std::vector<std::string> bands, kinds;
  std::string alpha, ttest, selection_scope, standardization_scope, standardization_pool;
  int n_trees = 0;
  std::string max_features, max_depth;
  std::string train_fraction;
  int top_k = -1;
  std::string criterion;
  int repeats = 0;
  std::string spec;
  std::string model;
};


void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file (flags override it)");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--jobs", f.jobs, "Experiment cells run in parallel")->check(CLI::PositiveNumber);
  app->add_option("--out", f.out, "Output directory");
}

void add_data(CLI::App* app, Flags& f) {
  app->add_option("--atlas", f.atlas, "Atlas CSV or 'bundled'");
  app->add_option("--phenotypes", f.phenotypes, "Phenotype CSV");
  app->add_option("--morphometry", f.morphometry, "Wide morphometry CSV");
  app->add_option("--stats-dir", f.stats_dir, "Directory of per-subject FreeSurfer stats directories");
  app->add_option("--join", f.join, "strict | lenient");
}

void add_experiment(CLI::App* app, Flags& f) {
  app->add_option("--band", f.bands, "Age band label (repeatable)");
  app->add_option("--kind", f.kinds, "Feature kind mf | mcf (repeatable)");
  app->add_option("--alpha", f.alpha, "Selection threshold, p < alpha");
  app->add_option("--ttest", f.ttest, "welch | pooled");
  app->add_option("--selection-scope", f.selection_scope, "train_only | full_cohort");
  app->add_option("--standardization-scope", f.standardization_scope, "train_only | full_cohort");
  app->add_option("--standardization-pool", f.standardization_pool, "band | cohort");
  app->add_option("--n-trees", f.n_trees, "Trees in the forest");
  app->add_option("--max-features", f.max_features, "Features per split, integer or 'sqrt'");
  app->add_option("--max-depth", f.max_depth, "Maximum tree depth or 'none'");
  app->add_option("--train-fraction", f.train_fraction, "Training fraction of the split");
  app->add_option("--top-k", f.top_k, "Edges exported per MCF report");
  app->add_option("--criterion", f.criterion, "Edge ranking: pvalue | gini_importance");
  app->add_option("--repeats", f.repeats, "Repeat each cell over independent seeds (extension)");
}

double flag_double(const std::string& name, const std::string& v) {
  const auto d = csv::parse_double(v);
  if (!d) throw ConfigError("BadFlag", "--" + name + " expects a number, got '" + v + "'");
  return *d;
}

json flag_layer(const Flags& f) {
  json j = json::object();
  if (!f.seed.empty()) {
    const auto s = csv::parse_int(f.seed);
    if (!s || *s < 0) throw ConfigError("BadFlag", "--seed expects a non-negative integer");
    j["seed"] = static_cast<std::uint64_t>(*s);
  }
  if (f.jobs > 0) j["jobs"] = f.jobs;
  if (!f.out.empty()) j["output_dir"] = f.out;
  if (!f.atlas.empty()) j["atlas"] = f.atlas;
  if (!f.phenotypes.empty()) j["phenotypes"] = f.phenotypes;
  if (!f.morphometry.empty()) j["morphometry"] = f.morphometry;
  if (!f.stats_dir.empty()) j["stats_dir"] = f.stats_dir;
  if (!f.join.empty()) j["join"] = f.join;
  if (!f.bands.empty()) j["bands"] = f.bands;
  if (!f.kinds.empty()) j["feature_kinds"] = f.kinds;
  if (!f.alpha.empty()) j["alpha"] = flag_double("alpha", f.alpha);
  if (!f.ttest.empty()) j["ttest"] = f.ttest;
  if (!f.selection_scope.empty()) j["selection_scope"] = f.selection_scope;
  if (!f.standardization_scope.empty()) j["standardization_scope"] = f.standardization_scope;
  if (!f.standardization_pool.empty()) j["standardization_pool"] = f.standardization_pool;
  if (f.n_trees > 0) j["forest"]["n_trees"] = f.n_trees;
  if (!f.max_features.empty()) {
    if (f.max_features == "sqrt") {
      j["forest"]["max_features"] = "sqrt";
    } else {
      const auto v = csv::parse_int(f.max_features);
      if (!v) throw ConfigError("BadFlag", "--max-features expects an integer or 'sqrt'");
      j["forest"]["max_features"] = *v;
    }
  }
  if (!f.max_depth.empty()) {
    if (f.max_depth == "none") {
      j["forest"]["max_depth"] = nullptr;
    } else {
      const auto v = csv::parse_int(f.max_depth);
      if (!v) throw ConfigError("BadFlag", "--max-depth expects an integer or 'none'");
      j["forest"]["max_depth"] = *v;
    }
  }
  if (!f.train_fraction.empty()) j["split"]["train_fraction"] = flag_double("train-fraction", f.train_fraction);
  if (f.top_k >= 0) j["top_k"] = f.top_k;
  if (!f.criterion.empty()) j["edge_criterion"] = f.criterion;
  if (f.repeats > 0) j["repeats"] = f.repeats;
  return j;
}

/// Object-aware merge where `null` in the patch is a value, not a deletion.
void merge(json& base, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      merge(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

json effective_config(const Flags& f) {
  json j = default_config();
  if (!f.config.empty()) merge(j, load_config_file(f.config));
  merge(j, flag_layer(f));
  return j;
}

json manifest_config(json j) {
  for (const auto& k : kExecutionOnlyFields) j.erase(k);
  return j;
}

void print_effective(std::ostream& out, const json& j) {
  out << "effective config:\n" << j.dump(2) << "\n";
}

struct LoadedData {
  CohortDataset cohort;
  std::vector<std::string> dropped;
  std::map<std::string, std::string> hashes;
};

LoadedData load_data(const RunConfig& c) {
  try {
    LoadedData d;
    const Atlas atlas = load_atlas_or_bundled(c.atlas);
    d.hashes["atlas"] = atlas.hash();
    d.hashes["phenotypes"] = sha256_file(*c.phenotypes);
    auto phenotypes = parse_phenotypes(*c.phenotypes);
    std::vector<MorphometryRecord> morph;
    if (c.morphometry) {
      d.hashes["morphometry"] = sha256_file(*c.morphometry);
      morph = parse_morphometry_wide(*c.morphometry, atlas);
    } else {
      morph = parse_freesurfer_tree(*c.stats_dir, atlas);
      d.hashes["morphometry"] = sha256_hex(morphometry_to_wide_csv(morph, atlas));
    }
    auto joined = build_cohort(std::move(phenotypes), std::move(morph), atlas, c.join);
    d.cohort = std::move(joined.dataset);
    d.dropped = std::move(joined.dropped);
    return d;
  } catch (const ValidationError& e) {
    throw ValidationError(e.code(), "[ingest] " + e.message());
  }
}

std::string cell_name(const AgeBand& band, FeatureKind kind) {
  return band.label + "_" + std::string(to_string(kind));
}

struct Cell {
  AgeBand band;
  FeatureKind kind;
};

std::vector<Cell> cells_of(const RunConfig& c) {
  std::vector<Cell> cells;
  for (const auto& b : c.bands) {
    for (FeatureKind k : c.kinds) cells.push_back({b, k});
  }
  return cells;
}

/// Runs fn(i) for every cell, up to `jobs` at once. Exceptions are rethrown in
/// cell order after all cells finish.
template <typename Fn>
void for_each_cell(std::size_t n, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for num_threads(jobs) schedule(dynamic) if (jobs > 1)
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ExperimentConfig cell_config(const RunConfig& c, const std::map<std::string, std::string>& hashes) {
  ExperimentConfig e = c.experiment;
  e.input_hashes = hashes;
  // Nested parallelism is off; inner kernels run serially when cells run in parallel.
  e.execution = c.jobs > 1 ? Execution::kSerial : Execution::kParallel;
  return e;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

int cmd_synth(const Flags& f, std::ostream& out) {
  if (f.spec.empty()) throw ConfigError("MissingField", "--spec is required");
  if (!fs::exists(f.spec)) throw ConfigError("MissingFile", "synth spec not found: " + f.spec);
  json spec_json;
  try {
    spec_json = json::parse(csv::read_file(f.spec));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("BadSynthSpec", e.what());
  }
  std::optional<std::uint64_t> seed;
  if (!f.seed.empty()) {
    const auto s = csv::parse_int(f.seed);
    if (!s || *s < 0) throw ConfigError("BadFlag", "--seed expects a non-negative integer");
    seed = static_cast<std::uint64_t>(*s);
  }
  const SynthSpec spec = synth_spec_from_json(spec_json, fs::absolute(f.spec).parent_path(), seed);
  json effective = spec_json;
  effective["seed"] = spec.seed;
  const fs::path dir = f.out.empty() ? fs::path("out") : fs::path(f.out);
  effective["output_dir"] = dir.string();
  print_effective(out, effective);

  const SynthCohort cohort = generate_cohort(spec);
  csv::write_file(dir / "phenotypes.csv", phenotypes_to_csv(cohort.phenotypes));
  csv::write_file(dir / "morphometry.csv", morphometry_to_wide_csv(cohort.morphometry, cohort.atlas));
  if (!(cohort.atlas == bundled_atlas())) csv::write_file(dir / "atlas.csv", cohort.atlas.to_csv());
  out << "wrote " << cohort.phenotypes.size() << " subjects to " << dir.string() << "\n";
  return 0;
}

int cmd_ingest(const RunConfig& c, std::ostream& out) {
  const LoadedData d = load_data(c);
  for (const auto& id : d.dropped) out << "warning: dropped unmatched subject " << id << "\n";
  std::vector<std::pair<AgeBand, DemographicSummary>> rows;
  json demo;
  for (const auto& b : c.bands) {
    const auto s = demographic_summary(stratify(d.cohort, b));
    rows.emplace_back(b, s);
    demo[b.label] = to_json(s);
  }
  csv::write_file(c.output_dir / "cohort_phenotypes.csv", phenotypes_to_csv(d.cohort.phenotypes));
  csv::write_file(c.output_dir / "cohort_morphometry.csv",
                  morphometry_to_wide_csv(d.cohort.morphometry, d.cohort.atlas));
  csv::write_file(c.output_dir / "demographics.json", dump(demo));
  const std::string table = demographic_table(rows);
  csv::write_file(c.output_dir / "demographics.txt", table);
  out << d.cohort.size() << " subjects, " << d.cohort.atlas.size() << " regions\n" << table;
  return 0;
}

std::string feature_cache_key(const RunConfig& c, const LoadedData& d, const AgeBand& band,
                              FeatureKind kind) {
  std::ostringstream key;
  key << d.hashes.at("phenotypes") << '/' << d.hashes.at("morphometry") << '/' << band.label << '/'
      << band.lower << '/' << band.upper << '/' << band.upper_inclusive << '/' << to_string(kind)
      << '/' << to_string(c.experiment.standardization_scope) << '/'
      << to_string(c.experiment.standardization_pool) << '/' << c.experiment.master_seed << '/'
      << csv::format_double(c.experiment.split.train_fraction) << '/'
      << c.experiment.split.stratify_by_label;
  return sha256_hex(key.str());
}

int cmd_features(const RunConfig& c, std::ostream& out) {
  const LoadedData d = load_data(c);
  const auto cells = cells_of(c);
  const auto cfg = cell_config(c, d.hashes);
  std::vector<std::string> messages(cells.size());
  for_each_cell(cells.size(), c.jobs, [&](std::size_t i) {
    const auto& cell = cells[i];
    const std::string name = cell_name(cell.band, cell.kind);
    const fs::path cache = c.output_dir / "cache" / ("features_" + name + ".bin");
    const std::string key = feature_cache_key(c, d, cell.band, cell.kind);
    std::optional<FeatureMatrix> m = read_feature_cache(cache, d.cohort.atlas, key);
    const bool hit = m.has_value();
    if (!hit) {
      m = prepare_cell(d.cohort, cell.band, cell.kind, cfg).features;
      write_feature_cache(cache, *m, key);
    }
    csv::write_file(c.output_dir / ("features_" + name + ".csv"),
                    feature_matrix_to_csv(*m, d.cohort.atlas));
    messages[i] = name + ": " + std::to_string(m->rows()) + " subjects x " +
                  std::to_string(m->cols()) + " features" + (hit ? " (cached)" : "") + "\n";
  });
  for (const auto& m : messages) out << m;
  return 0;
}

int cmd_select(const RunConfig& c, std::ostream& out) {
  const LoadedData d = load_data(c);
  const auto cells = cells_of(c);
  const auto cfg = cell_config(c, d.hashes);
  std::vector<std::string> messages(cells.size());
  for_each_cell(cells.size(), c.jobs, [&](std::size_t i) {
    const auto& cell = cells[i];
    const std::string name = cell_name(cell.band, cell.kind);
    const auto prepared = prepare_cell(d.cohort, cell.band, cell.kind, cfg);
    const auto sel = select_cell(prepared, cfg);
    csv::write_file(c.output_dir / ("selection_" + name + ".csv"), selection_to_csv(sel, d.cohort.atlas));
    messages[i] = name + ": selected " + std::to_string(sel.selected_count) + " of " +
                  std::to_string(sel.results.size()) + " features\n";
  });
  for (const auto& m : messages) out << m;
  return 0;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  const LoadedData d = load_data(c);
  const auto cells = cells_of(c);
  const auto cfg = cell_config(c, d.hashes);
  std::vector<std::string> messages(cells.size());
  for_each_cell(cells.size(), c.jobs, [&](std::size_t i) {
    const auto& cell = cells[i];
    const std::string name = cell_name(cell.band, cell.kind);
    const auto prepared = prepare_cell(d.cohort, cell.band, cell.kind, cfg);
    const auto sel = select_cell(prepared, cfg);
    ForestParams fp = cfg.forest;
    fp.seed = forest_seed(cfg.master_seed, cell.band.label, cell.kind, 0);
    const auto model = train_cell(prepared, sel, fp, cfg.execution);
    json doc = to_json(model);
    auto features = json::array();
    for (std::size_t col : sel.selected_columns()) {
      features.push_back(descriptor_name(prepared.features.descriptors[col], d.cohort.atlas));
    }
    doc["feature_names"] = std::move(features);
    csv::write_file(c.output_dir / ("model_" + name + ".json"), dump(doc));
    messages[i] = name + ": trained " + std::to_string(model.trees.size()) + " trees on " +
                  std::to_string(model.n_features) + " features\n";
  });
  for (const auto& m : messages) out << m;
  return 0;
}

struct CellOutputs {
  ExperimentReport report;
  std::string json_text;
  std::string text;
  std::string log;
};

std::vector<CellOutputs> run_cells(const RunConfig& c, const LoadedData& d) {
  const auto cells = cells_of(c);
  const auto cfg = cell_config(c, d.hashes);
  std::vector<CellOutputs> results(cells.size());
  for_each_cell(cells.size(), c.jobs, [&](std::size_t i) {
    const auto& cell = cells[i];
    auto& r = results[i];
    r.report = run_experiment(d.cohort, cell.band, cell.kind, cfg);
    r.json_text = dump(to_json(r.report, cfg, d.cohort.atlas));
    r.text = report_text(r.report, d.cohort.atlas);
    const std::string tag = "[" + cell_name(cell.band, cell.kind) + "] ";
    const auto& rep = r.report;
    std::ostringstream log;
    log << tag << "subjects " << rep.n_td << " TD / " << rep.n_asd << " ASD, train "
        << rep.split.train.size() << ", test " << rep.split.test.size() << "\n";
    log << tag << "standardizer fitted on " << rep.standardization_fit_count << " subjects, "
        << rep.constant_columns << " constant columns\n";
    for (const auto& [name, seed] : rep.seeds) log << tag << "seed " << name << " = " << seed << "\n";
    log << tag << "selected " << rep.selection.selected_count << "/" << rep.total_features << "\n";
    if (rep.degenerate) log << tag << "warning: no feature selected, majority-class baseline\n";
    log << tag << "accuracy " << csv::format_double(rep.metrics.accuracy) << "\n";
    r.log = log.str();
  });
  return results;
}

void write_cell_outputs(const RunConfig& c, const LoadedData& d, const std::vector<CellOutputs>& results,
                        std::vector<fs::path>& written) {
  auto write = [&](const fs::path& rel, const std::string& content) {
    csv::write_file(c.output_dir / rel, content);
    written.push_back(rel);
  };
  for (const auto& r : results) {
    const std::string name = cell_name(r.report.band, r.report.kind);
    write(fs::path("reports") / (name + ".json"), r.json_text);
    write(fs::path("reports") / (name + ".txt"), r.text);
    write(fs::path("selection") / (name + ".csv"), selection_to_csv(r.report.selection, d.cohort.atlas));
    if (r.report.kind == FeatureKind::kMCF) {
      write(fs::path("edges") / (name + ".csv"), edges_to_csv(r.report.edges, d.cohort.atlas));
    }
  }
}

int cmd_report(const RunConfig& c, std::ostream& out) {
  const LoadedData d = load_data(c);
  const auto results = run_cells(c, d);
  std::vector<fs::path> written;
  write_cell_outputs(c, d, results, written);
  for (const auto& r : results) out << r.text;
  return 0;
}

int cmd_run(const RunConfig& c, const json& effective, std::ostream& out) {
  const LoadedData d = load_data(c);
  const auto results = run_cells(c, d);

  std::vector<fs::path> written;
  write_cell_outputs(c, d, results, written);
  auto write = [&](const fs::path& rel, const std::string& content) {
    csv::write_file(c.output_dir / rel, content);
    written.push_back(rel);
  };

  std::vector<ExperimentReport> reports;
  std::string log;
  for (const auto& id : d.dropped) log += "warning: dropped unmatched subject " + id + "\n";
  for (const auto& r : results) {
    reports.push_back(r.report);
    write(fs::path("logs") / (cell_name(r.report.band, r.report.kind) + ".log"), r.log);
    log += r.log;
  }
  write("metrics_grid.csv", metrics_grid_csv(reports, c.bands));
  write("run.log", log);

  std::vector<std::pair<AgeBand, DemographicSummary>> rows;
  json demo;
  for (const auto& b : c.bands) {
    const auto s = demographic_summary(stratify(d.cohort, b));
    rows.emplace_back(b, s);
    demo[b.label] = to_json(s);
  }
  write("demographics.json", dump(demo));
  write("demographics.txt", demographic_table(rows));

  json manifest;
  manifest["schema"] = "morphconn-manifest";
  manifest["schema_version"] = 1;
  manifest["tool"] = "morphconn";
  manifest["tool_version"] = kToolVersion;
  manifest["config"] = manifest_config(effective);
  json inputs;
  for (const auto& [k, v] : d.hashes) inputs[k] = v;
  manifest["input_sha256"] = inputs;
  json seeds;
  seeds["master"] = c.experiment.master_seed;
  for (const auto& r : results) {
    json s;
    for (const auto& [k, v] : r.report.seeds) s[k] = v;
    seeds[cell_name(r.report.band, r.report.kind)] = s;
  }
  manifest["seeds"] = seeds;
  manifest["dropped_subjects"] = d.dropped;
  json outputs;
  std::sort(written.begin(), written.end());
  for (const auto& rel : written) {
    outputs[rel.generic_string()] = sha256_file(c.output_dir / rel);
  }
  manifest["output_sha256"] = outputs;
  csv::write_file(c.output_dir / "manifest.json", dump(manifest));

  out << log;
  for (const auto& r : results) out << r.text;
  out << "wrote " << written.size() + 1 << " files to " << c.output_dir.string() << "\n";
  return 0;
}

int exit_code(const Error& e) { return static_cast<int>(e.exit_code()); }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Morphological connectivity ASD/TD classification pipeline", "morphconn"};
  app.require_subcommand(1);
  Flags f;

  auto* run = app.add_subcommand("run", "Run every (band x feature kind) experiment");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort from a spec");
  auto* ingest = app.add_subcommand("ingest", "Validate and join inputs; write demographics");
  auto* features = app.add_subcommand("features", "Build standardized MF/MCF matrices");
  auto* select = app.add_subcommand("select", "Two-sample t-test feature selection");
  auto* train = app.add_subcommand("train", "Train forests on the selected features");
  auto* report = app.add_subcommand("report", "Per-cell reports and edge lists");
  auto* config = app.add_subcommand("config", "Print the effective configuration");

  for (auto* sub : {run, synth, ingest, features, select, train, report, config}) add_common(sub, f);
  for (auto* sub : {run, ingest, features, select, train, report, config}) add_data(sub, f);
  for (auto* sub : {run, ingest, features, select, train, report, config}) add_experiment(sub, f);
  synth->add_option("--spec", f.spec, "Synth spec JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (synth->parsed()) return cmd_synth(f, out);

    const json effective = effective_config(f);
    print_effective(out, effective);
    const RunConfig c = parse_run_config(effective);
    if (config->parsed()) return 0;
    require_inputs(c);
    if (ingest->parsed()) return cmd_ingest(c, out);
    if (features->parsed()) return cmd_features(c, out);
    if (select->parsed()) return cmd_select(c, out);
    if (train->parsed()) return cmd_train(c, out);
    if (report->parsed()) return cmd_report(c, out);
    return cmd_run(c, effective, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kRuntime);
  }
}

}  // namespace morphconn::cli
