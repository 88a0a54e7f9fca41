#include "morphconn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "morphconn/csv.hpp"
#include "morphconn/error.hpp"
#include "morphconn/random.hpp"

namespace morphconn {

std::string_view to_string(StandardizationPool pool) {
  return pool == StandardizationPool::kBand ? "band" : "cohort";
}

std::optional<StandardizationPool> parse_standardization_pool(std::string_view token) {
  if (token == "band") return StandardizationPool::kBand;
  if (token == "cohort") return StandardizationPool::kCohort;
  return std::nullopt;
}

std::string_view to_string(TTestVariant v) { return v == TTestVariant::kWelch ? "welch" : "pooled"; }

std::optional<TTestVariant> parse_ttest_variant(std::string_view token) {
  if (token == "welch") return TTestVariant::kWelch;
  if (token == "pooled") return TTestVariant::kPooled;
  return std::nullopt;
}

std::uint64_t split_seed(std::uint64_t master, const std::string& band, int repeat) {
  return derive_seed(master, "split/" + band + "/r" + std::to_string(repeat));
}

std::uint64_t forest_seed(std::uint64_t master, const std::string& band, FeatureKind kind,
                          int repeat) {
  return derive_seed(master, "forest/" + band + "/" + std::string(to_string(kind)) + "/r" +
                                 std::to_string(repeat));
}

namespace {

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  const std::string prefix = std::string("[") + name + "] ";
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(e.code(), prefix + e.message());
  } catch (const ConfigError& e) {
    throw ConfigError(e.code(), prefix + e.message());
  } catch (const Error& e) {
    throw RuntimeFailure(e.code(), prefix + e.message());
  }
}

std::vector<bool> membership(const std::vector<PhenotypeRecord>& subjects,
                             const std::vector<std::string>& sorted_ids) {
  std::vector<bool> mask(subjects.size(), false);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    mask[i] = std::binary_search(sorted_ids.begin(), sorted_ids.end(), subjects[i].subject_id);
  }
  return mask;
}

std::vector<double> gather(const FeatureMatrix& m, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& cols) {
  std::vector<double> out;
  out.reserve(rows.size() * cols.size());
  for (std::size_t r : rows) {
    for (std::size_t c : cols) out.push_back(m.at(r, c));
  }
  return out;
}

}  // namespace

PreparedCell prepare_cell(const CohortDataset& cohort, const AgeBand& band, FeatureKind kind,
                          const ExperimentConfig& config, int repeat) {
  PreparedCell cell;
  cell.band_dataset = stratify(cohort, band);
  const CohortDataset& band_ds = cell.band_dataset;
  std::vector<std::string> ids;
  for (const auto& p : band_ds.phenotypes) {
    ids.push_back(p.subject_id);
    cell.labels.push_back(p.group);
  }

  SplitSpec split_spec = config.split;
  split_spec.seed = split_seed(config.master_seed, band.label, repeat);
  cell.split_seed = split_spec.seed;
  cell.split = stage("split", [&] { return train_test_split(ids, cell.labels, split_spec); });
  cell.train_mask = membership(band_ds.phenotypes, cell.split.train);

  cell.standardization = stage("standardize", [&] {
    if (config.standardization_pool == StandardizationPool::kBand) {
      const std::vector<bool> mask = config.standardization_scope == FitScope::kTrainOnly
                                         ? cell.train_mask
                                         : std::vector<bool>(band_ds.size(), true);
      return fit_standardizer(band_ds, mask, config.standardization_scope);
    }
    std::vector<bool> mask(cohort.size(), true);
    if (config.standardization_scope == FitScope::kTrainOnly) {
      const std::vector<bool> is_test = membership(cohort.phenotypes, cell.split.test);
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = !is_test[i];
    }
    return fit_standardizer(cohort, mask, config.standardization_scope);
  });

  cell.features = stage("features", [&] {
    const auto tensor = apply_standardizer(cell.standardization, band_ds, config.execution);
    return build_features(kind, tensor, band_ds.atlas, config.execution);
  });
  return cell;
}

SelectionResult select_cell(const PreparedCell& cell, const ExperimentConfig& config) {
  return stage("select", [&] {
    const std::vector<bool> mask = config.selection_scope == FitScope::kTrainOnly
                                       ? cell.train_mask
                                       : std::vector<bool>(cell.band_dataset.size(), true);
    return select_features(cell.features, cell.labels, mask, config.alpha, config.selection_scope,
                           config.ttest, config.execution);
  });
}

namespace {

struct RowSplit {
  std::vector<std::size_t> train, test;
  std::vector<Group> y_train, y_test;
};

RowSplit row_split(const PreparedCell& cell) {
  RowSplit rs;
  for (std::size_t r = 0; r < cell.band_dataset.size(); ++r) {
    if (cell.train_mask[r]) {
      rs.train.push_back(r);
      rs.y_train.push_back(cell.labels[r]);
    } else {
      rs.test.push_back(r);
      rs.y_test.push_back(cell.labels[r]);
    }
  }
  return rs;
}

}  // namespace

ForestModel train_cell(const PreparedCell& cell, const SelectionResult& selection,
                       const ForestParams& params, Execution ex) {
  const auto columns = selection.selected_columns();
  if (columns.empty()) {
    throw RuntimeFailure("NoFeaturesSelected", "[train] no feature passed selection");
  }
  const RowSplit rs = row_split(cell);
  const auto train_x = gather(cell.features, rs.train, columns);
  return stage("train", [&] {
    return train_forest(FeatureView{train_x, rs.train.size(), columns.size()}, rs.y_train, params, ex);
  });
}

namespace {

ExperimentReport run_once(const CohortDataset& cohort, const AgeBand& band, FeatureKind kind,
                          const ExperimentConfig& config, int repeat) {
  const PreparedCell cell = prepare_cell(cohort, band, kind, config, repeat);
  ExperimentReport rep;
  rep.band = band;
  rep.kind = kind;
  for (Group g : cell.labels) (g == Group::kASD ? rep.n_asd : rep.n_td)++;
  rep.split = cell.split;
  rep.seeds["split"] = cell.split_seed;
  rep.standardization_fit_count = cell.standardization.fit_count;
  rep.constant_columns = static_cast<std::size_t>(
      std::count(cell.standardization.constant.begin(), cell.standardization.constant.end(), true));
  rep.total_features = cell.features.cols();
  rep.selection = select_cell(cell, config);
  const auto columns = rep.selection.selected_columns();
  const RowSplit rs = row_split(cell);

  ForestParams fp = config.forest;
  fp.seed = forest_seed(config.master_seed, band.label, kind, repeat);
  rep.seeds["forest"] = fp.seed;

  std::vector<Group> y_pred;
  if (columns.empty()) {
    rep.degenerate = true;
    const auto asd =
        static_cast<std::size_t>(std::count(rs.y_train.begin(), rs.y_train.end(), Group::kASD));
    const Group majority = asd > rs.y_train.size() - asd ? Group::kASD : Group::kTD;
    y_pred.assign(rs.y_test.size(), majority);
  } else {
    rep.model = train_cell(cell, rep.selection, fp, config.execution);
    const auto test_x = gather(cell.features, rs.test, columns);
    y_pred = stage("predict", [&] {
      return predict_all(*rep.model, FeatureView{test_x, rs.test.size(), columns.size()},
                         config.execution);
    });
  }
  rep.metrics = stage("metrics", [&] { return compute_metrics(rs.y_test, y_pred); });

  std::vector<FeatureDescriptor> selected;
  for (std::size_t c : columns) selected.push_back(cell.features.descriptors[c]);
  rep.lobes = lobe_fractions(selected, cohort.atlas);
  if (kind == FeatureKind::kMCF) {
    rep.edges = stage("edges", [&] {
      return rank_edges(rep.selection, rep.model ? &*rep.model : nullptr, cohort.atlas,
                        rep.model ? config.edge_criterion : EdgeCriterion::kPValue, config.top_k);
    });
  }
  return rep;
}

std::pair<double, std::optional<double>> mean_sd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, std::nullopt};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

ExperimentReport run_experiment(const CohortDataset& cohort, const AgeBand& band, FeatureKind kind,
                                const ExperimentConfig& config) {
  ExperimentReport report = run_once(cohort, band, kind, config, 0);
  if (config.repeats > 1) {
    std::map<std::string, std::vector<double>> values;
    auto collect = [&](const Metrics& m) {
      values["accuracy"].push_back(m.accuracy);
      if (m.precision) values["precision"].push_back(*m.precision);
      if (m.recall) values["recall"].push_back(*m.recall);
      if (m.f1) values["f1"].push_back(*m.f1);
    };
    collect(report.metrics);
    for (int r = 1; r < config.repeats; ++r) {
      collect(run_once(cohort, band, kind, config, r).metrics);
    }
    RepeatSummary s;
    s.repeats = config.repeats;
    for (const auto& [name, v] : values) s.mean_sd[name] = mean_sd(v);
    report.repeat_summary = std::move(s);
  }
  return report;
}

std::optional<double> reference_accuracy(const std::string& band, FeatureKind kind) {
  const bool mf = kind == FeatureKind::kMF;
  if (band == "6to11") return mf ? 0.677 : 0.758;
  if (band == "11to18") return mf ? 0.593 : 0.568;
  if (band == "6to18") return mf ? 0.6036 : 0.676;
  return std::nullopt;
}

nlohmann::ordered_json to_json(const ExperimentReport& r, const ExperimentConfig& config,
                               const Atlas& atlas) {
  nlohmann::ordered_json j;
  j["schema"] = "morphconn-report";
  j["schema_version"] = 1;
  j["band"] = {{"label", r.band.label},
               {"lower", r.band.lower},
               {"upper", r.band.upper},
               {"upper_inclusive", r.band.upper_inclusive}};
  j["feature_kind"] = to_string(r.kind);
  j["subjects"] = {{"TD", r.n_td},
                   {"ASD", r.n_asd},
                   {"train", r.split.train.size()},
                   {"test", r.split.test.size()}};
  j["split"] = {{"train_fraction", config.split.train_fraction},
                {"stratify_by_label", config.split.stratify_by_label}};
  j["standardization"] = {{"scope", to_string(config.standardization_scope)},
                          {"pool", to_string(config.standardization_pool)},
                          {"fit_count", r.standardization_fit_count},
                          {"constant_columns", r.constant_columns}};
  j["selection"] = {{"test", to_string(r.selection.variant)},
                    {"alpha", r.selection.alpha},
                    {"scope", to_string(r.selection.scope)},
                    {"total_features", r.total_features},
                    {"selected_count", r.selection.selected_count}};
  ForestParams fp = config.forest;
  fp.seed = r.seeds.at("forest");
  j["forest"] = to_json(fp);
  j["classifier"] = r.degenerate ? "majority_class_baseline" : "random_forest";
  j["metrics"] = to_json(r.metrics);
  j["lobe_fractions"] = to_json(r.lobes);
  if (r.kind == FeatureKind::kMCF) {
    auto edges = nlohmann::ordered_json::array();
    for (const auto& e : r.edges) {
      edges.push_back({{"rank", e.rank},
                       {"region_i", atlas[e.region_i].name},
                       {"region_j", atlas[e.region_j].name},
                       {"lobe_i", to_string(e.lobe_i)},
                       {"lobe_j", to_string(e.lobe_j)},
                       {"p_value", e.p_value},
                       {"gini_importance", e.gini_importance}});
    }
    j["top_edges"] = {{"criterion", to_string(r.model ? config.edge_criterion : EdgeCriterion::kPValue)},
                      {"k", config.top_k},
                      {"edges", std::move(edges)}};
  }
  nlohmann::ordered_json seeds;
  seeds["master"] = config.master_seed;
  for (const auto& [k, v] : r.seeds) seeds[k] = v;
  j["seeds"] = std::move(seeds);
  nlohmann::ordered_json hashes = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config.input_hashes) hashes[k] = v;
  j["input_sha256"] = std::move(hashes);
  if (r.repeat_summary) {
    nlohmann::ordered_json rs;
    rs["note"] = "extension: mean and sample SD over independent split/forest seeds";
    rs["repeats"] = r.repeat_summary->repeats;
    for (const auto& [name, ms] : r.repeat_summary->mean_sd) {
      rs[name] = {{"mean", ms.first}};
      if (ms.second) rs[name]["sd"] = *ms.second;
    }
    j["repeat_summary"] = std::move(rs);
  }
  nlohmann::ordered_json ref;
  ref["note"] = "reference ABIDE results (710 subjects); targets for real data, not expected on synthetic cohorts";
  if (const auto acc = reference_accuracy(r.band.label, r.kind)) ref["accuracy"] = *acc;
  if (r.band.label == "6to11" && r.kind == FeatureKind::kMCF) {
    ref["f1"] = 0.831;
    ref["recall"] = 0.86;
    ref["precision"] = 0.804;
  }
  j["reference_targets"] = std::move(ref);
  return j;
}

namespace {

std::string pct(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *v);
  return buf;
}

}  // namespace

std::string report_text(const ExperimentReport& r, const Atlas& atlas) {
  std::string out;
  char buf[256];
  out += "Band " + r.band.label + ", " + std::string(to_string(r.kind)) + " features\n";
  std::snprintf(buf, sizeof buf, "  subjects: %zu TD, %zu ASD (train %zu, test %zu)\n", r.n_td,
                r.n_asd, r.split.train.size(), r.split.test.size());
  out += buf;
  std::snprintf(buf, sizeof buf, "  selected: %zu of %zu features (p < %g, %s)\n",
                r.selection.selected_count, r.total_features, r.selection.alpha,
                std::string(to_string(r.selection.scope)).c_str());
  out += buf;
  if (r.degenerate) out += "  no feature passed selection: majority-class baseline\n";
  std::snprintf(buf, sizeof buf, "  confusion (ASD positive): TP=%zu FP=%zu TN=%zu FN=%zu\n",
                r.metrics.tp, r.metrics.fp, r.metrics.tn, r.metrics.fn);
  out += buf;
  out += "  accuracy " + pct(r.metrics.accuracy) + ", precision " + pct(r.metrics.precision) +
         ", recall " + pct(r.metrics.recall) + ", F1 " + pct(r.metrics.f1) + "\n";
  if (const auto acc = reference_accuracy(r.band.label, r.kind)) {
    out += "  reference ABIDE accuracy for this cell: " + pct(*acc) + "\n";
  }
  if (r.lobes.total > 0) {
    out += "  lobe fractions:";
    for (std::size_t k = 0; k < kLobeCount; ++k) {
      if (r.lobes.counts[k] == 0) continue;
      std::snprintf(buf, sizeof buf, " %s (%.2f%%)", std::string(to_string(kAllLobes[k])).c_str(),
                    r.lobes.percent[k]);
      out += buf;
    }
    out += "\n";
  }
  const std::size_t shown = std::min<std::size_t>(r.edges.size(), 10);
  if (shown > 0) out += "  top edges:\n";
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& e = r.edges[i];
    std::snprintf(buf, sizeof buf, "    %3zu  %s -- %s  p=%.3g\n", e.rank,
                  atlas[e.region_i].name.c_str(), atlas[e.region_j].name.c_str(), e.p_value);
    out += buf;
  }
  return out;
}

std::string metrics_grid_csv(const std::vector<ExperimentReport>& reports,
                             const std::vector<AgeBand>& bands) {
  std::string out = "band";
  for (const char* kind : {"MF", "MCF"}) {
    for (const char* metric : {"accuracy", "precision", "recall", "f1"}) {
      out += std::string(",") + kind + "_" + metric;
    }
  }
  out += '\n';
  auto cell = [](std::optional<double> v) { return v ? csv::format_double17(*v) : std::string(); };
  for (const auto& band : bands) {
    out += band.label;
    for (FeatureKind kind : {FeatureKind::kMF, FeatureKind::kMCF}) {
      const auto it = std::find_if(reports.begin(), reports.end(), [&](const ExperimentReport& r) {
        return r.band.label == band.label && r.kind == kind;
      });
      if (it == reports.end()) {
        out += ",,,,";
        continue;
      }
      out += ',' + cell(it->metrics.accuracy) + ',' + cell(it->metrics.precision) + ',' +
             cell(it->metrics.recall) + ',' + cell(it->metrics.f1);
    }
    out += '\n';
  }
  return out;
}

}  // namespace morphconn
