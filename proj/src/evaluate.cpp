#include "morphconn/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "morphconn/csv.hpp"
#include "morphconn/error.hpp"
#include "morphconn/random.hpp"

namespace morphconn {

namespace {

void shuffle(std::vector<std::string>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(v[i - 1], v[j]);
  }
}

std::size_t train_count(std::size_t n, double fraction) {
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

}  // namespace

TrainTestSplit train_test_split(const std::vector<std::string>& subject_ids,
                                const std::vector<Group>& labels, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("BadSplit", "train_fraction must lie strictly between 0 and 1");
  }
  if (subject_ids.size() != labels.size()) {
    throw ValidationError("LabelMismatch", "subject ids and labels differ in length");
  }
  Rng rng(spec.seed);
  TrainTestSplit out;
  auto take = [&](std::vector<std::string> ids, std::string_view what) {
    if (ids.size() < 2) {
      throw ValidationError("ClassTooSmall", std::string(what) + " has " + std::to_string(ids.size()) +
                                                 " subject(s); need at least 2 to split");
    }
    std::sort(ids.begin(), ids.end());
    shuffle(ids, rng);
    const std::size_t k = train_count(ids.size(), spec.train_fraction);
    out.train.insert(out.train.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
    out.test.insert(out.test.end(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end());
  };
  if (spec.stratify_by_label) {
    for (Group g : {Group::kTD, Group::kASD}) {
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == g) ids.push_back(subject_ids[i]);
      }
      take(std::move(ids), "class " + std::string(to_string(g)));
    }
  } else {
    take(subject_ids, "cohort");
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::optional<double> f1_score(double precision, double recall) {
  if (precision + recall <= 0.0) return std::nullopt;
  return 2.0 * precision * recall / (precision + recall);
}

Metrics compute_metrics(const std::vector<Group>& y_true, const std::vector<Group>& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ValidationError("LengthMismatch", "y_true and y_pred differ in length");
  }
  if (y_true.empty()) throw ValidationError("Empty", "no predictions to score");
  Metrics m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool truth = y_true[i] == Group::kASD;
    const bool pred = y_pred[i] == Group::kASD;
    if (truth && pred) ++m.tp;
    else if (!truth && pred) ++m.fp;
    else if (!truth && !pred) ++m.tn;
    else ++m.fn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(y_true.size());
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision && m.recall) m.f1 = f1_score(*m.precision, *m.recall);
  return m;
}

nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["confusion"] = {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
  j["accuracy"] = m.accuracy;
  if (m.precision) j["precision"] = *m.precision;
  if (m.recall) j["recall"] = *m.recall;
  if (m.f1) j["f1"] = *m.f1;
  return j;
}

double LobeTable::percent_sum() const {
  return std::accumulate(percent.begin(), percent.end(), 0.0);
}

LobeTable lobe_fractions(const std::vector<FeatureDescriptor>& selected, const Atlas& atlas) {
  LobeTable t;
  for (const auto& d : selected) {
    ++t.counts[static_cast<std::size_t>(atlas[d.first].lobe)];
    ++t.total;
    if (d.kind == FeatureKind::kMCF) {
      ++t.counts[static_cast<std::size_t>(atlas[d.second].lobe)];
      ++t.total;
    }
  }
  if (t.total > 0) {
    for (std::size_t k = 0; k < kLobeCount; ++k) {
      t.percent[k] = 100.0 * static_cast<double>(t.counts[k]) / static_cast<double>(t.total);
    }
  }
  return t;
}

nlohmann::ordered_json to_json(const LobeTable& table) {
  std::vector<std::size_t> order(kLobeCount);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return table.counts[a] > table.counts[b]; });
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t k : order) {
    if (table.counts[k] == 0) continue;
    rows.push_back({{"lobe", to_string(kAllLobes[k])},
                    {"count", table.counts[k]},
                    {"percent", table.percent[k]}});
  }
  nlohmann::ordered_json j;
  j["total_attributions"] = table.total;
  j["lobes"] = std::move(rows);
  return j;
}

std::string_view to_string(EdgeCriterion c) {
  return c == EdgeCriterion::kPValue ? "pvalue" : "gini_importance";
}

std::optional<EdgeCriterion> parse_edge_criterion(std::string_view token) {
  if (token == "pvalue") return EdgeCriterion::kPValue;
  if (token == "gini_importance" || token == "gini") return EdgeCriterion::kGiniImportance;
  return std::nullopt;
}

std::vector<RankedEdge> rank_edges(const SelectionResult& selection, const ForestModel* model,
                                   const Atlas& atlas, EdgeCriterion criterion, std::size_t k) {
  for (const auto& r : selection.results) {
    if (r.descriptor.kind != FeatureKind::kMCF) {
      throw ValidationError("NotMCF", "edge ranking requires MCF features");
    }
  }
  const auto columns = selection.selected_columns();
  std::vector<double> importance(columns.size(), 0.0);
  if (model != nullptr) {
    if (model->n_features != columns.size()) {
      throw ValidationError("ModelMismatch", "model was not trained on the selected features");
    }
    importance = gini_importance(*model);
  } else if (criterion == EdgeCriterion::kGiniImportance) {
    throw ConfigError("NoModel", "ranking by Gini importance requires a trained model");
  }

  std::vector<std::size_t> order(columns.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // `order` starts in descriptor order, so stable_sort keeps that as the tie-break.
  if (criterion == EdgeCriterion::kPValue) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return selection.results[columns[a]].p < selection.results[columns[b]].p;
    });
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  }
  std::vector<RankedEdge> out;
  for (std::size_t n = 0; n < order.size() && n < k; ++n) {
    const std::size_t idx = order[n];
    const auto& res = selection.results[columns[idx]];
    RankedEdge e;
    e.rank = n + 1;
    e.region_i = res.descriptor.first;
    e.region_j = res.descriptor.second;
    e.lobe_i = atlas[e.region_i].lobe;
    e.lobe_j = atlas[e.region_j].lobe;
    e.p_value = res.p;
    e.gini_importance = importance[idx];
    out.push_back(e);
  }
  return out;
}

std::string edges_to_csv(const std::vector<RankedEdge>& edges, const Atlas& atlas) {
  std::string out = "rank,region_i,region_j,lobe_i,lobe_j,p_value,gini_importance\n";
  for (const auto& e : edges) {
    out += std::to_string(e.rank) + ',' + csv::escape(atlas[e.region_i].name) + ',' +
           csv::escape(atlas[e.region_j].name) + ',' + std::string(to_string(e.lobe_i)) + ',' +
           std::string(to_string(e.lobe_j)) + ',' + csv::format_double17(e.p_value) + ',' +
           csv::format_double17(e.gini_importance) + '\n';
  }
  return out;
}

}  // namespace morphconn
