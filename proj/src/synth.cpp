#include "morphconn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "morphconn/error.hpp"
#include "morphconn/random.hpp"

namespace morphconn {

namespace {

double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

// Deterministic per-region scale so regions differ in size without the seed.
double region_factor(std::size_t region) {
  const double golden = 0.6180339887498949;
  const double frac = std::fmod(static_cast<double>(region + 1) * golden, 1.0);
  return 0.75 + 0.5 * frac;
}

std::size_t region_ref(const nlohmann::json& v, const Atlas& atlas) {
  if (v.is_number_integer()) {
    const auto idx = v.get<long long>();
    if (idx < 0 || static_cast<std::size_t>(idx) >= atlas.size()) {
      throw ConfigError("BadSynthSpec", "region index " + std::to_string(idx) + " out of range");
    }
    return static_cast<std::size_t>(idx);
  }
  const auto name = v.get<std::string>();
  const auto idx = atlas.find(name);
  if (!idx) throw ConfigError("BadSynthSpec", "unknown region '" + name + "'");
  return *idx;
}

Measure measure_ref(const std::string& s) {
  for (Measure m : kAllMeasures) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("BadSynthSpec", "unknown measure '" + s + "'");
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.atlas.size() < 2) throw ConfigError("BadSynthSpec", "atlas needs at least 2 regions");
  if (spec.bands.empty()) throw ConfigError("BadSynthSpec", "no bands");
  for (const auto& b : spec.bands) {
    if (b.n_td == 0 || b.n_asd == 0) {
      throw ConfigError("BadSynthSpec", "band '" + b.label + "' needs subjects in both groups");
    }
    if (!(b.age_min > 0.0) || !(b.age_min < b.age_max) || !std::isfinite(b.age_max)) {
      throw ConfigError("BadSynthSpec", "band '" + b.label + "' has invalid age range");
    }
  }
  for (const auto& m : spec.baseline) {
    if (!std::isfinite(m.mean) || !(m.sd > 0.0) || !std::isfinite(m.sd) || m.decimals < 0 ||
        m.decimals > 12) {
      throw ConfigError("BadSynthSpec", "baseline mean/sd must be finite with sd > 0");
    }
  }
  for (const auto& e : spec.mf_effects) {
    if (e.region >= spec.atlas.size() || !std::isfinite(e.shift_sd)) {
      throw ConfigError("BadSynthSpec", "mf effect out of bounds");
    }
  }
  std::set<std::size_t> used;
  for (const auto& e : spec.mcf_effects) {
    if (e.region_i >= spec.atlas.size() || e.region_j >= spec.atlas.size() ||
        e.region_i == e.region_j) {
      throw ConfigError("BadSynthSpec", "mcf effect needs two distinct atlas regions");
    }
    if (!std::isfinite(e.coupling) || std::fabs(e.coupling) > 1.0) {
      throw ConfigError("BadSynthSpec", "mcf coupling must lie in [-1, 1]");
    }
    if (!used.insert(e.region_i).second || !used.insert(e.region_j).second) {
      throw ConfigError("BadSynthSpec", "mcf effect pairs must not share regions");
    }
  }
  if (!(spec.p_male >= 0.0 && spec.p_male <= 1.0) ||
      !(spec.fiq_missing >= 0.0 && spec.fiq_missing <= 1.0) || !(spec.fiq_sd >= 0.0)) {
    throw ConfigError("BadSynthSpec", "p_male / fiq_missing must be probabilities, fiq_sd >= 0");
  }
  if (spec.sites.empty()) throw ConfigError("BadSynthSpec", "need at least one site");
}

SynthSpec synth_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                               std::optional<std::uint64_t> seed_override) {
  try {
    SynthSpec s;
    const auto atlas = j.value("atlas", nlohmann::json("bundled"));
    if (atlas.is_object()) {
      s.atlas = make_synthetic_atlas(atlas.at("synthetic_per_hemisphere").get<std::size_t>());
    } else {
      const auto a = atlas.get<std::string>();
      s.atlas = a == "bundled" ? bundled_atlas() : load_atlas(base_dir / a);
    }
    if (seed_override) {
      s.seed = *seed_override;
    } else if (j.contains("seed")) {
      s.seed = j.at("seed").get<std::uint64_t>();
    } else {
      throw ConfigError("MissingSeed", "synth spec has no seed and none was given with --seed");
    }
    for (const auto& b : j.at("bands")) {
      s.bands.push_back(SynthBand{b.at("label").get<std::string>(), b.at("age_min").get<double>(),
                                  b.at("age_max").get<double>(), b.at("n_td").get<std::size_t>(),
                                  b.at("n_asd").get<std::size_t>()});
    }
    if (j.contains("baseline")) {
      for (Measure m : kAllMeasures) {
        const std::string key(to_string(m));
        if (!j["baseline"].contains(key)) continue;
        auto& base = s.baseline[static_cast<std::size_t>(m)];
        const auto& b = j["baseline"][key];
        base.mean = b.value("mean", base.mean);
        base.sd = b.value("sd", base.sd);
        base.decimals = b.value("decimals", base.decimals);
      }
    }
    for (const auto& e : j.value("mf_effects", nlohmann::json::array())) {
      s.mf_effects.push_back(MfEffect{region_ref(e.at("region"), s.atlas),
                                      measure_ref(e.at("measure").get<std::string>()),
                                      e.at("shift_sd").get<double>()});
    }
    for (const auto& e : j.value("mcf_effects", nlohmann::json::array())) {
      s.mcf_effects.push_back(McfEffect{region_ref(e.at("region_i"), s.atlas),
                                        region_ref(e.at("region_j"), s.atlas),
                                        e.at("coupling").get<double>()});
    }
    // Random planted effects use their own stream so they do not perturb subject draws.
    Rng plant(derive_seed(s.seed, "synth/plant"));
    if (j.contains("mf_random")) {
      const auto count = j["mf_random"].at("count").get<std::size_t>();
      const double shift = j["mf_random"].at("shift_sd").get<double>();
      const std::size_t cols = s.atlas.size() * kMeasureCount;
      if (count > cols) throw ConfigError("BadSynthSpec", "mf_random count exceeds column count");
      std::vector<std::size_t> pool(cols);
      for (std::size_t i = 0; i < cols; ++i) pool[i] = i;
      for (std::size_t i = 0; i < count; ++i) {
        std::swap(pool[i], pool[i + plant.uniform_index(cols - i)]);
        s.mf_effects.push_back(MfEffect{pool[i] / kMeasureCount,
                                        static_cast<Measure>(pool[i] % kMeasureCount), shift});
      }
    }
    if (j.contains("mcf_random")) {
      const auto count = j["mcf_random"].at("count").get<std::size_t>();
      const double coupling = j["mcf_random"].at("coupling").get<double>();
      std::set<std::size_t> used;
      for (const auto& e : s.mcf_effects) {
        used.insert(e.region_i);
        used.insert(e.region_j);
      }
      std::vector<std::size_t> free;
      for (std::size_t r = 0; r < s.atlas.size(); ++r) {
        if (!used.contains(r)) free.push_back(r);
      }
      if (2 * count > free.size()) throw ConfigError("BadSynthSpec", "mcf_random needs more free regions");
      for (std::size_t i = 0; i < 2 * count; ++i) {
        std::swap(free[i], free[i + plant.uniform_index(free.size() - i)]);
      }
      for (std::size_t i = 0; i < count; ++i) {
        s.mcf_effects.push_back(McfEffect{std::min(free[2 * i], free[2 * i + 1]),
                                          std::max(free[2 * i], free[2 * i + 1]), coupling});
      }
    }
    if (j.contains("effect_group")) {
      const auto g = j["effect_group"].get<std::string>();
      if (g != "ASD" && g != "TD") throw ConfigError("BadSynthSpec", "effect_group must be ASD or TD");
      s.effect_group = g == "ASD" ? Group::kASD : Group::kTD;
    }
    s.p_male = j.value("p_male", s.p_male);
    s.fiq_mean = j.value("fiq_mean", s.fiq_mean);
    s.fiq_sd = j.value("fiq_sd", s.fiq_sd);
    s.fiq_missing = j.value("fiq_missing", s.fiq_missing);
    if (j.contains("sites")) s.sites = j["sites"].get<std::vector<std::string>>();
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("BadSynthSpec", e.what());
  }
}

SynthCohort generate_cohort(const SynthSpec& spec) {
  validate(spec);
  SynthCohort out;
  out.atlas = spec.atlas;
  const std::size_t regions = spec.atlas.size();
  Rng rng(derive_seed(spec.seed, "synth/subjects"));

  std::vector<int> coupled_to(regions, -1);
  std::vector<double> coupling(regions, 0.0);
  for (const auto& e : spec.mcf_effects) {
    coupled_to[e.region_j] = static_cast<int>(e.region_i);
    coupling[e.region_j] = e.coupling;
  }
  std::vector<double> shift(regions * kMeasureCount, 0.0);
  for (const auto& e : spec.mf_effects) {
    shift[e.region * kMeasureCount + static_cast<std::size_t>(e.measure)] += e.shift_sd;
  }

  std::size_t next_id = 1;
  std::vector<double> z(regions * kMeasureCount);
  for (const auto& band : spec.bands) {
    for (Group g : {Group::kTD, Group::kASD}) {
      const std::size_t n = g == Group::kTD ? band.n_td : band.n_asd;
      const bool affected = g == spec.effect_group;
      for (std::size_t s = 0; s < n; ++s) {
        char id[32];
        std::snprintf(id, sizeof id, "sub-%05zu", next_id++);
        PhenotypeRecord p;
        p.subject_id = id;
        p.site_id = spec.sites[rng.uniform_index(spec.sites.size())];
        p.age = round_to(band.age_min + (band.age_max - band.age_min) * rng.uniform01(), 2);
        if (p.age >= band.age_max) p.age = band.age_min;
        p.sex = rng.uniform01() < spec.p_male ? Sex::kMale : Sex::kFemale;
        p.group = g;
        const double fiq = std::round(spec.fiq_mean + spec.fiq_sd * rng.normal());
        if (rng.uniform01() >= spec.fiq_missing) p.fiq = fiq;

        for (double& v : z) v = rng.normal();
        if (affected) {
          for (std::size_t r = 0; r < regions; ++r) {
            if (coupled_to[r] < 0) continue;
            const double c = coupling[r];
            const double keep = std::sqrt(std::max(0.0, 1.0 - c * c));
            const auto src = static_cast<std::size_t>(coupled_to[r]) * kMeasureCount;
            for (std::size_t m = 0; m < kMeasureCount; ++m) {
              z[r * kMeasureCount + m] = c * z[src + m] + keep * z[r * kMeasureCount + m];
            }
          }
          for (std::size_t c = 0; c < z.size(); ++c) z[c] += shift[c];
        }

        MorphometryRecord rec;
        rec.subject_id = p.subject_id;
        rec.regions = regions;
        rec.values.resize(regions * kMeasureCount);
        for (std::size_t r = 0; r < regions; ++r) {
          const double f = region_factor(r);
          for (std::size_t m = 0; m < kMeasureCount; ++m) {
            const auto& base = spec.baseline[m];
            rec.values[r * kMeasureCount + m] =
                round_to(f * (base.mean + base.sd * z[r * kMeasureCount + m]), base.decimals);
          }
        }
        out.phenotypes.push_back(std::move(p));
        out.morphometry.push_back(std::move(rec));
      }
    }
  }
  return out;
}

}  // namespace morphconn
