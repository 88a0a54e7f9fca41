#pragma once

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "morphconn/atlas.hpp"
#include "morphconn/error.hpp"
#include "morphconn/ingest.hpp"
#include "morphconn/random.hpp"

namespace morphconn::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("morphconn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string source_path(const std::string& rel) {
  return (std::filesystem::path(MORPHCONN_SOURCE_DIR) / rel).string();
}

/// Expects `fn` to throw an Error subclass `E` with the given code.
template <typename E, typename Fn>
void expect_error(Fn&& fn, const std::string& code) {
  try {
    fn();
    ADD_FAILURE() << "expected " << code << " to be thrown";
  } catch (const E& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  } catch (const std::exception& e) {
    ADD_FAILURE() << "expected " << code << ", got " << e.what();
  }
}

/// Dataset over `atlas` with one subject per age/group entry and Gaussian raw values.
inline CohortDataset random_dataset(const Atlas& atlas, const std::vector<double>& ages,
                                    const std::vector<Group>& groups, std::uint64_t seed) {
  CohortDataset d;
  d.atlas = atlas;
  Rng rng(seed);
  for (std::size_t i = 0; i < ages.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%04zu", i);
    PhenotypeRecord p;
    p.subject_id = id;
    p.site_id = "T";
    p.age = ages[i];
    p.sex = i % 3 == 0 ? Sex::kFemale : Sex::kMale;
    p.group = groups[i];
    p.fiq = 100.0 + static_cast<double>(i % 7);
    MorphometryRecord m;
    m.subject_id = id;
    m.regions = atlas.size();
    m.values.resize(atlas.size() * kMeasureCount);
    for (double& v : m.values) v = 10.0 + rng.normal();
    d.phenotypes.push_back(p);
    d.morphometry.push_back(std::move(m));
  }
  return d;
}

inline std::vector<Group> alternating_groups(std::size_t n) {
  std::vector<Group> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = i % 2 ? Group::kASD : Group::kTD;
  return g;
}

}  // namespace morphconn::testing
