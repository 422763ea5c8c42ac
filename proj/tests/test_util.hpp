#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "argbot/domain.hpp"
#include "argbot/error.hpp"
#include "argbot/llm_gateway.hpp"

// Expects the statement to throw argbot::Error with the given code.
#define EXPECT_ERRC(errc, ...)                                                             \
  do {                                                                                     \
    try {                                                                                  \
      __VA_ARGS__;                                                                         \
      ADD_FAILURE() << "expected " << argbot::to_string(errc) << " from " #__VA_ARGS__;    \
    } catch (const argbot::Error& e_) {                                                    \
      EXPECT_EQ(e_.code(), errc) << e_.what();                                             \
    }                                                                                      \
  } while (0)

namespace testutil {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& name) { return fs::path(ARGBOT_FIXTURE_DIR) / name; }
inline fs::path config_file(const std::string& name) { return fs::path(ARGBOT_CONFIG_DIR) / name; }

inline argbot::ArgumentCatalog healthcare_catalog() { return argbot::load_catalog(config_file("catalog_healthcare.tsv")); }
inline argbot::llm::AliasTable healthcare_aliases() {
  return argbot::llm::AliasTable::load(config_file("aliases_healthcare.tsv"));
}

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "argbot") {
    std::random_device rd;
    path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

// Pearson statistic against equal expected counts.
inline double chi_square_uniform(const std::vector<double>& observed) {
  double total = 0.0;
  for (double o : observed) total += o;
  const double expected = total / static_cast<double>(observed.size());
  double stat = 0.0;
  for (double o : observed) stat += (o - expected) * (o - expected) / expected;
  return stat;
}

// Upper critical value of the chi-square distribution.
inline double chi_square_critical(double alpha, double df) {
  boost::math::chi_squared dist(df);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

inline argbot::ArgumentCatalog small_catalog(std::size_t n) {
  std::vector<argbot::Argument> raw;
  for (std::size_t i = 0; i < n; ++i) {
    raw.push_back({"argument " + std::string(1, static_cast<char>('a' + i)), "explanation " + std::to_string(i)});
  }
  return argbot::validate_catalog(std::move(raw), "topic");
}

}  // namespace testutil
