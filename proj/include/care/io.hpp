#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "care/model.hpp"

namespace care::io {

struct ParsedComparisons {
  ComparisonData data;
  std::vector<std::string> item_ids;  // dense index -> external id
  std::size_t ties_rejected = 0;
  std::size_t rows = 0;
};

// Reads either the aggregated schema `item_i,item_j,trials,wins_j` or the
// per-trial schema `item_i,item_j,winner`. Per-trial rows whose winner is
// `tie` are dropped and counted. Items are numbered in order of first
// appearance unless `known_ids` fixes the order (unlisted ids are appended).
// Duplicate pairs are summed; lines starting with '#' are skipped.
ParsedComparisons parse_comparisons_csv(
    std::istream& in, const std::vector<std::string>& known_ids = {});
ParsedComparisons parse_comparisons_csv(
    const std::filesystem::path& path,
    const std::vector<std::string>& known_ids = {});

// Aggregated schema, one row per edge in storage order.
void write_comparisons_csv(std::ostream& out, const ComparisonData& data,
                           const std::vector<std::string>& item_ids);

struct ParsedCovariates {
  Matrix raw;  // rows follow `item_ids`
  std::vector<std::string> feature_names;
  std::size_t extra_items = 0;  // rows for items absent from the comparisons
};

// Header `item,f1,...,fd`. Every id in `item_ids` must appear exactly once.
ParsedCovariates parse_covariates_csv(std::istream& in,
                                      const std::vector<std::string>& item_ids);
ParsedCovariates parse_covariates_csv(const std::filesystem::path& path,
                                      const std::vector<std::string>& item_ids);

void write_covariates_csv(std::ostream& out, const Matrix& raw,
                          const std::vector<std::string>& item_ids,
                          const std::vector<std::string>& feature_names);

// 17 significant digits; re-parses to the identical double.
std::string format_double(double x);

std::vector<std::string> split_csv_line(const std::string& line);

// Writes through a temporary sibling file and renames it into place.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content);

std::vector<std::string> default_item_ids(std::size_t n);
std::vector<std::string> default_feature_names(std::size_t d);

}  // namespace care::io
