#include "care/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <unordered_map>
#include <utility>

#include "care/error.hpp"

namespace care::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool skip_line(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t[0] == '#';
}

std::int64_t parse_count(const std::string& cell, std::size_t row,
                         std::size_t col, const char* name) {
  const std::string t = trim(cell);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    std::ostringstream os;
    os << "row " << row << ", column " << col << ": " << name
       << " is not an integer: '" << t << "'";
    throw ParseError(os.str(), row, col);
  }
  return v;
}

double parse_real(const std::string& cell, std::size_t row, std::size_t col) {
  const std::string t = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() ||
      !std::isfinite(v)) {
    std::ostringstream os;
    os << "row " << row << ", column " << col << ": not a finite number: '"
       << t << "'";
    throw ParseError(os.str(), row, col);
  }
  return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

ParsedComparisons parse_comparisons_csv(std::istream& in,
                                        const std::vector<std::string>& known_ids) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    if (skip_line(line)) continue;
    header = split_csv_line(line);
    break;
  }
  for (auto& h : header) h = lower(h);
  const bool aggregated =
      header == std::vector<std::string>{"item_i", "item_j", "trials", "wins_j"};
  const bool per_trial =
      header == std::vector<std::string>{"item_i", "item_j", "winner"};
  if (!aggregated && !per_trial) {
    throw ParseError(
        "comparisons header must be item_i,item_j,trials,wins_j or "
        "item_i,item_j,winner",
        row, 0);
  }

  ParsedComparisons out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& id : known_ids) {
    if (index.emplace(id, out.item_ids.size()).second) out.item_ids.push_back(id);
  }
  auto lookup = [&](const std::string& id) {
    auto [it, inserted] = index.emplace(id, out.item_ids.size());
    if (inserted) out.item_ids.push_back(id);
    return it->second;
  };

  // Aggregate per canonical pair, remembering first-seen order.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> slot;
  std::vector<Comparison> edges;
  const std::size_t width = header.size();
  while (std::getline(in, line)) {
    ++row;
    if (skip_line(line)) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width) {
      std::ostringstream os;
      os << "row " << row << ": expected " << width << " fields, found "
         << cells.size();
      throw ParseError(os.str(), row, 0);
    }
    if (cells[0].empty() || cells[1].empty()) {
      throw ParseError("row " + std::to_string(row) + ": empty item id", row, 1);
    }
    if (cells[0] == cells[1]) {
      throw ParseError("row " + std::to_string(row) + ": self-comparison of '" +
                           cells[0] + "'",
                       row, 2);
    }
    std::int64_t trials = 1;
    std::int64_t wins_j = 0;
    if (aggregated) {
      trials = parse_count(cells[2], row, 3, "trials");
      wins_j = parse_count(cells[3], row, 4, "wins_j");
      if (trials <= 0) {
        throw ParseError("row " + std::to_string(row) + ": trials must be positive",
                         row, 3);
      }
      if (wins_j < 0 || wins_j > trials) {
        throw ParseError("row " + std::to_string(row) +
                             ": wins_j must lie in [0, trials]",
                         row, 4);
      }
    } else {
      const std::string& winner = cells[2];
      if (lower(winner) == "tie") {
        ++out.ties_rejected;
        continue;
      }
      if (winner == cells[1]) {
        wins_j = 1;
      } else if (winner != cells[0]) {
        throw ParseError("row " + std::to_string(row) + ": winner '" + winner +
                             "' is neither item_i nor item_j",
                         row, 3);
      }
    }
    ++out.rows;
    std::size_t i = lookup(cells[0]);
    std::size_t j = lookup(cells[1]);
    if (i > j) {
      std::swap(i, j);
      wins_j = trials - wins_j;
    }
    const auto [it, inserted] = slot.emplace(std::make_pair(i, j), edges.size());
    if (inserted) {
      edges.push_back({i, j, trials, wins_j});
    } else {
      edges[it->second].trials += trials;
      edges[it->second].wins_j += wins_j;
    }
  }
  out.data = ComparisonData(out.item_ids.size(), std::move(edges));
  return out;
}

ParsedComparisons parse_comparisons_csv(const std::filesystem::path& path,
                                        const std::vector<std::string>& known_ids) {
  auto in = open_input(path);
  return parse_comparisons_csv(in, known_ids);
}

void write_comparisons_csv(std::ostream& out, const ComparisonData& data,
                           const std::vector<std::string>& item_ids) {
  if (item_ids.size() != data.n_items()) {
    throw InvalidArgument("item id list does not match the comparison data");
  }
  out << "item_i,item_j,trials,wins_j\n";
  for (const Comparison& e : data.edges()) {
    out << quote_if_needed(item_ids[e.i]) << ',' << quote_if_needed(item_ids[e.j])
        << ',' << e.trials << ',' << e.wins_j << '\n';
  }
}

ParsedCovariates parse_covariates_csv(std::istream& in,
                                      const std::vector<std::string>& item_ids) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    if (skip_line(line)) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty() || lower(header[0]) != "item") {
    throw ParseError("covariates header must start with 'item'", row, 1);
  }
  ParsedCovariates out;
  out.feature_names.assign(header.begin() + 1, header.end());
  const auto d = static_cast<Eigen::Index>(out.feature_names.size());

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < item_ids.size(); ++k) index.emplace(item_ids[k], k);
  out.raw = Matrix::Zero(static_cast<Eigen::Index>(item_ids.size()), d);
  std::vector<std::size_t> seen_at(item_ids.size(), 0);
  std::unordered_map<std::string, std::size_t> extras;

  while (std::getline(in, line)) {
    ++row;
    if (skip_line(line)) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << "row " << row << ": expected " << header.size() << " fields, found "
         << cells.size();
      throw ParseError(os.str(), row, 0);
    }
    const auto it = index.find(cells[0]);
    if (it == index.end()) {
      if (!extras.emplace(cells[0], row).second) {
        throw ParseError("row " + std::to_string(row) + ": duplicate item '" +
                             cells[0] + "'",
                         row, 1);
      }
      ++out.extra_items;
      continue;
    }
    const std::size_t k = it->second;
    if (seen_at[k] != 0) {
      std::ostringstream os;
      os << "row " << row << ": duplicate item '" << cells[0]
         << "' (first seen on row " << seen_at[k] << ")";
      throw ParseError(os.str(), row, 1);
    }
    seen_at[k] = row;
    for (Eigen::Index c = 0; c < d; ++c) {
      out.raw(static_cast<Eigen::Index>(k), c) =
          parse_real(cells[static_cast<std::size_t>(c) + 1], row,
                     static_cast<std::size_t>(c) + 2);
    }
  }
  for (std::size_t k = 0; k < item_ids.size(); ++k) {
    if (seen_at[k] == 0) {
      throw ParseError("covariates are missing item '" + item_ids[k] + "'");
    }
  }
  return out;
}

ParsedCovariates parse_covariates_csv(const std::filesystem::path& path,
                                      const std::vector<std::string>& item_ids) {
  auto in = open_input(path);
  return parse_covariates_csv(in, item_ids);
}

void write_covariates_csv(std::ostream& out, const Matrix& raw,
                          const std::vector<std::string>& item_ids,
                          const std::vector<std::string>& feature_names) {
  if (static_cast<Eigen::Index>(item_ids.size()) != raw.rows() ||
      static_cast<Eigen::Index>(feature_names.size()) != raw.cols()) {
    throw InvalidArgument("covariate labels do not match the matrix");
  }
  out << "item";
  for (const auto& f : feature_names) out << ',' << quote_if_needed(f);
  out << '\n';
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    out << quote_if_needed(item_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index c = 0; c < raw.cols(); ++c) out << ',' << format_double(raw(i, c));
    out << '\n';
  }
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  if (ec != std::errc()) throw InvalidArgument("cannot format number");
  return std::string(buf, ptr);
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> default_item_ids(std::size_t n) {
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::string num = std::to_string(k);
    ids.push_back("item" + std::string(width - num.size(), '0') + num);
  }
  return ids;
}

std::vector<std::string> default_feature_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < d; ++k) names.push_back("f" + std::to_string(k + 1));
  return names;
}

}  // namespace care::io
