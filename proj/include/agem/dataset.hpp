#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "agem/common.hpp"
#include "agem/graph.hpp"

namespace agem {

struct Dataset {
  std::string name;
  Matrix features;                  // n x m
  std::optional<Matrix> adjacency;  // binary symmetric, zero diagonal
  std::vector<int> labels;          // dense ids in [0, num_classes), empty if absent
  int num_classes = 0;
  long dropped_edges = 0;  // cites lines referencing unknown ids or self-loops

  Eigen::Index n() const { return features.rows(); }
  bool has_graph() const { return adjacency.has_value(); }
  bool has_labels() const { return !labels.empty(); }
};

namespace detail {

inline double parse_double(const std::string& token, const std::string& where) {
  double value = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end)
    throw DataError(where + ": expected a number, got '" + token + "'");
  return value;
}

inline std::vector<std::string> split_fields(std::string line, char sep) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

inline std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream stream(line);
  std::string token;
  while (stream >> token) fields.push_back(token);
  return fields;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Citation-graph loader. The content file holds one node per line,
/// `<id> <feat_0> ... <feat_{m-1}> <label>`; the cites file one edge per line,
/// `<cited_id> <citing_id>`. Node ids map to dense indices in file order and
/// edges referencing unknown ids are dropped (counted in dropped_edges).
/// Feature rows are L1-normalized unless normalize is false.
inline Dataset load_citation_dataset(const std::string& content_path,
                                     const std::string& cites_path,
                                     bool normalize = true) {
  std::ifstream content(content_path);
  if (!content) throw DataError("cannot open " + content_path);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::unordered_map<std::string, int> node_index;
  std::unordered_map<std::string, int> label_index;
  Eigen::Index arity = -1;

  std::string line;
  long line_no = 0;
  while (std::getline(content, line)) {
    ++line_no;
    const auto fields = detail::split_whitespace(line);
    if (fields.empty()) continue;
    const std::string where = content_path + ":" + std::to_string(line_no);
    if (fields.size() < 3) throw DataError(where + ": expected <id> <features...> <label>");
    if (arity < 0) {
      arity = static_cast<Eigen::Index>(fields.size()) - 2;
    } else if (static_cast<Eigen::Index>(fields.size()) - 2 != arity) {
      throw DataError(where + ": inconsistent feature count (expected " +
                      std::to_string(arity) + ")");
    }
    if (!node_index.emplace(fields.front(), static_cast<int>(rows.size())).second)
      throw DataError(where + ": duplicate node id '" + fields.front() + "'");
    std::vector<double> feats(arity);
    for (Eigen::Index j = 0; j < arity; ++j)
      feats[j] = detail::parse_double(fields[j + 1], where);
    rows.push_back(std::move(feats));
    const auto [it, inserted] =
        label_index.emplace(fields.back(), static_cast<int>(label_index.size()));
    labels.push_back(it->second);
    (void)inserted;
  }
  if (rows.empty()) throw DataError(content_path + ": empty dataset");

  Dataset ds;
  ds.name = std::filesystem::path(content_path).stem().string();
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), arity);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < arity; ++j) ds.features(i, j) = rows[i][j];
  ds.labels = std::move(labels);
  ds.num_classes = static_cast<int>(label_index.size());

  if (normalize) {
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
      const double sum = ds.features.row(i).cwiseAbs().sum();
      if (sum > 0.0) ds.features.row(i) /= sum;
    }
  }

  std::ifstream cites(cites_path);
  if (!cites) throw DataError("cannot open " + cites_path);
  Matrix a = Matrix::Zero(ds.n(), ds.n());
  line_no = 0;
  while (std::getline(cites, line)) {
    ++line_no;
    const auto fields = detail::split_whitespace(line);
    if (fields.empty()) continue;
    const std::string where = cites_path + ":" + std::to_string(line_no);
    if (fields.size() != 2) throw DataError(where + ": expected <cited_id> <citing_id>");
    const auto it_a = node_index.find(fields[0]);
    const auto it_b = node_index.find(fields[1]);
    if (it_a == node_index.end() || it_b == node_index.end() ||
        it_a->second == it_b->second) {
      ++ds.dropped_edges;
      continue;
    }
    a(it_a->second, it_b->second) = 1.0;
    a(it_b->second, it_a->second) = 1.0;
  }
  ds.adjacency = std::move(a);
  return ds;
}

/// Graphless CSV loader. Header `feat_0,...,feat_{m-1},label`, one node per
/// row. Features are min-max scaled per column to [0, 1] unless normalize is
/// false; a constant column scales to zeros.
inline Dataset load_feature_dataset(const std::string& path, bool normalize = true) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto header = detail::split_fields(line, ',');
  if (header.size() < 2 || header.back() != "label")
    throw DataError(path + ":1: header must be feat_0,...,feat_{m-1},label");
  const Eigen::Index arity = static_cast<Eigen::Index>(header.size()) - 1;

  std::vector<std::vector<double>> rows;
  std::vector<int> raw_labels;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = detail::split_fields(line, ',');
    if (static_cast<Eigen::Index>(fields.size()) != arity + 1)
      throw DataError(where + ": expected " + std::to_string(arity + 1) + " fields, got " +
                      std::to_string(fields.size()));
    std::vector<double> feats(arity);
    for (Eigen::Index j = 0; j < arity; ++j)
      feats[j] = detail::parse_double(fields[j], where + ", column " + std::to_string(j + 1));
    const double label_value = detail::parse_double(fields.back(), where + ", label column");
    rows.push_back(std::move(feats));
    raw_labels.push_back(static_cast<int>(label_value));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  Dataset ds;
  ds.name = std::filesystem::path(path).stem().string();
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), arity);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < arity; ++j) ds.features(i, j) = rows[i][j];

  std::unordered_map<int, int> label_index;
  ds.labels.reserve(raw_labels.size());
  for (int raw : raw_labels) {
    const auto [it, _] = label_index.emplace(raw, static_cast<int>(label_index.size()));
    ds.labels.push_back(it->second);
  }
  ds.num_classes = static_cast<int>(label_index.size());

  if (normalize) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
      const double lo = ds.features.col(j).minCoeff();
      const double hi = ds.features.col(j).maxCoeff();
      if (hi - lo > 0.0)
        ds.features.col(j) = (ds.features.col(j).array() - lo) / (hi - lo);
      else
        ds.features.col(j).setZero();
    }
  }
  return ds;
}

/// Writes the citation format read back by load_citation_dataset.
inline void write_citation_dataset(const Dataset& ds, const std::string& content_path,
                                   const std::string& cites_path) {
  if (!ds.has_labels() || !ds.has_graph())
    throw std::invalid_argument("write_citation_dataset: needs labels and a graph");
  std::ofstream content(content_path);
  if (!content) throw DataError("cannot write " + content_path);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    content << "n" << i;
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j)
      content << '\t' << detail::format_g17(ds.features(i, j));
    content << "\tc" << ds.labels[i] << '\n';
  }
  std::ofstream cites(cites_path);
  if (!cites) throw DataError("cannot write " + cites_path);
  const Matrix& a = *ds.adjacency;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (a(i, j) > 0.5) cites << 'n' << i << '\t' << 'n' << j << '\n';
}

/// Writes the CSV format read back by load_feature_dataset.
inline void write_feature_dataset(const Dataset& ds, const std::string& path) {
  if (!ds.has_labels())
    throw std::invalid_argument("write_feature_dataset: needs labels");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (Eigen::Index j = 0; j < ds.features.cols(); ++j) out << "feat_" << j << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j)
      out << detail::format_g17(ds.features(i, j)) << ',';
    out << ds.labels[i] << '\n';
  }
}

/// Headerless numeric CSV (one row per line), e.g. an exported embedding.
inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  Eigen::Index arity = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = detail::split_fields(line, ',');
    if (arity < 0)
      arity = static_cast<Eigen::Index>(fields.size());
    else if (static_cast<Eigen::Index>(fields.size()) != arity)
      throw DataError(where + ": ragged row");
    std::vector<double> vals(arity);
    for (Eigen::Index j = 0; j < arity; ++j)
      vals[j] = detail::parse_double(fields[j], where);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw DataError(path + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), arity);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < arity; ++j) m(i, j) = rows[i][j];
  return m;
}

inline void write_matrix_csv(const Matrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_g17(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace agem
