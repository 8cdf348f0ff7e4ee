#include "mint/error.hpp"
#include "mint/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace mint {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) throw ValidationError("line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    t.header = split_csv_line(line, line_no);
    for (auto& h : t.header) h = trim(h);
    break;
  }
  if (t.header.empty()) throw ValidationError("CSV has no header row");
  while (next_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    t.rows.push_back(split_csv_line(line, line_no));
    if (t.rows.back().size() > t.header.size())
      throw ValidationError("line " + std::to_string(line_no) + ": " + std::to_string(t.rows.back().size()) +
                            " fields, header has " + std::to_string(t.header.size()));
    t.line_numbers.push_back(line_no);
  }
  return t;
}

std::size_t column_index(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw ValidationError("CSV header has no column '" + name + "'");
}

const std::string& cell(const Table& t, std::size_t row, std::size_t col) {
  const auto& r = t.rows[row];
  if (col >= r.size() || trim(r[col]).empty())
    throw ValidationError("line " + std::to_string(t.line_numbers[row]) + ", column '" + t.header[col] +
                          "': missing value");
  return r[col];
}

double parse_number(const Table& t, std::size_t row, std::size_t col) {
  const std::string text = trim(cell(t, row, col));
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
    throw ValidationError("line " + std::to_string(t.line_numbers[row]) + ", column '" + t.header[col] +
                          "': '" + text + "' is not a finite decimal number");
  return value;
}

std::vector<std::size_t> covariate_indices(const Table& t, const std::vector<std::string>& requested,
                                           const std::vector<std::string>& reserved) {
  std::vector<std::size_t> idx;
  if (!requested.empty()) {
    for (const auto& name : requested) idx.push_back(column_index(t, name));
    return idx;
  }
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (std::find(reserved.begin(), reserved.end(), t.header[i]) == reserved.end()) idx.push_back(i);
  return idx;
}

// Environment order follows first appearance in the file.
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_rows(const Table& t, std::size_t env_col) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  std::map<std::string, std::size_t> position;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string env = trim(cell(t, r, env_col));
    auto [it, inserted] = position.try_emplace(env, groups.size());
    if (inserted) groups.push_back({env, {}});
    groups[it->second].second.push_back(r);
  }
  if (groups.size() < 2)
    throw ValidationError("CSV holds " + std::to_string(groups.size()) + " environment(s); at least 2 are required");
  return groups;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

struct PooledMoments {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd sd;
};

template <typename Blocks, typename Names>
PooledMoments pooled_moments(const Blocks& blocks, Eigen::Index d, Names&& column_name) {
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
  double n = 0.0;
  for (const auto& b : blocks) {
    sum += b.X.colwise().sum();
    n += static_cast<double>(b.X.rows());
  }
  PooledMoments m{sum / n, Eigen::RowVectorXd::Zero(d)};
  Eigen::RowVectorXd ss = Eigen::RowVectorXd::Zero(d);
  for (const auto& b : blocks) ss += (b.X.rowwise() - m.mean).array().square().colwise().sum().matrix();
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = ss(j) / n;
    if (!(var > 0.0)) throw ValidationError("covariate '" + column_name(j) + "' has zero variance");
    m.sd(j) = std::sqrt(var);
  }
  return m;
}

}  // namespace

MultiEnvDataset read_csv_dataset(std::istream& in, const CsvSchema& schema) {
  const Table t = read_table(in);
  const std::size_t env_col = column_index(t, schema.env_column);
  const std::size_t a_col = column_index(t, schema.treatment_column);
  const std::size_t y_col = column_index(t, schema.outcome_column);
  const auto x_cols =
      covariate_indices(t, schema.covariate_columns, {schema.env_column, schema.treatment_column, schema.outcome_column});
  const auto groups = group_rows(t, env_col);

  std::vector<EnvironmentBlock> blocks;
  for (const auto& [env, rows] : groups) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    EnvironmentBlock b{env, Eigen::MatrixXd(n, static_cast<Eigen::Index>(x_cols.size())), Eigen::VectorXd(n),
                       Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t r = rows[static_cast<std::size_t>(i)];
      b.A(i) = parse_number(t, r, a_col);
      b.Y(i) = parse_number(t, r, y_col);
      for (std::size_t j = 0; j < x_cols.size(); ++j) b.X(i, static_cast<Eigen::Index>(j)) = parse_number(t, r, x_cols[j]);
    }
    blocks.push_back(std::move(b));
  }
  return MultiEnvDataset(std::move(blocks));
}

MultiEnvDataset load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
  auto in = open_input(path);
  return read_csv_dataset(in, schema);
}

void write_csv_dataset(std::ostream& out, const MultiEnvDataset& dataset) {
  out << "env,a,y";
  for (Eigen::Index j = 0; j < dataset.covariate_dim(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (const auto& b : dataset.blocks()) {
    const std::string env = csv_escape(b.env_id);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      out << env << ',' << format_number(b.A(i)) << ',' << format_number(b.Y(i));
      for (Eigen::Index j = 0; j < b.X.cols(); ++j) out << ',' << format_number(b.X(i, j));
      out << '\n';
    }
  }
}

void save_csv_dataset(const std::filesystem::path& path, const MultiEnvDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  write_csv_dataset(out, dataset);
}

CovariateDataset read_covariate_csv(std::istream& in, const std::string& env_column,
                                    const std::vector<std::string>& covariate_columns) {
  const Table t = read_table(in);
  const std::size_t env_col = column_index(t, env_column);
  const auto x_cols = covariate_indices(t, covariate_columns, {env_column});
  if (x_cols.empty()) throw ValidationError("covariate CSV has no covariate columns");
  const auto groups = group_rows(t, env_col);
  std::vector<std::string> names;
  for (auto c : x_cols) names.push_back(t.header[c]);

  std::vector<CovariateBlock> blocks;
  for (const auto& [env, rows] : groups) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(x_cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < x_cols.size(); ++j)
        X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_number(t, rows[i], x_cols[j]);
    blocks.push_back({env, std::move(X)});
  }
  return CovariateDataset(std::move(blocks), std::move(names));
}

CovariateDataset load_covariate_csv(const std::filesystem::path& path, const std::string& env_column,
                                    const std::vector<std::string>& covariate_columns) {
  auto in = open_input(path);
  return read_covariate_csv(in, env_column, covariate_columns);
}

MultiEnvDataset standardize_covariates(const MultiEnvDataset& dataset) {
  const auto m = pooled_moments(dataset.blocks(), dataset.covariate_dim(),
                                [](Eigen::Index j) { return "x" + std::to_string(j + 1); });
  std::vector<EnvironmentBlock> blocks(dataset.blocks().begin(), dataset.blocks().end());
  for (auto& b : blocks) b.X = ((b.X.rowwise() - m.mean).array().rowwise() / m.sd.array()).matrix();
  return MultiEnvDataset(std::move(blocks));
}

CovariateDataset standardize_covariates(const CovariateDataset& covariates) {
  const auto& names = covariates.column_names();
  const auto m = pooled_moments(covariates.blocks(), covariates.covariate_dim(),
                                [&](Eigen::Index j) { return names[static_cast<std::size_t>(j)]; });
  std::vector<CovariateBlock> blocks(covariates.blocks().begin(), covariates.blocks().end());
  for (auto& b : blocks) b.X = ((b.X.rowwise() - m.mean).array().rowwise() / m.sd.array()).matrix();
  return CovariateDataset(std::move(blocks), names);
}

}  // namespace mint
