#include "cocyclelab/io.hpp"

#include <cstdio>
#include <set>

namespace cocyclelab {

void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                  const std::string& context) {
  if (!j.is_object()) fail(ErrorCode::config, context + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) fail(ErrorCode::config, context + ": unknown key '" + key + "'");
}

std::shared_ptr<System> system_from_json(const Json& spec) {
  require_keys(spec, {"type", "alphabet", "transitions", "metric_base", "matrix"}, "system");
  std::string type = spec.value("type", "");
  if (type == "sft") {
    if (!spec.contains("alphabet") || !spec.contains("transitions"))
      fail(ErrorCode::config, "system: sft needs alphabet and transitions");
    int k = spec["alphabet"].get<int>();
    const Json& rows = spec["transitions"];
    if (!rows.is_array() || static_cast<int>(rows.size()) != k)
      fail(ErrorCode::config, "system: transitions must be a k x k array");
    Eigen::MatrixXi t(k, k);
    for (int i = 0; i < k; ++i) {
      if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != k)
        fail(ErrorCode::config, "system: transitions must be a k x k array");
      for (int j = 0; j < k; ++j) t(i, j) = rows[i][j].get<int>();
    }
    return make_sft(k, t, spec.value("metric_base", 2.0));
  }
  if (type == "toral") {
    if (!spec.contains("matrix")) fail(ErrorCode::config, "system: toral needs matrix");
    const Json& rows = spec["matrix"];
    int d = static_cast<int>(rows.size());
    Eigen::MatrixXi l(d, d);
    for (int i = 0; i < d; ++i) {
      if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != d)
        fail(ErrorCode::config, "system: matrix must be square");
      for (int j = 0; j < d; ++j) l(i, j) = rows[i][j].get<int>();
    }
    return make_toral(l);
  }
  fail(ErrorCode::config, "system: unknown type '" + type + "'");
}

CocycleGenerator generator_from_json(std::shared_ptr<const System> sys, const Json& spec) {
  require_keys(spec, {"kind", "m", "alpha", "seed", "params", "matrix", "tables"}, "generator");
  std::string kind = spec.value("kind", "");
  if (kind.empty()) fail(ErrorCode::config, "generator: missing kind");
  if (kind == "constant") {
    if (!spec.contains("matrix")) fail(ErrorCode::config, "generator: constant needs matrix");
    return make_constant(std::move(sys), matrix_from_json(spec["matrix"]));
  }
  if (kind == "symbol-table") {
    if (!spec.contains("tables")) fail(ErrorCode::config, "generator: symbol-table needs tables");
    std::vector<Matrix> tables;
    for (const auto& t : spec["tables"]) tables.push_back(matrix_from_json(t));
    return make_symbol_table(std::move(sys), tables);
  }
  FamilyParams p;
  p.m = spec.value("m", 2);
  p.alpha = spec.value("alpha", 0.6);
  p.seed = spec.value("seed", 1ULL);
  if (spec.contains("params")) {
    require_keys(spec["params"], {"amplitude", "conjugacy_amplitude", "frequencies"},
                 "generator.params");
    p.amplitude = spec["params"].value("amplitude", p.amplitude);
    p.conjugacy_amplitude = spec["params"].value("conjugacy_amplitude", p.conjugacy_amplitude);
    p.frequencies = spec["params"].value("frequencies", p.frequencies);
  }
  return make_family(std::move(sys), kind, p);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& kind) : out_(path) {
  if (!out_) fail(ErrorCode::io, "cannot open csv for writing: " + path);
  out_ << "# cocycle-lab " << kVersion << " " << kind << "\n";
}

void CsvWriter::header(std::initializer_list<const char*> cols) {
  bool first = true;
  for (const char* c : cols) {
    if (!first) out_ << ",";
    out_ << c;
    first = false;
  }
  out_ << "\n";
}

void CsvWriter::raw(const std::string& line) { out_ << line << "\n"; }

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::config, "matrix: expected nested arrays");
  int rows = static_cast<int>(j.size());
  int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      fail(ErrorCode::config, "matrix: ragged rows");
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

void write_orbit_csv(const System& sys, const std::vector<Point>& orbit,
                     const std::string& path) {
  CsvWriter w(path, "orbit");
  if (sys.type() == "sft") {
    w.header({"index", "symbol"});
    for (std::size_t i = 0; i < orbit.size(); ++i)
      w.row(i, orbit[i].symbolic().coord(0));
  } else {
    const auto& toral = dynamic_cast<const ToralSystem&>(sys);
    std::string head = "index";
    for (int d = 0; d < toral.dim(); ++d) head += ",x" + std::to_string(d);
    w.raw(head);
    for (std::size_t i = 0; i < orbit.size(); ++i) {
      Eigen::VectorXd c = toral.coords(orbit[i].toral());
      std::string line = std::to_string(i);
      for (int d = 0; d < toral.dim(); ++d) line += "," + fmt_double(c(d));
      w.raw(line);
    }
  }
}

}  // namespace cocyclelab
