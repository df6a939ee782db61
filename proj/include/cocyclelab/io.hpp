#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocyclelab/cocycle.hpp"

namespace cocyclelab {

using Json = nlohmann::json;

// Rejects unknown keys: configs are schema-validated before execution.
void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                  const std::string& context);

// {"type":"sft","alphabet":k,"transitions":[[...]]} or {"type":"toral","matrix":[[...]]}
std::shared_ptr<System> system_from_json(const Json& spec);

// {"kind":...,"m":...,"alpha":...,"seed":...,"params":{...}}
CocycleGenerator generator_from_json(std::shared_ptr<const System> sys, const Json& spec);

std::string fmt_double(double v);  // %.17g, round-trip exact

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& kind);
  void header(std::initializer_list<const char*> cols);
  void raw(const std::string& line);
  template <typename... Ts>
  void row(Ts... vals) {
    bool first = true;
    for (const std::string& v : {to_field(vals)...}) {
      if (!first) out_ << ",";
      out_ << v;
      first = false;
    }
    out_ << "\n";
  }

 private:
  static std::string to_field(double v) { return fmt_double(v); }
  static std::string to_field(const char* v) { return v; }
  static std::string to_field(const std::string& v) { return v; }
  template <typename T>
    requires std::is_integral_v<T>
  static std::string to_field(T v) {
    return std::to_string(v);
  }
  std::ofstream out_;
};

Json matrix_to_json(const Matrix& m);  // row-major nested arrays
Matrix matrix_from_json(const Json& j);

void write_orbit_csv(const System& sys, const std::vector<Point>& orbit,
                     const std::string& path);

}  // namespace cocyclelab
