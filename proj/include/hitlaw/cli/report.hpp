#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hitlaw/pointprocess.hpp"
#include "hitlaw/subsystem.hpp"

namespace hitlaw::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "1.0.0";

class CheckList {
 public:
  void add(std::string name, bool pass, double value, double tolerance);
  void skip(std::string name, std::string reason);
  bool all_pass() const noexcept;
  Json to_json() const;

 private:
  Json entries_ = Json::array();
  bool pass_ = true;
};

struct CsvTable {
  std::string name;  // file name
  std::string content;
};

Json convergence_json(const ConvergenceReport& report);
Json limit_test_json(const LimitTestReport& report);

CsvTable cluster_table_csv(const std::string& name, const std::vector<ClusterConstant>& windowed,
                           const std::vector<ClusterConstant>& full_window);
CsvTable gaps_csv(const std::string& name, std::span<const PointProcessSample> samples);
CsvTable marks_csv(const std::string& name, const LimitTestReport& report, const MarkedPoissonParams& params);

/// Copy of the report without its "timing" member.
Json without_timing(const Json& report);

}  // namespace hitlaw::cli
