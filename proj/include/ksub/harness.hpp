#pragma once
#include <string>
#include <vector>

#include "ksub/config.hpp"

namespace ksub {

struct CheckResult {
    std::string name;
    std::string claim; // what geometric statement the check verifies
    bool pass = false;
    double evidence = 0; // worst residual / margin backing the verdict
    std::string detail;
};

struct RunReport {
    std::string scenario;
    std::string command;
    bool pass = false;
    std::vector<CheckResult> checks;
    double wall_seconds = 0;
    std::string tool_version;
    std::string config_hash;
    unsigned long long seed = 0;
    std::vector<std::string> artifacts; // files written under the output dir
    std::string error;                  // captured failure, never a crash

    Json to_json() const;
};

struct SuiteReport {
    std::vector<RunReport> runs; // sorted by scenario name
    int passed = 0, failed = 0;

    bool all_pass() const { return failed == 0; }
    Json to_json() const;
    std::string summary_text() const; // one line per check with its claim
};

extern const char* kToolVersion;

// Executes one scenario by name; writes a JSON report and CSV artifacts
// into out_dir. Module errors are captured into the report.
RunReport run_scenario(const Config& cfg, const std::string& name, const std::string& out_dir);

// Runs every scenario tagged "regression" (all scenarios when none are
// tagged), aggregates and writes summary.txt + suite.json.
SuiteReport run_suite(const Config& cfg, const std::string& out_dir);

// deterministic double formatting used by every artifact writer
std::string format_double(double v);

} // namespace ksub
