#pragma once
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ksub/submersion.hpp"
#include "ksub/surface.hpp"

namespace ksub {

using Json = nlohmann::ordered_json;

// Strict object reader: every key must be consumed, unknown or mistyped
// keys abort with a message naming the key and its location.
class StrictObject {
public:
    StrictObject(const Json& j, std::string location);
    ~StrictObject() = default;

    bool has(const std::string& key) const;
    double number(const std::string& key);
    double number_or(const std::string& key, double fallback);
    long integer(const std::string& key);
    long integer_or(const std::string& key, long fallback);
    bool boolean_or(const std::string& key, bool fallback);
    std::string text(const std::string& key);
    std::string text_or(const std::string& key, const std::string& fallback);
    std::vector<double> number_list(const std::string& key);
    std::vector<std::string> text_list_or(const std::string& key);
    Json raw(const std::string& key);

    // fails if any key was left unread
    void finish() const;

    const std::string& location() const { return location_; }

private:
    const Json& j_;
    std::string location_;
    mutable std::vector<std::string> consumed_;

    const Json& fetch(const std::string& key, const char* type_name);
    void mark(const std::string& key) const;
};

struct ScenarioSpec {
    std::string name;
    std::string command; // verify | curvature | geodesic | foliate | cylinder | sweep
    std::vector<std::string> tags;
    Json body; // full scenario object, re-read strictly by the runner
};

// Parsed configuration: model and surface catalogs plus scenario list.
class Config {
public:
    static Config load(const std::string& path);
    static Config parse(const Json& root, const std::string& source_name,
                        const std::string& base_dir);

    unsigned long long seed = 12345;
    int workers = 1;
    double tol_scale = 1.0;
    std::string config_hash; // FNV-1a of all loaded bytes
    std::vector<ScenarioSpec> scenarios;

    const SubmersionModel& model(const std::string& name) const;
    ImmersedSurface surface(const std::string& name) const;
    bool has_surface(const std::string& name) const;
    // model name a catalog surface is built over
    std::string surface_model(const std::string& name) const;

    std::vector<std::string> model_names() const;

private:
    std::map<std::string, std::shared_ptr<SubmersionModel>> models_;
    std::map<std::string, Json> surface_specs_;
    Tolerances base_tolerances_;

    void add_model(const std::string& name, const Json& spec);
};

} // namespace ksub
