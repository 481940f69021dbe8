#pragma once

// Engine configuration: defaults ⊕ config file ⊕ environment ⊕ flags
// (rightmost wins). The file format is flat key=value lines with # comments.

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "geoflow/errors.hpp"

namespace geoflow {

enum class BackendKind { scripted, http };

struct EngineConfig {
    // backend selection
    BackendKind backend = BackendKind::scripted;
    std::string fixture_path;
    std::string endpoint;
    std::string api_key;
    std::string model = "gpt-4o-mini";

    // budgets
    int max_calls = 200;
    int max_debug_rounds = 9;  // revision budget; the node loop runs at most +1 rounds
    int probe_attempts = 5;
    int node_timeout_s = 300;
    int case_time_cap_s = 900;

    // plan parameters
    int plan_candidates = 3;
    double merge_threshold = 0.85;
    double availability_weight = 0.6;
    double rigor_weight = 0.4;
    int k_scripts = 5;
    int k_knowledge = 8;
    double planner_temperature = 0.7;

    // ablation switches
    bool disable_data_summary = false;
    bool disable_planner = false;
    bool disable_checker = false;
    bool disable_knowledge = false;
    bool disable_tools = false;
    bool checker_llm_focus = false;
    bool parallel_nodes = false;

    // paths
    std::string catalog_dir;
    std::string workspace_base = "gf_workspace";
    std::string prompts_dir;
    std::string interpreter = "python3";
};

inline void validate(const EngineConfig& cfg) {
    if (cfg.max_calls <= 0) throw ParameterError("max_calls must be positive");
    if (cfg.max_debug_rounds < 0) throw ParameterError("max_debug_rounds must be non-negative");
    if (cfg.probe_attempts <= 0) throw ParameterError("probe_attempts must be positive");
    if (cfg.node_timeout_s <= 0) throw ParameterError("node_timeout_s must be positive");
    if (cfg.case_time_cap_s <= 0) throw ParameterError("case_time_cap_s must be positive");
    if (cfg.plan_candidates <= 0) throw ParameterError("plan_candidates must be positive");
    if (cfg.merge_threshold < 0.0 || cfg.merge_threshold > 1.0)
        throw ParameterError("merge_threshold must be within [0,1]");
    if (cfg.backend == BackendKind::http && cfg.endpoint.empty())
        throw ParameterError("http backend requires an endpoint (GF_LLM_ENDPOINT)");
}

namespace detail {

inline bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ParameterError("not a boolean: " + v);
}

}  // namespace detail

// Applies one key=value pair; unknown keys are an error at file scope and
// ignored for the environment (the GF_ prefix is shared with runtime vars).
inline bool apply_config_value(EngineConfig& cfg, const std::string& key,
                               const std::string& value) {
    auto as_int = [&] { return std::stoi(value); };
    auto as_double = [&] { return std::stod(value); };
    if (key == "backend") {
        if (value == "scripted")
            cfg.backend = BackendKind::scripted;
        else if (value == "http")
            cfg.backend = BackendKind::http;
        else
            throw ParameterError("unknown backend: " + value);
    } else if (key == "fixture") {
        cfg.fixture_path = value;
    } else if (key == "llm_endpoint") {
        cfg.endpoint = value;
    } else if (key == "llm_api_key") {
        cfg.api_key = value;
    } else if (key == "llm_model") {
        cfg.model = value;
    } else if (key == "max_calls") {
        cfg.max_calls = as_int();
    } else if (key == "max_debug_rounds") {
        cfg.max_debug_rounds = as_int();
    } else if (key == "probe_attempts") {
        cfg.probe_attempts = as_int();
    } else if (key == "node_timeout_s") {
        cfg.node_timeout_s = as_int();
    } else if (key == "case_time_cap_s") {
        cfg.case_time_cap_s = as_int();
    } else if (key == "plan_candidates") {
        cfg.plan_candidates = as_int();
    } else if (key == "merge_threshold") {
        cfg.merge_threshold = as_double();
    } else if (key == "availability_weight") {
        cfg.availability_weight = as_double();
    } else if (key == "rigor_weight") {
        cfg.rigor_weight = as_double();
    } else if (key == "k_scripts") {
        cfg.k_scripts = as_int();
    } else if (key == "k_knowledge") {
        cfg.k_knowledge = as_int();
    } else if (key == "planner_temperature") {
        cfg.planner_temperature = as_double();
    } else if (key == "disable_data_summary") {
        cfg.disable_data_summary = detail::parse_bool(value);
    } else if (key == "disable_planner") {
        cfg.disable_planner = detail::parse_bool(value);
    } else if (key == "disable_checker") {
        cfg.disable_checker = detail::parse_bool(value);
    } else if (key == "disable_knowledge") {
        cfg.disable_knowledge = detail::parse_bool(value);
    } else if (key == "disable_tools") {
        cfg.disable_tools = detail::parse_bool(value);
    } else if (key == "checker_llm_focus") {
        cfg.checker_llm_focus = detail::parse_bool(value);
    } else if (key == "parallel_nodes") {
        cfg.parallel_nodes = detail::parse_bool(value);
    } else if (key == "catalog_dir") {
        cfg.catalog_dir = value;
    } else if (key == "workspace_base") {
        cfg.workspace_base = value;
    } else if (key == "prompts_dir") {
        cfg.prompts_dir = value;
    } else if (key == "interpreter") {
        cfg.interpreter = value;
    } else {
        return false;
    }
    return true;
}

inline void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw ParameterError("cannot open config file: " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
            line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start])))
            ++start;
        line = line.substr(start);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line is not key=value", line_no);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
            std::size_t i = 0;
            while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
            s = s.substr(i);
        };
        trim(key);
        trim(value);
        if (!apply_config_value(cfg, key, value))
            throw ParseError("unknown config key: " + key, line_no);
    }
}

// GF_-prefixed environment variables; unknown GF_ names are ignored (they are
// shared with the sandbox contract vars).
inline void apply_env(EngineConfig& cfg) {
    static const std::map<std::string, std::string> env_to_key = {
        {"GF_BACKEND", "backend"},
        {"GF_FIXTURE", "fixture"},
        {"GF_LLM_ENDPOINT", "llm_endpoint"},
        {"GF_LLM_API_KEY", "llm_api_key"},
        {"GF_LLM_MODEL", "llm_model"},
        {"GF_MAX_CALLS", "max_calls"},
        {"GF_MAX_DEBUG_ROUNDS", "max_debug_rounds"},
        {"GF_PROBE_ATTEMPTS", "probe_attempts"},
        {"GF_NODE_TIMEOUT_S", "node_timeout_s"},
        {"GF_CASE_TIME_CAP_S", "case_time_cap_s"},
        {"GF_PLAN_CANDIDATES", "plan_candidates"},
        {"GF_MERGE_THRESHOLD", "merge_threshold"},
        {"GF_AVAILABILITY_WEIGHT", "availability_weight"},
        {"GF_RIGOR_WEIGHT", "rigor_weight"},
        {"GF_K_SCRIPTS", "k_scripts"},
        {"GF_K_KNOWLEDGE", "k_knowledge"},
        {"GF_PLANNER_TEMPERATURE", "planner_temperature"},
        {"GF_DISABLE_DATA_SUMMARY", "disable_data_summary"},
        {"GF_DISABLE_PLANNER", "disable_planner"},
        {"GF_DISABLE_CHECKER", "disable_checker"},
        {"GF_DISABLE_KNOWLEDGE", "disable_knowledge"},
        {"GF_DISABLE_TOOLS", "disable_tools"},
        {"GF_CHECKER_LLM_FOCUS", "checker_llm_focus"},
        {"GF_PARALLEL_NODES", "parallel_nodes"},
        {"GF_CATALOG_DIR", "catalog_dir"},
        {"GF_WORKSPACE", "workspace_base"},
        {"GF_PROMPTS_DIR", "prompts_dir"},
        {"GF_INTERPRETER", "interpreter"},
    };
    for (const auto& [env_name, key] : env_to_key) {
        const char* v = std::getenv(env_name.c_str());
        if (v && *v) apply_config_value(cfg, key, v);
    }
}

}  // namespace geoflow
