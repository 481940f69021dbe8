#pragma once

// Chat-completion gateway shared by the five agent roles: scripted fixtures
// for deterministic runs, an OpenAI-compatible HTTP backend, prompt templates
// and call budgeting.

#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "geoflow/core.hpp"
#include "geoflow/errors.hpp"

namespace geoflow {

// ---------------------------------------------------------------------------
// Requests / responses

enum class AgentRole { data_summary, planner, workflow, coder, checker };

inline const std::vector<AgentRole>& all_roles() {
    static const std::vector<AgentRole> r = {AgentRole::data_summary, AgentRole::planner,
                                             AgentRole::workflow, AgentRole::coder,
                                             AgentRole::checker};
    return r;
}

inline std::string to_string(AgentRole r) {
    switch (r) {
        case AgentRole::data_summary: return "data_summary";
        case AgentRole::planner: return "planner";
        case AgentRole::workflow: return "workflow";
        case AgentRole::coder: return "coder";
        case AgentRole::checker: return "checker";
    }
    return "coder";
}

inline AgentRole agent_role_from_string(const std::string& s) {
    for (AgentRole r : all_roles())
        if (to_string(r) == s) return r;
    throw ParseError("unknown agent role: " + s);
}

enum class Speaker { system, user, assistant };

inline std::string to_string(Speaker s) {
    switch (s) {
        case Speaker::system: return "system";
        case Speaker::user: return "user";
        case Speaker::assistant: return "assistant";
    }
    return "user";
}

struct ChatMessage {
    Speaker speaker = Speaker::user;
    std::string text;
};

struct ChatRequest {
    AgentRole role_tag = AgentRole::coder;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_output_tokens = 4096;
};

inline ChatRequest make_request(AgentRole role, std::string user_text, double temperature = 0.0) {
    ChatRequest req;
    req.role_tag = role;
    req.temperature = temperature;
    req.messages.push_back({Speaker::user, std::move(user_text)});
    return req;
}

struct TokenUsage {
    long prompt_tokens = 0;
    long output_tokens = 0;
};

struct ChatResponse {
    std::string text;
    std::optional<TokenUsage> usage;
    std::string backend_id;
    std::chrono::milliseconds latency{0};
    int retries = 0;
};

// ---------------------------------------------------------------------------
// Budget

struct CallBudget {
    int max_calls = 200;
    int calls_used = 0;
    std::map<AgentRole, int> per_role_caps;
    std::map<AgentRole, int> per_role_used;
};

// Throws before any backend contact when the budget would be exceeded.
inline void consume_call(CallBudget& b, AgentRole role) {
    if (b.calls_used >= b.max_calls)
        throw BudgetExhausted("call budget exhausted (" + std::to_string(b.max_calls) + ")");
    auto cap = b.per_role_caps.find(role);
    if (cap != b.per_role_caps.end() && b.per_role_used[role] >= cap->second)
        throw BudgetExhausted("per-role budget exhausted for " + to_string(role));
    b.calls_used += 1;
    b.per_role_used[role] += 1;
}

// ---------------------------------------------------------------------------
// Backends

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
    virtual std::string id() const = 0;
};

// Canned responses keyed by role, consumed FIFO. The workhorse behind every
// deterministic test and the bundled benchmark corpus.
class ScriptedBackend : public ChatBackend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(bool strict) : strict_(strict) {}

    static std::shared_ptr<ScriptedBackend> from_json(const json& j) {
        auto backend = std::make_shared<ScriptedBackend>(j.value("strict", true));
        if (j.contains("queues")) {
            for (auto& [role_name, texts] : j.at("queues").items()) {
                AgentRole role = agent_role_from_string(role_name);
                for (const auto& t : texts) backend->push(role, t.get<std::string>());
            }
        }
        return backend;
    }

    static std::shared_ptr<ScriptedBackend> from_file(const fs::path& path) {
        std::ifstream in(path);
        if (!in.is_open()) throw ParameterError("cannot open fixture file: " + path.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ParseError("bad fixture file " + path.string() + ": " + e.what());
        }
        return from_json(j);
    }

    void push(AgentRole role, std::string text) {
        std::lock_guard<std::mutex> lock(mu_);
        queues_[role].push_back(std::move(text));
    }

    std::size_t remaining(AgentRole role) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = queues_.find(role);
        return it == queues_.end() ? 0 : it->second.size();
    }

    ChatResponse complete(const ChatRequest& req) override {
        std::lock_guard<std::mutex> lock(mu_);
        ChatResponse resp;
        resp.backend_id = id();
        resp.latency = std::chrono::milliseconds(0);
        auto it = queues_.find(req.role_tag);
        if (it == queues_.end() || it->second.empty()) {
            if (strict_)
                throw FixtureExhausted("no scripted response left for role " +
                                       to_string(req.role_tag));
            resp.text = "";
            return resp;
        }
        resp.text = std::move(it->second.front());
        it->second.pop_front();
        return resp;
    }

    std::string id() const override { return "scripted"; }

private:
    mutable std::mutex mu_;
    std::map<AgentRole, std::deque<std::string>> queues_;
    bool strict_ = true;
};

struct HttpBackendConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8080 or .../v1/chat/completions
    std::string api_key;
    std::string model = "gpt-4o-mini";
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{1000};
    double backoff_factor = 2.0;
    std::chrono::seconds read_timeout{120};
};

// OpenAI-compatible chat completions over HTTP with exponential backoff on
// transient failures (429/5xx/transport).
class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.endpoint.empty()) throw ParameterError("http backend requires an endpoint");
        split_endpoint(cfg_.endpoint, base_, path_);
    }

    ChatResponse complete(const ChatRequest& req) override {
        json body;
        body["model"] = cfg_.model;
        body["temperature"] = req.temperature;
        body["max_tokens"] = req.max_output_tokens;
        body["messages"] = json::array();
        for (const auto& m : req.messages)
            body["messages"].push_back({{"role", to_string(m.speaker)}, {"content", m.text}});
        const std::string payload = body.dump();

        httplib::Headers headers;
        if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

        const auto started = std::chrono::steady_clock::now();
        std::string last_error = "transport failure";
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                auto delay = std::chrono::milliseconds(static_cast<long>(
                    static_cast<double>(cfg_.backoff_base.count()) *
                    std::pow(cfg_.backoff_factor, attempt - 1)));
                std::this_thread::sleep_for(delay);
            }
            httplib::Client cli(base_);
            cli.set_read_timeout(cfg_.read_timeout);
            cli.set_connection_timeout(std::chrono::seconds(10));
            auto res = cli.Post(path_, headers, payload, "application/json");
            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw BackendRejected(res->status, res->body.substr(0, 200));
            }
            return parse_response(res->body, attempt, started);
        }
        throw BackendUnavailable("backend unavailable after " + std::to_string(cfg_.max_retries) +
                                 " retries: " + last_error);
    }

    std::string id() const override { return "http:" + cfg_.model; }

private:
    ChatResponse parse_response(const std::string& body, int retries,
                                std::chrono::steady_clock::time_point started) const {
        json j;
        try {
            j = json::parse(body);
        } catch (const json::exception&) {
            throw BackendRejected(200, "malformed completion body: " + body.substr(0, 120));
        }
        if (!j.contains("choices") || j["choices"].empty())
            throw BackendRejected(200, "completion body has no choices");
        ChatResponse resp;
        resp.text = j["choices"][0].at("message").at("content").get<std::string>();
        if (j.contains("usage") && j["usage"].is_object()) {
            TokenUsage u;
            u.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
            u.output_tokens = j["usage"].value("completion_tokens", 0L);
            if (u.prompt_tokens >= 0 && u.output_tokens >= 0) resp.usage = u;
        }
        resp.backend_id = id();
        resp.retries = retries;
        resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        return resp;
    }

    static void split_endpoint(const std::string& endpoint, std::string& base,
                               std::string& path) {
        auto scheme_end = endpoint.find("://");
        std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        auto path_start = endpoint.find('/', host_start);
        if (path_start == std::string::npos) {
            base = endpoint;
            path = "/v1/chat/completions";
        } else {
            base = endpoint.substr(0, path_start);
            path = endpoint.substr(path_start);
        }
    }

    HttpBackendConfig cfg_;
    std::string base_;
    std::string path_;
};

// ---------------------------------------------------------------------------
// Prompt templates

namespace prompt_defaults {
// Built-in templates; a prompts/ directory with <id>.txt files overrides them.
inline const std::map<std::string, std::string>& table();
}  // namespace prompt_defaults

class PromptLibrary {
public:
    PromptLibrary() : templates_(prompt_defaults::table()) {}

    void set(const std::string& id, std::string text) { templates_[id] = std::move(text); }

    bool has(const std::string& id) const { return templates_.count(id) > 0; }

    void load_directory(const fs::path& dir) {
        if (!fs::exists(dir)) return;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (!e.is_regular_file() || e.path().extension() != ".txt") continue;
            std::ifstream in(e.path(), std::ios::binary);
            std::string text((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
            templates_[e.path().stem().string()] = std::move(text);
        }
    }

    // Deterministic {{name}} substitution; every placeholder must be bound.
    std::string render(const std::string& id, const json& context) const {
        auto it = templates_.find(id);
        if (it == templates_.end()) throw ParameterError("unknown prompt template: " + id);
        const std::string& tpl = it->second;
        std::string out;
        out.reserve(tpl.size());
        std::size_t pos = 0;
        while (pos < tpl.size()) {
            auto open = tpl.find("{{", pos);
            if (open == std::string::npos) {
                out.append(tpl, pos, std::string::npos);
                break;
            }
            auto close = tpl.find("}}", open + 2);
            if (close == std::string::npos) {
                out.append(tpl, pos, std::string::npos);
                break;
            }
            out.append(tpl, pos, open - pos);
            std::string name = tpl.substr(open + 2, close - open - 2);
            // trim
            while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front())))
                name.erase(name.begin());
            while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back())))
                name.pop_back();
            if (!context.contains(name)) throw TemplateError(name);
            const json& v = context.at(name);
            out += v.is_string() ? v.get<std::string>() : v.dump();
            pos = close + 2;
        }
        return out;
    }

private:
    std::map<std::string, std::string> templates_;
};

inline std::string render_prompt(const PromptLibrary& lib, const std::string& id,
                                 const json& context) {
    return lib.render(id, context);
}

// ---------------------------------------------------------------------------
// Gateway

inline void record_usage(const ChatResponse& resp, Ledger& ledger,
                         Stage stage = Stage::data_preparation,
                         AgentRole role = AgentRole::coder) {
    json usage = nullptr;
    if (resp.usage) {
        usage = json{{"prompt_tokens", resp.usage->prompt_tokens},
                     {"output_tokens", resp.usage->output_tokens}};
    }
    ledger.append(stage, EventKind::llm_usage,
                  json{{"role", to_string(role)},
                       {"backend", resp.backend_id},
                       {"latency_ms", resp.latency.count()},
                       {"usage", usage}});
}

// One gateway serves all five agent roles; the budget guard runs before any
// backend contact and mutations are serialized.
class LlmGateway {
public:
    explicit LlmGateway(std::shared_ptr<ChatBackend> backend,
                        std::shared_ptr<Ledger> ledger = nullptr, CallBudget budget = {})
        : backend_(std::move(backend)), ledger_(std::move(ledger)), budget_(budget) {
        if (!backend_) throw ParameterError("gateway requires a backend");
    }

    ChatResponse complete(const ChatRequest& req) { return complete(req, budget_); }

    ChatResponse complete(const ChatRequest& req, CallBudget& budget) {
        if (req.messages.empty()) throw ParameterError("chat request needs at least one message");
        {
            std::lock_guard<std::mutex> lock(mu_);
            consume_call(budget, req.role_tag);
        }
        Stage stage = stage_.load();
        try {
            ChatResponse resp = backend_->complete(req);
            log_call(req, &resp, "", stage);
            if (ledger_) record_usage(resp, *ledger_, stage, req.role_tag);
            return resp;
        } catch (const GeoflowError& e) {
            log_call(req, nullptr, e.what(), stage);
            throw;
        }
    }

    const CallBudget& budget() const { return budget_; }
    CallBudget& budget() { return budget_; }

    void set_stage(Stage s) { stage_.store(s); }
    Stage stage() const { return stage_.load(); }

    PromptLibrary& prompts() { return prompts_; }
    const PromptLibrary& prompts() const { return prompts_; }

    std::shared_ptr<Ledger> ledger() const { return ledger_; }
    ChatBackend& backend() { return *backend_; }

private:
    void log_call(const ChatRequest& req, const ChatResponse* resp, const std::string& error,
                  Stage stage) {
        if (!ledger_) return;
        json messages = json::array();
        for (const auto& m : req.messages)
            messages.push_back({{"speaker", to_string(m.speaker)}, {"text", m.text}});
        json payload{{"role", to_string(req.role_tag)},
                     {"temperature", req.temperature},
                     {"messages", messages}};
        if (resp) {
            payload["response"] = resp->text;
            payload["backend"] = resp->backend_id;
            payload["retries"] = resp->retries;
        } else {
            payload["error"] = error;
        }
        ledger_->append(stage, EventKind::llm_call, std::move(payload));
    }

    std::shared_ptr<ChatBackend> backend_;
    std::shared_ptr<Ledger> ledger_;
    CallBudget budget_;
    PromptLibrary prompts_;
    std::atomic<Stage> stage_{Stage::data_preparation};
    std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Built-in prompt texts

namespace prompt_defaults {

inline const std::map<std::string, std::string>& table() {
    static const std::map<std::string, std::string> t = {
        {"data_probe", R"(You are the data summary agent of an Earth-Observation workflow engine.
Write one Python 3 script that inspects every input file and writes profile.json into the current working directory.

Input files (also provided at runtime via the GF_DATA_POINTERS environment variable, one path per line):
{{pointers}}

Task context: {{task_text}}

profile.json must have exactly this shape:
{"items":[{"path": str, "modality": "rgb"|"multispectral"|"sar"|"ntl"|"product"|"tabular"|"unknown",
           "rows": int, "cols": int, "bands": int, "crs": str,
           "min": [per-band], "max": [per-band], "mean": [per-band], "nodata_fraction": [per-band]}]}

Rasters in the self-contained ASCII grid format carry a six-line header
(ncols, nrows, xllcorner, yllcorner, cellsize, NODATA_value) followed by nrows lines of ncols numbers.
{{feedback_section}}
Respond with only the script body. No prose, no code fences.)"},
        {"profile_distill", R"(Summarize these Earth-Observation data items into a short planning narrative.
Mention dimensions, band counts, modality, projection and value ranges.

{{items_json}}

Respond with plain text only.)"},
        {"plan_candidates", R"(You are the planning agent of an Earth-Observation workflow engine.

Task: {{task_text}}
Stage scope: {{stage_scope}}

Data context:
{{profile_narrative}}

Data items:
{{profile_items}}

Relevant knowledge:
{{knowledge}}

Available tools and reference scripts:
{{tools}}

Produce ONE candidate plan as JSON:
{"plan_id": str, "steps":[{"step_id": str, "description": str,
  "required_inputs":[str], "produced_outputs":[str],
  "stage": "data_preparation"|"feature_extraction"|"geospatial_analysis"}]}

Every step description must be a concrete action. Respond with only the JSON document.)"},
        {"workflow_compile", R"(You are the workflow agent. Turn the plan below into executable script nodes.

Plan:
{{plan_json}}

Data items:
{{profile_items}}

Respond with only JSON:
{"nodes":[{"node_id": str, "purpose": str,
  "stage": "data_preparation"|"feature_extraction"|"geospatial_analysis",
  "inputs":[{"name": str, "kind": str}],
  "outputs":[{"name": str, "kind": str, "path": str}],
  "params": {}}]}

Each input name must match an initial data item (path or filename) or an output name of another node.
Output paths are relative to the node's own working directory and must not contain '..'.
{{repair_section}})"},
        {"tool_synthesize", R"(You are the coding agent. Write one Python 3 script that performs the workflow node below.

Node:
{{node_json}}

Data context:
{{profile_narrative}}

Reference scripts:
{{references}}

Knowledge:
{{knowledge}}

External command tools (name = command template):
{{external_tools}}

At runtime the script can read these environment variables:
  WORKSPACE   absolute run directory
  GF_NODE_ID  this node's id
  GF_INPUTS   one "name=absolute_path" line per input
  GF_OUTPUTS  one "name=relative_path" line per output (relative to the cwd)
  GF_PARAMS   node params as JSON
  GF_TOOLS    one "name=command_template" line per external command tool

On success the script must write manifest.json in the current directory:
{"artifacts":[{"name": str, "path": str, "kind": "raster"|"table"|"keyvalue",
   "stats": {"min":num,"max":num,"mean":num,"nodata_fraction":num,"rows":int,"cols":int,"bands":int,"crs":str} or null}],
 "results": {key: number|string} or null}

Respond with only the script body. No prose, no code fences.)"},
        {"tool_revise", R"(Your previous script for workflow node {{node_id}} (round {{round}}) did not converge.

Failure kind: {{kind}}
Feedback:
{{detail}}
{{focus_section}}
Previous script:
{{body}}

Respond with only the corrected script body. No prose, no code fences.)"},
        {"checker_focus", R"(A workflow node script failed its checks. In at most two sentences, state what the revision should focus on.

Node: {{node_id}}
Feedback:
{{detail}})"},
        {"script_describe", R"(Describe what the following script does, in at most 60 words of plain text.

{{body}})"},
    };
    return t;
}

}  // namespace prompt_defaults

}  // namespace geoflow
