#pragma once

// Planning and Workflow Agents: n candidate plans, semantic merge + ranking by
// data availability and logical rigor, and compilation into a validated DAG of
// script nodes with explicit I/O interfaces.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "geoflow/core.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/llm.hpp"
#include "geoflow/profile.hpp"
#include "geoflow/retrieval.hpp"

namespace geoflow {

// ---------------------------------------------------------------------------
// Plans

struct PlanStep {
    std::string step_id;
    std::string description;
    std::vector<std::string> required_inputs;
    std::vector<std::string> produced_outputs;
    Stage stage = Stage::data_preparation;
};

struct CandidatePlan {
    std::string plan_id;
    std::vector<PlanStep> steps;
    int source_round = 0;
};

inline void validate(const CandidatePlan& plan) {
    if (plan.steps.empty()) throw ParseError("plan " + plan.plan_id + " has no steps");
    std::set<std::string> step_ids;
    std::set<std::string> outputs;
    for (const auto& s : plan.steps) {
        if (s.description.empty())
            throw ParseError("plan " + plan.plan_id + " has a step without a description");
        if (!step_ids.insert(s.step_id).second)
            throw ParseError("plan " + plan.plan_id + " repeats step id " + s.step_id);
        for (const auto& o : s.produced_outputs)
            if (!outputs.insert(o).second)
                throw ParseError("plan " + plan.plan_id + " produces output " + o + " twice");
    }
}

inline json to_json(const PlanStep& s) {
    return json{{"step_id", s.step_id},
                {"description", s.description},
                {"required_inputs", s.required_inputs},
                {"produced_outputs", s.produced_outputs},
                {"stage", to_string(s.stage)}};
}

inline json to_json(const CandidatePlan& p) {
    json steps = json::array();
    for (const auto& s : p.steps) steps.push_back(to_json(s));
    return json{{"plan_id", p.plan_id}, {"steps", steps}, {"source_round", p.source_round}};
}

inline PlanStep plan_step_from_json(const json& j) {
    PlanStep s;
    s.step_id = j.at("step_id").get<std::string>();
    s.description = j.at("description").get<std::string>();
    if (j.contains("required_inputs"))
        s.required_inputs = j.at("required_inputs").get<std::vector<std::string>>();
    if (j.contains("produced_outputs"))
        s.produced_outputs = j.at("produced_outputs").get<std::vector<std::string>>();
    s.stage = stage_from_string(j.value("stage", "data_preparation"));
    return s;
}

inline CandidatePlan plan_from_json(const json& j) {
    CandidatePlan p;
    p.plan_id = j.value("plan_id", "");
    if (!j.contains("steps") || !j.at("steps").is_array())
        throw ParseError("plan document has no steps list");
    for (const auto& sj : j.at("steps")) p.steps.push_back(plan_step_from_json(sj));
    validate(p);
    return p;
}

// Strips markdown fences that chat models like to wrap JSON in.
inline std::string strip_code_fences(const std::string& text) {
    auto start = text.find("```");
    if (start == std::string::npos) return text;
    auto line_end = text.find('\n', start);
    if (line_end == std::string::npos) return text;
    auto close = text.find("```", line_end);
    if (close == std::string::npos) return text;
    return text.substr(line_end + 1, close - line_end - 1);
}

struct PlanningFailed : GeoflowError {
    using GeoflowError::GeoflowError;
};

struct PlanScore {
    double availability = 0.0;
    double rigor = 0.0;
    double total = 0.0;
};

struct AggregatedPlan {
    CandidatePlan plan;
    PlanScore score;
    std::vector<std::string> merged_from;
};

struct PlannerParams {
    int candidates = 3;
    double merge_threshold = 0.85;  // semantic similarity for merging
    double availability_weight = 0.6;
    double rigor_weight = 0.4;
};

// ---------------------------------------------------------------------------
// Candidate generation

inline std::string plans_prompt(const TaskInstruction& task, const DataProfile& profile,
                                const std::vector<SearchResult>& knowledge_hits,
                                const std::vector<SearchResult>& tool_hits,
                                const CatalogIndex* catalog, const PromptLibrary& prompts) {
    auto hits_text = [&](const std::vector<SearchResult>& hits) {
        if (!catalog || hits.empty()) return std::string("(none)");
        std::string out;
        for (const auto& h : hits) {
            const CatalogEntry* e = catalog->find(h.entry_id);
            if (!e) continue;
            out += "- " + e->entry_id + ": " + e->description + "\n";
        }
        return out.empty() ? std::string("(none)") : out;
    };
    std::string tools = hits_text(tool_hits);
    if (catalog) {
        for (const CatalogEntry* e : catalog->by_tier(Tier::external_command))
            tools += "- " + e->entry_id + " (external command): " + e->description + "\n";
    }
    json items = json::array();
    for (const auto& item : profile.items) items.push_back(to_json(item));
    return prompts.render("plan_candidates",
                          json{{"task_text", task.text},
                               {"stage_scope", to_string(task.stage_scope)},
                               {"profile_narrative", profile.narrative},
                               {"profile_items", items.dump(2)},
                               {"knowledge", hits_text(knowledge_hits)},
                               {"tools", tools}});
}

// n independent calls; a candidate that fails to parse gets one re-ask with
// the parse error appended, then is dropped.
inline std::vector<CandidatePlan> generate_candidate_plans(
    const TaskInstruction& task, const DataProfile& profile,
    const std::vector<SearchResult>& knowledge_hits, const std::vector<SearchResult>& tool_hits,
    int n, LlmGateway& gateway, const CatalogIndex* catalog = nullptr,
    double temperature = 0.7) {
    if (n < 1) throw ParameterError("candidate count must be positive");
    const std::string base_prompt =
        plans_prompt(task, profile, knowledge_hits, tool_hits, catalog, gateway.prompts());

    std::vector<CandidatePlan> plans;
    for (int round = 1; round <= n; ++round) {
        auto try_parse = [&](const std::string& text) -> std::optional<CandidatePlan> {
            try {
                CandidatePlan p = plan_from_json(json::parse(strip_code_fences(text)));
                if (p.plan_id.empty()) p.plan_id = "plan_" + std::to_string(round);
                p.source_round = round;
                return p;
            } catch (const json::exception&) {
                return std::nullopt;
            } catch (const ParseError&) {
                return std::nullopt;
            }
        };

        ChatResponse resp =
            gateway.complete(make_request(AgentRole::planner, base_prompt, temperature));
        auto plan = try_parse(resp.text);
        if (!plan) {
            std::string parse_err = json::accept(strip_code_fences(resp.text))
                                        ? "plan document violated the schema"
                                        : "response is not valid JSON";
            std::string retry_prompt = base_prompt +
                                       "\nThe previous response could not be parsed (" +
                                       parse_err + "). Respond with valid JSON only.";
            ChatResponse retry =
                gateway.complete(make_request(AgentRole::planner, retry_prompt, temperature));
            plan = try_parse(retry.text);
        }
        if (plan) {
            if (gateway.ledger())
                gateway.ledger()->append(gateway.stage(), EventKind::plan_candidate,
                                         json{{"round", round}, {"plan", to_json(*plan)}});
            plans.push_back(std::move(*plan));
        }
    }
    if (plans.empty()) throw PlanningFailed("no candidate plan could be parsed");
    return plans;
}

// ---------------------------------------------------------------------------
// Plan aggregation

namespace detail {

inline std::string canonical_description(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

inline double step_similarity(const PlanStep& a, const PlanStep& b) {
    return cosine(embed_text(canonical_description(a.description)),
                  embed_text(canonical_description(b.description)));
}

// Mean over greedily matched step pairs (highest similarity first).
inline double plan_similarity(const CandidatePlan& a, const CandidatePlan& b) {
    struct Pair {
        double sim;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < a.steps.size(); ++i)
        for (std::size_t j = 0; j < b.steps.size(); ++j)
            pairs.push_back({step_similarity(a.steps[i], b.steps[j]), i, j});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
        if (x.sim != y.sim) return x.sim > y.sim;
        if (x.i != y.i) return x.i < y.i;
        return x.j < y.j;
    });
    std::vector<bool> used_i(a.steps.size(), false), used_j(b.steps.size(), false);
    double sum = 0.0;
    std::size_t matched = 0;
    const std::size_t want = std::min(a.steps.size(), b.steps.size());
    for (const auto& p : pairs) {
        if (matched == want) break;
        if (used_i[p.i] || used_j[p.j]) continue;
        used_i[p.i] = used_j[p.j] = true;
        sum += p.sim;
        ++matched;
    }
    return matched == 0 ? 0.0 : sum / static_cast<double>(matched);
}

// Resolvable = named by a profile item (path or filename) or an
// external_command catalog entry id.
inline bool input_resolvable(const std::string& name, const DataProfile& profile,
                             const CatalogIndex* catalog) {
    if (profile.find(name) != nullptr) return true;
    if (catalog) {
        const CatalogEntry* e = catalog->find(name);
        if (e && e->tier == Tier::external_command) return true;
    }
    return false;
}

}  // namespace detail

inline PlanScore score_plan(const CandidatePlan& plan, const DataProfile& profile,
                            const CatalogIndex* catalog, const PlannerParams& params = {}) {
    PlanScore score;
    // availability: fraction of required_inputs resolvable from the profile or
    // external command entries
    int total_inputs = 0, resolvable = 0;
    for (const auto& s : plan.steps)
        for (const auto& input : s.required_inputs) {
            ++total_inputs;
            if (detail::input_resolvable(input, profile, catalog)) ++resolvable;
        }
    score.availability =
        total_inputs == 0 ? 1.0 : static_cast<double>(resolvable) / total_inputs;

    // rigor: fraction of steps whose inputs are produced earlier or are initial data
    std::set<std::string> produced;
    int rigorous = 0;
    for (const auto& s : plan.steps) {
        bool ok = true;
        for (const auto& input : s.required_inputs) {
            if (produced.count(input)) continue;
            if (profile.find(input) != nullptr) continue;
            ok = false;
            break;
        }
        if (ok) ++rigorous;
        for (const auto& o : s.produced_outputs) produced.insert(o);
    }
    score.rigor = plan.steps.empty()
                      ? 0.0
                      : static_cast<double>(rigorous) / static_cast<double>(plan.steps.size());
    score.total = params.availability_weight * score.availability +
                  params.rigor_weight * score.rigor;
    return score;
}

// Merge semantically similar candidates (union of steps, deduplicated at the
// same threshold, ordered by earliest source position), score every merged
// plan, pick the best. Candidates are processed in plan_id order so the result
// is invariant under input permutation.
inline AggregatedPlan aggregate_plans(std::vector<CandidatePlan> candidates,
                                      const DataProfile& profile,
                                      const CatalogIndex* catalog = nullptr,
                                      const PlannerParams& params = {}) {
    if (candidates.empty()) throw ParameterError("aggregate_plans needs at least one candidate");
    std::sort(candidates.begin(), candidates.end(),
              [](const CandidatePlan& a, const CandidatePlan& b) { return a.plan_id < b.plan_id; });

    const std::size_t n = candidates.size();
    // connected components over the >= threshold similarity graph
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (detail::plan_similarity(candidates[i], candidates[j]) >= params.merge_threshold)
                parent[find(i)] = find(j);

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);

    struct Merged {
        CandidatePlan plan;
        std::vector<std::string> from;
    };
    std::vector<Merged> merged_plans;
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        struct Placed {
            PlanStep step;
            std::size_t pos;
        };
        std::vector<Placed> placed;
        std::vector<std::string> from;
        std::set<std::string> used_ids;
        for (std::size_t m : members) {
            const CandidatePlan& plan = candidates[m];
            from.push_back(plan.plan_id);
            for (std::size_t i = 0; i < plan.steps.size(); ++i) {
                const PlanStep& step = plan.steps[i];
                bool duplicate = false;
                for (auto& p : placed) {
                    if (detail::step_similarity(p.step, step) >= params.merge_threshold) {
                        p.pos = std::min(p.pos, i);  // earliest position wins
                        duplicate = true;
                        break;
                    }
                }
                if (duplicate) continue;
                PlanStep copy = step;
                if (!used_ids.insert(copy.step_id).second) {
                    copy.step_id += "_" + plan.plan_id;
                    used_ids.insert(copy.step_id);
                }
                placed.push_back({std::move(copy), i});
            }
        }
        std::stable_sort(placed.begin(), placed.end(),
                         [](const Placed& a, const Placed& b) { return a.pos < b.pos; });
        Merged m;
        m.plan.plan_id = from.front();
        m.plan.source_round = candidates[members.front()].source_round;
        for (auto& p : placed) m.plan.steps.push_back(std::move(p.step));
        m.from = std::move(from);
        merged_plans.push_back(std::move(m));
    }

    // rank: total desc, then fewer steps, then lexicographic plan_id
    AggregatedPlan best;
    bool have_best = false;
    for (auto& m : merged_plans) {
        PlanScore score = score_plan(m.plan, profile, catalog, params);
        bool better = false;
        if (!have_best) {
            better = true;
        } else if (score.total != best.score.total) {
            better = score.total > best.score.total;
        } else if (m.plan.steps.size() != best.plan.steps.size()) {
            better = m.plan.steps.size() < best.plan.steps.size();
        } else {
            better = m.plan.plan_id < best.plan.plan_id;
        }
        if (better) {
            best.plan = std::move(m.plan);
            best.score = score;
            best.merged_from = std::move(m.from);
            have_best = true;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Workflow DAG

struct NodeBinding {
    std::string name;
    std::string kind;  // semantic kind: ndvi, multispectral, keyvalue, ...
    std::string path;  // outputs: relative to the node dir; inputs: filled on resolve
};

struct WorkflowNode {
    std::string node_id;
    std::string purpose;
    std::vector<NodeBinding> inputs;
    std::vector<NodeBinding> outputs;
    json params = json::object();
    Stage stage = Stage::data_preparation;
};

struct WorkflowDAG {
    std::vector<WorkflowNode> nodes;
    std::vector<std::pair<std::string, std::string>> edges;  // (from, to)

    const WorkflowNode* find(const std::string& id) const {
        for (const auto& n : nodes)
            if (n.node_id == id) return &n;
        return nullptr;
    }
};

inline json to_json(const WorkflowNode& n) {
    auto bindings = [](const std::vector<NodeBinding>& bs) {
        json out = json::array();
        for (const auto& b : bs)
            out.push_back(json{{"name", b.name}, {"kind", b.kind}, {"path", b.path}});
        return out;
    };
    return json{{"node_id", n.node_id}, {"purpose", n.purpose},
                {"stage", to_string(n.stage)}, {"inputs", bindings(n.inputs)},
                {"outputs", bindings(n.outputs)}, {"params", n.params}};
}

inline json to_json(const WorkflowDAG& dag) {
    json nodes = json::array();
    for (const auto& n : dag.nodes) nodes.push_back(to_json(n));
    json edges = json::array();
    for (const auto& [a, b] : dag.edges) edges.push_back(json::array({a, b}));
    return json{{"nodes", nodes}, {"edges", edges}};
}

inline WorkflowNode workflow_node_from_json(const json& j) {
    WorkflowNode n;
    n.node_id = j.at("node_id").get<std::string>();
    n.purpose = j.value("purpose", "");
    n.stage = stage_from_string(j.value("stage", "data_preparation"));
    auto bindings = [](const json& arr, bool output) {
        std::vector<NodeBinding> out;
        if (!arr.is_array()) return out;
        for (const auto& bj : arr) {
            NodeBinding b;
            b.name = bj.at("name").get<std::string>();
            b.kind = bj.value("kind", "unknown");
            b.path = bj.value("path", output ? bj.at("name").get<std::string>() : "");
            out.push_back(std::move(b));
        }
        return out;
    };
    if (j.contains("inputs")) n.inputs = bindings(j.at("inputs"), false);
    if (j.contains("outputs")) n.outputs = bindings(j.at("outputs"), true);
    n.params = j.value("params", json::object());
    return n;
}

inline WorkflowDAG dag_from_json(const json& j) {
    WorkflowDAG dag;
    if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array())
        throw ParseError("workflow document has no nodes list");
    for (const auto& nj : j.at("nodes")) dag.nodes.push_back(workflow_node_from_json(nj));
    return dag;
}

struct DagValidation {
    bool ok = true;
    std::vector<std::string> violations;
    std::vector<std::string> order;  // deterministic topological order when ok
};

namespace detail {

inline bool path_escapes(const std::string& p) {
    if (p.empty()) return true;
    fs::path path(p);
    if (path.is_absolute()) return true;
    for (const auto& part : path)
        if (part == "..") return true;
    return false;
}

}  // namespace detail

// Checks: unique ids, unique producer per output name, derived edges acyclic
// (Kahn, ties by node_id), every input bound to an initial datum or an
// ancestor output, output paths contained. Violations are data, not errors.
inline DagValidation validate_dag(const WorkflowDAG& dag, const DataProfile& profile) {
    DagValidation result;
    std::set<std::string> ids;
    for (const auto& n : dag.nodes) {
        if (!ids.insert(n.node_id).second) {
            result.violations.push_back("duplicate node id: " + n.node_id);
        }
        std::set<std::string> in_names, out_names;
        for (const auto& b : n.inputs)
            if (!in_names.insert(b.name).second)
                result.violations.push_back("node " + n.node_id + " repeats input " + b.name);
        for (const auto& b : n.outputs) {
            if (!out_names.insert(b.name).second)
                result.violations.push_back("node " + n.node_id + " repeats output " + b.name);
            if (detail::path_escapes(b.path))
                result.violations.push_back("node " + n.node_id + " output path escapes: " +
                                            b.path);
        }
    }

    std::map<std::string, std::string> producer;  // output name -> node id
    for (const auto& n : dag.nodes)
        for (const auto& b : n.outputs) {
            auto it = producer.find(b.name);
            if (it != producer.end() && it->second != n.node_id)
                result.violations.push_back("output " + b.name + " produced by both " +
                                            it->second + " and " + n.node_id);
            else
                producer[b.name] = n.node_id;
        }

    // derive edges by name matching
    std::set<std::pair<std::string, std::string>> edge_set(dag.edges.begin(), dag.edges.end());
    for (const auto& n : dag.nodes)
        for (const auto& b : n.inputs) {
            auto it = producer.find(b.name);
            if (it != producer.end() && it->second != n.node_id)
                edge_set.insert({it->second, n.node_id});
        }

    // Kahn with lexicographic tie-break
    std::map<std::string, int> indegree;
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& n : dag.nodes) indegree[n.node_id];
    for (const auto& [a, b] : edge_set) {
        if (!indegree.count(a) || !indegree.count(b)) continue;
        adj[a].push_back(b);
        indegree[b] += 1;
    }
    std::set<std::string> ready;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) ready.insert(id);
    std::vector<std::string> order;
    while (!ready.empty()) {
        std::string id = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(id);
        for (const auto& next : adj[id])
            if (--indegree[next] == 0) ready.insert(next);
    }
    if (order.size() != dag.nodes.size()) {
        std::vector<std::string> cyclic;
        for (const auto& [id, deg] : indegree)
            if (deg > 0) cyclic.push_back(id);
        std::sort(cyclic.begin(), cyclic.end());
        std::string msg = "cycle: ";
        for (std::size_t i = 0; i < cyclic.size(); ++i) {
            if (i) msg += "↔";
            msg += cyclic[i];
        }
        result.violations.push_back(msg);
    } else {
        // interface closure: inputs come from initial data or ancestors
        std::map<std::string, std::set<std::string>> ancestors;
        for (const auto& id : order) {
            for (const auto& [a, b] : edge_set) {
                if (b != id) continue;
                ancestors[id].insert(a);
                ancestors[id].insert(ancestors[a].begin(), ancestors[a].end());
            }
        }
        for (const auto& n : dag.nodes) {
            for (const auto& b : n.inputs) {
                if (profile.find(b.name) != nullptr) continue;
                auto it = producer.find(b.name);
                if (it == producer.end()) {
                    result.violations.push_back("unbound input " + b.name + " on node " +
                                                n.node_id);
                } else if (it->second == n.node_id) {
                    result.violations.push_back("node " + n.node_id +
                                                " consumes its own output " + b.name);
                } else if (!ancestors[n.node_id].count(it->second)) {
                    result.violations.push_back("input " + b.name + " on node " + n.node_id +
                                                " does not come from an ancestor");
                }
            }
        }
        result.order = std::move(order);
    }

    result.ok = result.violations.empty();
    if (!result.ok) result.order.clear();
    return result;
}

// Fills the derived edge list and per-input path bindings (producer output
// path or initial datum path).
inline void bind_dag(WorkflowDAG& dag, const DataProfile& profile) {
    std::map<std::string, std::pair<std::string, std::string>> producer;  // name -> (node, path)
    for (const auto& n : dag.nodes)
        for (const auto& b : n.outputs) producer[b.name] = {n.node_id, b.path};
    dag.edges.clear();
    std::set<std::pair<std::string, std::string>> seen;
    for (auto& n : dag.nodes) {
        for (auto& b : n.inputs) {
            auto it = producer.find(b.name);
            if (it != producer.end() && it->second.first != n.node_id) {
                if (seen.insert({it->second.first, n.node_id}).second)
                    dag.edges.push_back({it->second.first, n.node_id});
                b.path = "nodes/" + it->second.first + "/" + it->second.second;
            } else if (const DataItem* item = profile.find(b.name)) {
                b.path = item->path;
            }
        }
    }
}

struct CompileFailed : GeoflowError {
    CompileFailed(std::string msg, DagValidation v)
        : GeoflowError(std::move(msg)), validation(std::move(v)) {}
    DagValidation validation;
};

// One workflow-role call transforms the plan into nodes; edges are derived by
// name matching. An invalid document earns one repair re-ask carrying the
// violation list.
inline WorkflowDAG compile_workflow(const AggregatedPlan& aggregated, const DataProfile& profile,
                                    LlmGateway& gateway) {
    json items = json::array();
    for (const auto& item : profile.items) items.push_back(to_json(item));
    auto make_prompt = [&](const std::string& repair_section) {
        return gateway.prompts().render("workflow_compile",
                                        json{{"plan_json", to_json(aggregated.plan).dump(2)},
                                             {"profile_items", items.dump(2)},
                                             {"repair_section", repair_section}});
    };

    DagValidation last_validation;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        std::string repair_section;
        if (attempt == 2) {
            repair_section = "\nYour previous workflow document was invalid:\n";
            for (const auto& v : last_validation.violations) repair_section += "- " + v + "\n";
            repair_section += "Produce a corrected document.";
        }
        ChatResponse resp =
            gateway.complete(make_request(AgentRole::workflow, make_prompt(repair_section)));
        WorkflowDAG dag;
        try {
            dag = dag_from_json(json::parse(strip_code_fences(resp.text)));
        } catch (const std::exception& e) {
            last_validation = DagValidation{};
            last_validation.ok = false;
            last_validation.violations = {std::string("unparseable workflow document: ") +
                                          e.what()};
            continue;
        }
        bind_dag(dag, profile);
        last_validation = validate_dag(dag, profile);
        if (last_validation.ok) return dag;
    }
    std::string msg = "workflow compilation failed:";
    for (const auto& v : last_validation.violations) msg += " " + v + ";";
    throw CompileFailed(msg, last_validation);
}

// Ablation substitute: the whole task as a single node.
inline WorkflowDAG single_node_dag(const TaskInstruction& task, const DataProfile& profile) {
    WorkflowDAG dag;
    WorkflowNode n;
    n.node_id = "task";
    n.purpose = task.text;
    n.stage = task.stage_scope == StageScope::full_pipeline
                  ? Stage::geospatial_analysis
                  : first_stage(task.stage_scope);
    for (const auto& item : profile.items) {
        NodeBinding b;
        b.name = item.filename();
        b.kind = item.modality;
        b.path = item.path;
        n.inputs.push_back(std::move(b));
    }
    NodeBinding out;
    out.name = "results";
    out.kind = "keyvalue";
    out.path = "results.json";
    n.outputs.push_back(std::move(out));
    dag.nodes.push_back(std::move(n));
    bind_dag(dag, profile);
    return dag;
}

}  // namespace geoflow
