#pragma once

// Logic-oriented Monte Carlo tree search over fact sequences.
//
// Tree nodes hold facts; edges are coherence relations. Each iteration picks
// the expandable node of largest weight, proposes children through the
// expansion rules, runs a best-first simulation below every child and
// attaches the child whose simulation reached the best reward. Node weights
// are the best completed-path reward known below them.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "factweaver/fact.hpp"
#include "factweaver/generator.hpp"
#include "factweaver/logic.hpp"
#include "factweaver/scoring.hpp"
#include "factweaver/story.hpp"
#include "factweaver/table.hpp"
#include "factweaver/util.hpp"

namespace factweaver {

struct Goal {
    std::size_t max_length = 6;
    std::optional<double> min_information_bits;
    std::optional<double> time_budget_seconds;
    std::optional<std::size_t> iteration_budget;

    void check() const {
        if (max_length < 1) throw SpecError("max_length must be at least 1");
        if (time_budget_seconds.has_value() == iteration_budget.has_value())
            throw SpecError("exactly one of time budget and iteration budget is required");
        if (time_budget_seconds && !(*time_budget_seconds > 0)) throw SpecError("time budget must be positive");
        if (iteration_budget && *iteration_budget == 0) throw SpecError("iteration budget must be positive");
        if (min_information_bits && !(*min_information_bits >= 0))
            throw SpecError("min_information_bits must be non-negative");
    }
};

struct SearchConfig {
    std::size_t fanout = 20;
    /// Simulation expansions per candidate in iteration-budget mode.
    std::size_t simulation_budget = 8;
    std::size_t initial_batch = 50;
    ScoringConfig scoring;
    RelationTable priors = RelationTable::builtin();
    IntegrityMode integrity = IntegrityMode::rows;
    /// Checked between simulation steps; set it to abort the search.
    const std::atomic<bool>* cancel = nullptr;
};

struct SearchStats {
    std::size_t iterations = 0;
    std::size_t simulation_steps = 0;
    std::size_t late_simulation_steps = 0;  // started after the deadline; should stay 0
    std::size_t tree_nodes = 0;
    double elapsed_seconds = 0.0;
    std::string stop_reason;
};

inline json to_json(const SearchStats& s) {
    return {{"iterations", s.iterations},
            {"simulation_steps", s.simulation_steps},
            {"late_simulation_steps", s.late_simulation_steps},
            {"tree_nodes", s.tree_nodes},
            {"elapsed_seconds", s.elapsed_seconds},
            {"stop_reason", s.stop_reason}};
}

/// A proposed next fact and the relation that produced it.
struct Candidate {
    DataFact fact;
    Relation relation;
};

/// Seeded random batch of value/trend/categorization facts; returns the one
/// with the highest importance (first drawn on ties).
inline DataFact initial_fact(const DataTable& table, std::uint64_t seed, std::size_t batch = 50,
                             const ScoringConfig& scoring = {}) {
    if (table.row_count() == 0) throw EmptyTable();
    std::vector<FactType> types;
    for (FactType t : {FactType::value, FactType::trend, FactType::categorization})
        if (type_constructible(t, table)) types.push_back(t);
    if (types.empty()) throw GenerationError("no value, trend or categorization fact fits this table");
    Rng rng(mix_seed(seed, 0x1f));
    std::optional<DataFact> best;
    double best_importance = -1;
    std::size_t made = 0;
    for (std::size_t attempt = 0; attempt < batch * 4 && made < batch; ++attempt) {
        auto f = random_fact(table, types[uniform_index(rng, types.size())], rng);
        if (!f) continue;
        ++made;
        const double imp = importance(*f, table, scoring).importance;
        if (imp > best_importance) {
            best_importance = imp;
            best = std::move(f);
        }
    }
    if (!best) throw GenerationError("no usable starting fact could be constructed");
    return *best;
}

/// Children proposed for the last fact of `path`: the fan-out budget is split
/// across relations by likelihood, facts already on the path are dropped and
/// the list is capped at `fanout`. Depends only on (path, seed).
inline std::vector<Candidate> expansion_candidates(const std::vector<DataFact>& path, const DataTable& table,
                                                   std::size_t fanout, std::uint64_t seed,
                                                   const RelationTable& priors = RelationTable::builtin()) {
    std::vector<Candidate> out;
    if (path.empty() || fanout == 0) return out;
    std::string path_key;
    std::set<std::string> seen;
    for (const auto& f : path) {
        path_key += fact_key(f) + "\n";
        seen.insert(fact_key(f));
    }
    const DataFact& last = path.back();
    const std::uint64_t node_seed = mix_seed(seed, fnv1a(path_key));
    const auto alloc = allocate_fanout(last.type, fanout, priors);
    std::vector<Relation> order(kRelations.begin(), kRelations.end());
    std::stable_sort(order.begin(), order.end(), [&](Relation a, Relation b) {
        return priors.likelihood(last.type, a) > priors.likelihood(last.type, b);
    });
    for (Relation r : order) {
        if (alloc[index_of(r)] == 0) continue;
        Rng rng(mix_seed(node_seed, index_of(r) + 1));
        for (auto& c : expand(last, r, table, rng, alloc[index_of(r)]))
            if (seen.insert(fact_key(c)).second) out.push_back({std::move(c), r});
    }
    if (out.size() > fanout) out.resize(fanout);
    return out;
}

class StorySearch {
public:
    StorySearch(const DataTable& table, Goal goal, RewardWeights weights, SearchConfig config, std::uint64_t seed)
        : table_(table), goal_(std::move(goal)), config_(std::move(config)), seed_(seed) {
        goal_.check();
        evaluator_.weights = normalized(weights);
        evaluator_.scoring = config_.scoring;
        evaluator_.priors = config_.priors;
        evaluator_.integrity_mode = config_.integrity;
    }

    Story run() {
        start_ = Clock::now();
        if (goal_.time_budget_seconds)
            deadline_ = start_ + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(*goal_.time_budget_seconds));
        nodes_.clear();
        Node root;
        root.fact = initial_fact(table_, seed_, config_.initial_batch, config_.scoring);
        root.depth = 1;
        nodes_.push_back(std::move(root));
        nodes_[0].path_reward = path_reward(path_of(0));
        nodes_[0].completed = is_completed(path_of(0));
        nodes_[0].weight = nodes_[0].path_reward;

        while (true) {
            const auto best = best_node();
            if (nodes_[best].completed) {
                stats_.stop_reason = "goal reached";
                break;
            }
            if (cancelled()) {
                stats_.stop_reason = "cancelled";
                break;
            }
            if (goal_.iteration_budget && stats_.iterations >= *goal_.iteration_budget) {
                stats_.stop_reason = "iteration budget exhausted";
                break;
            }
            if (past_deadline()) {
                stats_.stop_reason = "time budget exhausted";
                break;
            }
            const auto sel = select();
            if (!sel) {
                stats_.stop_reason = "search space exhausted";
                break;
            }
            ++stats_.iterations;
            step(*sel);
        }

        Story story = extract(best_node());
        if (nodes_[0].children.empty() && nodes_[0].expanded && goal_.max_length > 1)
            story.warnings.push_back("no legal expansion from the initial fact");
        stats_.tree_nodes = nodes_.size();
        stats_.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
        return story;
    }

    const SearchStats& stats() const { return stats_; }

    /// Nodes, relations and weights of the final tree.
    json export_tree() const {
        json out = json::array();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto& n = nodes_[i];
            json j = {{"id", i},
                      {"fact", to_fact_record(n.fact)},
                      {"weight", n.weight},
                      {"completed_weight", n.has_completed},
                      {"path_reward", n.path_reward},
                      {"children", n.children}};
            j["parent"] = n.parent ? json(*n.parent) : json(nullptr);
            j["relation"] = n.relation ? json(std::string(to_string(*n.relation))) : json(nullptr);
            out.push_back(std::move(j));
        }
        return out;
    }

private:
    using Clock = std::chrono::steady_clock;

    struct Scored {
        bool completed = false;
        double reward = -std::numeric_limits<double>::infinity();

        bool better_than(const Scored& o) const {
            if (completed != o.completed) return completed;
            return reward > o.reward;
        }
    };

    struct Pending {
        Candidate candidate;
        Scored best;
    };

    struct Node {
        DataFact fact;
        std::optional<Relation> relation;
        std::optional<std::size_t> parent;
        std::vector<std::size_t> children;
        std::size_t depth = 1;
        double path_reward = 0.0;
        bool completed = false;  // the root path to this node meets the goal
        double weight = 0.0;
        bool has_completed = false;  // weight comes from a completed path
        bool expanded = false;
        std::vector<Pending> pending;
    };

    struct Path {
        std::vector<DataFact> facts;
        std::vector<Relation> relations;
    };

    bool cancelled() const { return config_.cancel && config_.cancel->load(); }
    bool past_deadline() const { return deadline_ && Clock::now() >= *deadline_; }

    const FactScore& score(const DataFact& f) {
        const auto key = fact_key(f);
        auto it = scores_.find(key);
        if (it == scores_.end()) it = scores_.emplace(key, importance(f, table_, config_.scoring)).first;
        return it->second;
    }

    std::pair<double, double> evaluate(const Path& p) {
        std::vector<FactScore> s;
        s.reserve(p.facts.size());
        for (const auto& f : p.facts) s.push_back(score(f));
        const auto c = evaluator_.criteria(p.facts, p.relations, s, table_);
        return {reward(c, evaluator_.weights), c.entropy};
    }

    double path_reward(const Path& p) { return evaluate(p).first; }

    bool is_completed(const Path& p) {
        if (p.facts.size() >= goal_.max_length) return true;
        return goal_.min_information_bits && evaluate(p).second >= *goal_.min_information_bits;
    }

    const std::vector<Candidate>& candidates(const std::vector<DataFact>& facts) {
        std::string key;
        for (const auto& f : facts) key += fact_key(f) + "\n";
        auto it = candidate_cache_.find(key);
        if (it == candidate_cache_.end())
            it = candidate_cache_
                     .emplace(key, expansion_candidates(facts, table_, config_.fanout, seed_, config_.priors))
                     .first;
        return it->second;
    }

    Path path_of(std::size_t id) const {
        Path p;
        for (std::optional<std::size_t> i = id; i; i = nodes_[*i].parent) {
            p.facts.push_back(nodes_[*i].fact);
            if (nodes_[*i].relation) p.relations.push_back(*nodes_[*i].relation);
        }
        std::reverse(p.facts.begin(), p.facts.end());
        std::reverse(p.relations.begin(), p.relations.end());
        return p;
    }

    bool expandable(const Node& n) const {
        if (n.completed || n.depth >= goal_.max_length) return false;
        return !n.expanded || !n.pending.empty();
    }

    /// Max weight (completed weights first); ties go to unexpanded nodes,
    /// then deeper nodes, then insertion order.
    std::optional<std::size_t> select() const {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            if (!expandable(n)) continue;
            if (!best) {
                best = i;
                continue;
            }
            const Node& b = nodes_[*best];
            if (n.has_completed != b.has_completed) {
                if (n.has_completed) best = i;
                continue;
            }
            if (n.weight != b.weight) {
                if (n.weight > b.weight) best = i;
                continue;
            }
            if (n.expanded != b.expanded) {
                if (!n.expanded) best = i;
                continue;
            }
            if (n.depth > b.depth) best = i;
        }
        return best;
    }

    /// Best root path in the tree: completed paths first, then deeper
    /// paths, then higher reward, then insertion order.
    std::size_t best_node() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            const Node& b = nodes_[best];
            if (n.completed != b.completed) {
                if (n.completed) best = i;
                continue;
            }
            if (!n.completed && n.depth != b.depth) {
                if (n.depth > b.depth) best = i;
                continue;
            }
            if (n.path_reward > b.path_reward) best = i;
        }
        return best;
    }

    bool simulation_budget_left(std::size_t steps, std::optional<Clock::time_point> until) const {
        if (cancelled()) return false;
        if (until) return Clock::now() < *until;
        return steps < config_.simulation_budget;
    }

    /// Best-first search below `start`, ordered by path reward. Returns the
    /// best completed reward found, or the best partial reward if none.
    Scored simulate(const Path& start, std::optional<Clock::time_point> until) {
        struct Entry {
            double reward;
            std::size_t order;
            Path path;
        };
        auto cmp = [](const Entry& a, const Entry& b) {
            if (a.reward != b.reward) return a.reward < b.reward;
            return a.order > b.order;
        };
        std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> frontier(cmp);
        Scored best;
        std::size_t order = 0;
        auto offer = [&](Path p) {
            const double r = path_reward(p);
            const Scored s{is_completed(p), r};
            if (s.better_than(best)) best = s;
            if (!s.completed) frontier.push({r, order++, std::move(p)});
        };
        offer(start);
        std::size_t steps = 0;
        while (!frontier.empty() && simulation_budget_left(steps, until)) {
            if (deadline_ && Clock::now() >= *deadline_) ++stats_.late_simulation_steps;
            Entry e = frontier.top();
            frontier.pop();
            ++steps;
            ++stats_.simulation_steps;
            for (const auto& c : candidates(e.path.facts)) {
                Path next = e.path;
                next.facts.push_back(c.fact);
                next.relations.push_back(c.relation);
                offer(std::move(next));
            }
        }
        return best;
    }

    void step(std::size_t id) {
        if (!nodes_[id].expanded) {
            const Path base = path_of(id);
            const auto cands = candidates(base.facts);
            nodes_[id].expanded = true;
            std::optional<Clock::time_point> slice_end;
            for (std::size_t i = 0; i < cands.size(); ++i) {
                if (deadline_) {
                    // Share what is left between the remaining depth levels and candidates.
                    const auto left = *deadline_ - Clock::now();
                    const auto levels = static_cast<long>(goal_.max_length - nodes_[id].depth);
                    const auto share = left / std::max(1L, levels) / static_cast<long>(cands.size() - i);
                    slice_end = std::min(*deadline_, Clock::now() + share);
                }
                Path p = base;
                p.facts.push_back(cands[i].fact);
                p.relations.push_back(cands[i].relation);
                nodes_[id].pending.push_back({cands[i], simulate(p, slice_end)});
            }
        }
        auto& pending = nodes_[id].pending;
        if (pending.empty()) return;
        std::size_t pick = 0;
        for (std::size_t i = 1; i < pending.size(); ++i)
            if (pending[i].best.better_than(pending[pick].best)) pick = i;
        Pending chosen = std::move(pending[pick]);
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));
        attach(id, std::move(chosen));
    }

    void attach(std::size_t parent, Pending p) {
        Node child;
        child.fact = std::move(p.candidate.fact);
        child.relation = p.candidate.relation;
        child.parent = parent;
        child.depth = nodes_[parent].depth + 1;
        nodes_[parent].children.push_back(nodes_.size());
        nodes_.push_back(std::move(child));
        const std::size_t id = nodes_.size() - 1;
        const Path path = path_of(id);
        nodes_[id].path_reward = path_reward(path);
        nodes_[id].completed = is_completed(path);
        Scored w = p.best;
        if (nodes_[id].completed) w = {true, nodes_[id].path_reward};
        nodes_[id].weight = w.reward;
        nodes_[id].has_completed = w.completed;
        for (std::optional<std::size_t> a = nodes_[id].parent; a; a = nodes_[*a].parent) {
            Node& n = nodes_[*a];
            const Scored cur{n.has_completed, n.weight};
            if (!w.better_than(cur)) break;
            n.weight = w.reward;
            n.has_completed = w.completed;
        }
    }

    Story extract(std::size_t id) {
        const Path p = path_of(id);
        Story s;
        s.facts = p.facts;
        s.relations = p.relations;
        for (const auto& f : s.facts) s.scores.push_back(score(f));
        s.criteria = evaluator_.criteria(s.facts, s.relations, s.scores, table_);
        s.reward = reward(s.criteria, evaluator_.weights);
        s.goal_unmet = !nodes_[id].completed;
        return s;
    }

    const DataTable& table_;
    Goal goal_;
    SearchConfig config_;
    std::uint64_t seed_;
    StoryEvaluator evaluator_;
    std::vector<Node> nodes_;
    std::unordered_map<std::string, FactScore> scores_;
    std::unordered_map<std::string, std::vector<Candidate>> candidate_cache_;
    SearchStats stats_;
    Clock::time_point start_;
    std::optional<Clock::time_point> deadline_;
};

inline Story generate_story(const DataTable& table, const Goal& goal, const RewardWeights& weights,
                            const SearchConfig& config, std::uint64_t seed) {
    StorySearch search(table, goal, weights, config, seed);
    return search.run();
}

}  // namespace factweaver
