#include "abac/miner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "abac/rule_format.hpp"
#include "parallel.hpp"

namespace abac {

std::string_view to_string(QualitySideMode mode) {
    return mode == QualitySideMode::SideNormalized ? "side-normalized" : "summed";
}

QualitySideMode quality_side_mode_from_string(std::string_view s) {
    if (s == "side-normalized" || s == "SideNormalized") return QualitySideMode::SideNormalized;
    if (s == "summed" || s == "Summed") return QualitySideMode::Summed;
    throw ContractViolation("unknown quality mode '" + std::string(s) + "'");
}

void MinerConfig::validate() const {
    if (min_rule_coverage < 1) throw ContractViolation("min_rule_coverage must be >= 1");
    if (max_generalization_passes < 1) throw ContractViolation("max_generalization_passes must be >= 1");
    if (!(deny_tolerance >= 0.0 && deny_tolerance <= 1.0))
        throw ContractViolation("deny_tolerance must lie in [0, 1]");
    if (threads < 1) throw ContractViolation("threads must be >= 1");
    if (!(evidence_alpha >= 0.0 && evidence_alpha < 1.0))
        throw ContractViolation("evidence_alpha must lie in [0, 1)");
}

const RankedAttribute* AttributeRanking::find(Side side, const std::string& name) const {
    for (const auto& a : attributes)
        if (a.side == side && a.name == name) return &a;
    return nullptr;
}

// ── Pattern index ───────────────────────────────────────────────────────────

namespace {

ValueTuple tuple_of(const Entity& e, const std::vector<AttributeDef>& defs) {
    ValueTuple t;
    t.reserve(defs.size());
    for (const auto& d : defs) t.push_back(e.attribute(d.name));
    return t;
}

}  // namespace

PatternIndex build_pattern_index(std::span<const LogEntry> logs, const EntityMap& users,
                                 const EntityMap& resources, const AttributeSchema& schema) {
    PatternIndex index;
    for (const auto& e : logs) {
        if (e.decision != Decision::Allow) continue;
        auto u = users.find(e.user_id);
        auto r = resources.find(e.resource_id);
        if (u == users.end() || r == resources.end()) continue;
        auto ut = tuple_of(u->second, schema.user_attributes);
        auto rt = tuple_of(r->second, schema.resource_attributes);
        ++index.user_side_patterns[ut];
        ++index.resource_side_patterns[rt];
        ++index.user_resource_patterns[{std::move(ut), std::move(rt), e.operation}];
    }
    return index;
}

// ── Ranking ─────────────────────────────────────────────────────────────────

namespace {

double entropy(double allow, double deny) {
    const double n = allow + deny;
    double h = 0.0;
    for (double k : {allow, deny})
        if (k > 0) h -= (k / n) * std::log2(k / n);
    return h;
}

}  // namespace

AttributeRanking rank_attributes(std::span<const LogEntry> logs, const EntityMap& users,
                                 const EntityMap& resources, const AttributeSchema& schema) {
    struct Counts {
        std::size_t allow = 0, deny = 0;
    };
    std::vector<std::pair<const Entity*, const Entity*>> joined;
    std::vector<const LogEntry*> entries;
    Counts total;
    for (const auto& e : logs) {
        auto u = users.find(e.user_id);
        auto r = resources.find(e.resource_id);
        if (u == users.end() || r == resources.end()) continue;
        joined.emplace_back(&u->second, &r->second);
        entries.push_back(&e);
        (e.decision == Decision::Allow ? total.allow : total.deny)++;
    }
    const double n = static_cast<double>(total.allow + total.deny);
    const double h = n > 0 ? entropy(static_cast<double>(total.allow), static_cast<double>(total.deny)) : 0.0;

    struct Row {
        RankedAttribute attr;
        std::size_t domain_size;
    };
    std::vector<Row> rows;
    for (Side side : {Side::User, Side::Resource}) {
        for (const auto& def : schema.side(side)) {
            std::map<std::string, Counts> by_value;
            for (std::size_t i = 0; i < joined.size(); ++i) {
                const Entity& ent = side == Side::User ? *joined[i].first : *joined[i].second;
                auto& c = by_value[ent.attribute(def.name)];
                (entries[i]->decision == Decision::Allow ? c.allow : c.deny)++;
            }
            double conditional = 0.0;
            for (const auto& [_, c] : by_value) {
                const double k = static_cast<double>(c.allow + c.deny);
                conditional += (k / n) * entropy(static_cast<double>(c.allow), static_cast<double>(c.deny));
            }
            double gain = n > 0 ? h - conditional : 0.0;
            if (gain < 0 && gain > -1e-12) gain = 0.0;
            rows.push_back({{side, def.name, gain, 0}, def.domain.size()});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.attr.information_gain != b.attr.information_gain)
            return a.attr.information_gain < b.attr.information_gain;
        if (a.domain_size != b.domain_size) return a.domain_size < b.domain_size;
        return std::tie(a.attr.side, a.attr.name) < std::tie(b.attr.side, b.attr.name);
    });
    AttributeRanking ranking;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].attr.rank = i;
        ranking.attributes.push_back(rows[i].attr);
    }
    if (total.deny == 0)
        ranking.warning = "log has no Deny entries: information gain is zero everywhere, "
                          "attributes ordered by domain size";
    return ranking;
}

// ── Rules ───────────────────────────────────────────────────────────────────

AbacRule candidate_from_seed(const LogEntry& seed, const EntityMap& users,
                             const EntityMap& resources) {
    if (seed.decision != Decision::Allow) throw ContractViolation("seed entry must be an Allow entry");
    auto u = users.find(seed.user_id);
    auto r = resources.find(seed.resource_id);
    if (u == users.end() || r == resources.end())
        throw ContractViolation("seed references an unknown entity");
    AbacRule rule;
    for (const auto& [name, value] : u->second.attributes) rule.user_expr[name] = {value};
    for (const auto& [name, value] : r->second.attributes) rule.resource_expr[name] = {value};
    rule.operations = {seed.operation};
    for (const auto& [ua, uv] : u->second.attributes)
        for (const auto& [ra, rv] : r->second.attributes)
            if (uv == rv) rule.constraints.emplace(ua, ra);
    return rule;
}

double complexity_norm(const AbacRule& rule, const MinerConfig& config) {
    const auto& w = config.weights;
    if (config.quality_side_mode == QualitySideMode::Summed) return static_cast<double>(wsc(rule, w));
    return (static_cast<double>(wsc_user_side(rule, w)) + static_cast<double>(wsc_resource_side(rule, w))) / 2.0 +
           static_cast<double>(w.operation * rule.operations.size()) +
           static_cast<double>(w.constraint * rule.constraints.size());
}

double rule_quality(const AbacRule& rule, std::size_t covered_allow, const MinerConfig& config) {
    if (covered_allow == 0) throw ContractViolation("rule quality needs at least one covered Allow entry");
    const double norm = complexity_norm(rule, config);
    if (norm <= 0) throw ContractViolation("rule has zero complexity");
    return static_cast<double>(covered_allow) / norm;
}

// ── Mining engine ───────────────────────────────────────────────────────────
//
// Works on interned values and on distinct (user tuple, resource tuple, op)
// keys weighted by their Allow and Deny entry counts.

namespace {

struct AttrInfo {
    Side side;
    std::string name;
    std::vector<std::string> values;  // sorted schema domain
    std::vector<std::uint32_t> global;  // value index -> global string id
    std::map<std::string, std::uint32_t, std::less<>> index;
};

struct Key {
    std::vector<std::uint32_t> v;
    std::uint32_t op = 0;
    std::int64_t allow = 0;
    std::int64_t deny = 0;
    std::int64_t seen = 0;  // distinct Allow (user, resource, op) triples behind the key
    bool covered = false;
    bool uncoverable = false;
};

struct IRule {
    std::vector<std::vector<char>> sets;  // empty = wildcard
    std::vector<char> ops;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> cons;  // attribute indices

    bool wildcard(std::size_t a) const { return sets[a].empty(); }
};

struct Stats {
    std::int64_t fresh = 0;  // Allow weight not yet covered
    std::int64_t allow = 0;
    std::int64_t deny = 0;
    std::int64_t seen = 0;

    Stats& operator+=(const Stats& o) {
        fresh += o.fresh;
        allow += o.allow;
        deny += o.deny;
        seen += o.seen;
        return *this;
    }
};

/// P(X >= k) for X ~ Binomial(n, p). Exact up to n = 5000, normal beyond.
double binomial_upper_tail(std::int64_t n, double p, std::int64_t k) {
    if (k <= 0) return 1.0;
    if (k > n || p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    if (n > 5000) {
        const double mean = static_cast<double>(n) * p;
        const double sd = std::sqrt(mean * (1.0 - p));
        return 0.5 * std::erfc((static_cast<double>(k) - 0.5 - mean) / (sd * std::sqrt(2.0)));
    }
    const double lp = std::log(p), lq = std::log1p(-p);
    double tail = 0.0;
    for (std::int64_t i = k; i <= n; ++i) {
        const double term = std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                                     static_cast<double>(i) * lp + static_cast<double>(n - i) * lq);
        tail += term;
        if (term < tail * 1e-17) break;
    }
    return std::min(1.0, tail);
}

/// One (user tuple, resource tuple) combination of the entity universe.
struct Pair {
    std::vector<std::uint32_t> v;
    std::int64_t weight = 0;  // users x resources sharing these tuples
};

class Space {
public:
    Space(const AttributeSchema& schema, std::set<std::string> operations) {
        std::map<std::string, std::uint32_t> strings;
        auto gid = [&](const std::string& s) {
            return strings.emplace(s, static_cast<std::uint32_t>(strings.size())).first->second;
        };
        for (Side side : {Side::User, Side::Resource}) {
            for (const auto& def : schema.side(side)) {
                AttrInfo info{side, def.name, {def.domain.begin(), def.domain.end()}, {}, {}};
                for (std::uint32_t i = 0; i < info.values.size(); ++i) {
                    info.index.emplace(info.values[i], i);
                    info.global.push_back(gid(info.values[i]));
                }
                (side == Side::User ? n_user_ : n_resource_)++;
                attrs_.push_back(std::move(info));
            }
        }
        ops_.assign(operations.begin(), operations.end());
    }

    const std::vector<AttrInfo>& attrs() const { return attrs_; }
    const std::vector<std::string>& ops() const { return ops_; }
    std::vector<Key>& keys() { return keys_; }
    const std::vector<Key>& keys() const { return keys_; }

    std::optional<std::size_t> attr_index(Side side, std::string_view name) const {
        for (std::size_t a = 0; a < attrs_.size(); ++a)
            if (attrs_[a].side == side && attrs_[a].name == name) return a;
        return std::nullopt;
    }

    std::uint32_t op_index(const std::string& op) const {
        auto it = std::lower_bound(ops_.begin(), ops_.end(), op);
        if (it == ops_.end() || *it != op) throw ContractViolation("unknown operation '" + op + "'");
        return static_cast<std::uint32_t>(it - ops_.begin());
    }

    std::vector<std::uint32_t> values_of(const Entity& user, const Entity& resource) const {
        std::vector<std::uint32_t> v(attrs_.size());
        for (std::size_t a = 0; a < attrs_.size(); ++a) {
            const Entity& e = attrs_[a].side == Side::User ? user : resource;
            const auto& value = e.attribute(attrs_[a].name);
            auto it = attrs_[a].index.find(value);
            if (it == attrs_[a].index.end())
                throw SchemaMismatch("value '" + value + "' of '" + e.id + "' lies outside the domain of '" +
                                     attrs_[a].name + "'");
            v[a] = it->second;
        }
        return v;
    }

    /// Aggregates entries into keys. Returns per-entry key index (npos if unresolved).
    std::vector<std::size_t> add_entries(std::span<const LogEntry> logs, const EntityMap& users,
                                         const EntityMap& resources, bool covered,
                                         std::vector<std::string>* diagnostics = nullptr) {
        std::vector<std::size_t> out;
        out.reserve(logs.size());
        for (std::size_t i = 0; i < logs.size(); ++i) {
            const auto& e = logs[i];
            auto u = users.find(e.user_id);
            auto r = resources.find(e.resource_id);
            if (u == users.end() || r == resources.end()) {
                if (diagnostics)
                    diagnostics->push_back("entry " + std::to_string(i + 1) +
                                           ": unresolvable id, ignored by the miner");
                out.push_back(static_cast<std::size_t>(-1));
                continue;
            }
            auto v = values_of(u->second, r->second);
            const auto op = op_index(e.operation);
            auto [it, fresh] = lookup_.try_emplace({v, op}, keys_.size());
            if (fresh) keys_.push_back(Key{std::move(v), op});
            auto& k = keys_[it->second];
            (e.decision == Decision::Allow ? k.allow : k.deny) += 1;
            if (e.decision == Decision::Allow &&
                ++triples_[std::make_tuple(e.user_id, e.resource_id, op)] == 1)
                ++k.seen;
            if (covered && e.decision == Decision::Allow) k.covered = true;
            out.push_back(it->second);
        }
        return out;
    }

    bool cons_hold(const IRule& r, const Key& k) const {
        for (const auto& [ua, ra] : r.cons)
            if (attrs_[ua].global[k.v[ua]] != attrs_[ra].global[k.v[ra]]) return false;
        return true;
    }

    bool matches_values(const IRule& r, const std::vector<std::uint32_t>& v, std::size_t skip = SIZE_MAX) const {
        for (std::size_t a = 0; a < attrs_.size(); ++a)
            if (a != skip && !r.sets[a].empty() && !r.sets[a][v[a]]) return false;
        for (const auto& [ua, ra] : r.cons)
            if (attrs_[ua].global[v[ua]] != attrs_[ra].global[v[ra]]) return false;
        return true;
    }

    bool matches(const IRule& r, const Key& k) const { return r.ops[k.op] && matches_values(r, k.v); }

    bool matches_except_attr(const IRule& r, const Key& k, std::size_t skip) const {
        return r.ops[k.op] && matches_values(r, k.v, skip);
    }

    static Stats contribution(const Key& k) {
        return {k.covered ? 0 : k.allow, k.allow, k.deny, k.seen};
    }

    // ── Evidence guard ──────────────────────────────────────────────────────
    //
    // Logs sample the allowed space. Good-Turing gives the share of allowed
    // triples a log of this size is expected to show; a generalization step
    // whose newly matched triples are observed far less often than that is
    // reaching into space the log says nothing for.

    /// Groups the entity universe into tuple pairs. Disabled when the
    /// universe exceeds `max_pairs` or the log shows no repeated triple.
    void build_universe(const EntityMap& users, const EntityMap& resources, std::size_t max_pairs) {
        pairs_.clear();
        completeness_ = 0.0;
        std::int64_t n = 0, singles = 0;
        for (const auto& [_, count] : triples_) {
            n += count;
            singles += count == 1;
        }
        if (n == 0 || singles == n) return;
        auto group = [&](const EntityMap& entities, Side side) {
            std::map<std::vector<std::uint32_t>, std::int64_t> out;
            for (const auto& [_, e] : entities) {
                std::vector<std::uint32_t> t;
                bool ok = true;
                for (std::size_t a = 0; a < attrs_.size() && ok; ++a) {
                    if (attrs_[a].side != side) continue;
                    auto it = e.attributes.find(attrs_[a].name);
                    auto vi = it == e.attributes.end() ? attrs_[a].index.end() : attrs_[a].index.find(it->second);
                    if (vi == attrs_[a].index.end()) ok = false;
                    else t.push_back(vi->second);
                }
                if (ok) ++out[t];
            }
            return out;
        };
        const auto ut = group(users, Side::User);
        const auto rt = group(resources, Side::Resource);
        if (ut.size() * rt.size() > max_pairs) return;
        for (const auto& [u, cu] : ut)
            for (const auto& [r, cr] : rt) {
                Pair p{std::vector<std::uint32_t>(attrs_.size()), cu * cr};
                std::size_t iu = 0, ir = 0;
                for (std::size_t a = 0; a < attrs_.size(); ++a)
                    p.v[a] = attrs_[a].side == Side::User ? u[iu++] : r[ir++];
                pairs_.push_back(std::move(p));
            }
        completeness_ = 1.0 - static_cast<double>(singles) / static_cast<double>(n);
    }

    double completeness() const { return completeness_; }
    bool guarded() const { return !pairs_.empty() && completeness_ > 0.0; }
    const std::vector<Pair>& pairs() const { return pairs_; }

    static std::int64_t op_count(const IRule& r) { return std::count(r.ops.begin(), r.ops.end(), 1); }

    /// Universe triples matched by r except on attribute a, grouped by a's value.
    std::vector<std::int64_t> slice_by_value(const IRule& r, std::size_t a) const {
        std::vector<std::int64_t> out(attrs_[a].values.size(), 0);
        const auto nops = op_count(r);
        for (const auto& p : pairs_)
            if (matches_values(r, p.v, a)) out[p.v[a]] += p.weight * nops;
        return out;
    }

    /// (triples, observed Allow triples) matched by `wider` and by none of `base`.
    std::pair<std::int64_t, std::int64_t> added(const IRule& wider, std::initializer_list<const IRule*> base) const {
        std::int64_t slice = 0, seen = 0;
        for (const auto& p : pairs_) {
            if (!matches_values(wider, p.v)) continue;
            for (std::size_t o = 0; o < ops_.size(); ++o) {
                if (!wider.ops[o]) continue;
                bool old = false;
                for (const auto* b : base) old = old || (b->ops[o] && matches_values(*b, p.v));
                if (!old) slice += p.weight;
            }
        }
        for (const auto& k : keys_) {
            if (!matches(wider, k)) continue;
            bool old = false;
            for (const auto* b : base) old = old || matches(*b, k);
            if (!old) seen += k.seen;
        }
        return {slice, seen};
    }

    /// Unseen triples among `slice` are consistent with sampling misses at level alpha.
    bool supported(std::int64_t slice, std::int64_t seen, double alpha) const {
        if (!guarded() || slice <= 0) return true;
        return binomial_upper_tail(slice, 1.0 - completeness_, slice - seen) >= alpha;
    }

    Stats stats(const IRule& r, unsigned threads) const {
        Stats s;
        s.fresh = detail::parallel_sum(keys_.size(), threads, [&](std::size_t i) -> std::int64_t {
            const auto& k = keys_[i];
            return !k.covered && matches(r, k) ? k.allow : 0;
        });
        s.allow = detail::parallel_sum(keys_.size(), threads, [&](std::size_t i) -> std::int64_t {
            return matches(r, keys_[i]) ? keys_[i].allow : 0;
        });
        s.deny = detail::parallel_sum(keys_.size(), threads, [&](std::size_t i) -> std::int64_t {
            return matches(r, keys_[i]) ? keys_[i].deny : 0;
        });
        return s;
    }

    IRule seed_rule(const Key& k) const {
        IRule r;
        r.sets.resize(attrs_.size());
        for (std::size_t a = 0; a < attrs_.size(); ++a) {
            r.sets[a].assign(attrs_[a].values.size(), 0);
            r.sets[a][k.v[a]] = 1;
            collapse(r, a);
        }
        r.ops.assign(ops_.size(), 0);
        r.ops[k.op] = 1;
        for (std::uint32_t ua = 0; ua < attrs_.size(); ++ua) {
            if (attrs_[ua].side != Side::User) continue;
            for (std::uint32_t ra = 0; ra < attrs_.size(); ++ra) {
                if (attrs_[ra].side != Side::Resource) continue;
                if (attrs_[ua].global[k.v[ua]] == attrs_[ra].global[k.v[ra]]) r.cons.emplace_back(ua, ra);
            }
        }
        sort_cons(r);
        return r;
    }

    /// Full-domain sets become wildcards.
    void collapse(IRule& r, std::size_t a) const {
        if (!r.sets[a].empty() &&
            std::all_of(r.sets[a].begin(), r.sets[a].end(), [](char c) { return c != 0; }))
            r.sets[a].clear();
    }

    void sort_cons(IRule& r) const {
        std::sort(r.cons.begin(), r.cons.end(), [&](const auto& x, const auto& y) {
            return std::tie(attrs_[x.first].name, attrs_[x.second].name) <
                   std::tie(attrs_[y.first].name, attrs_[y.second].name);
        });
    }

    IRule from_rule(const AbacRule& rule) const {
        IRule r;
        r.sets.resize(attrs_.size());
        for (Side side : {Side::User, Side::Resource}) {
            for (const auto& [name, values] : side == Side::User ? rule.user_expr : rule.resource_expr) {
                auto a = attr_index(side, name);
                if (!a) throw SchemaMismatch("rule references unknown attribute '" + name + "'");
                r.sets[*a].assign(attrs_[*a].values.size(), 0);
                for (const auto& v : values) {
                    auto it = attrs_[*a].index.find(v);
                    if (it == attrs_[*a].index.end())
                        throw SchemaMismatch("value '" + v + "' outside the domain of '" + name + "'");
                    r.sets[*a][it->second] = 1;
                }
                collapse(r, *a);
            }
        }
        r.ops.assign(ops_.size(), 0);
        for (const auto& op : rule.operations) {
            auto it = std::lower_bound(ops_.begin(), ops_.end(), op);
            if (it != ops_.end() && *it == op) r.ops[static_cast<std::size_t>(it - ops_.begin())] = 1;
        }
        for (const auto& [ua, ra] : rule.constraints) {
            auto u = attr_index(Side::User, ua);
            auto x = attr_index(Side::Resource, ra);
            if (!u || !x) throw SchemaMismatch("constraint references unknown attribute");
            r.cons.emplace_back(static_cast<std::uint32_t>(*u), static_cast<std::uint32_t>(*x));
        }
        sort_cons(r);
        return r;
    }

    AbacRule to_rule(const IRule& r) const {
        AbacRule rule;
        for (std::size_t a = 0; a < attrs_.size(); ++a) {
            if (r.sets[a].empty()) continue;
            auto& expr = attrs_[a].side == Side::User ? rule.user_expr : rule.resource_expr;
            auto& out = expr[attrs_[a].name];
            for (std::size_t i = 0; i < attrs_[a].values.size(); ++i)
                if (r.sets[a][i]) out.insert(attrs_[a].values[i]);
        }
        for (std::size_t i = 0; i < ops_.size(); ++i)
            if (r.ops[i]) rule.operations.insert(ops_[i]);
        for (const auto& [ua, ra] : r.cons) rule.constraints.emplace(attrs_[ua].name, attrs_[ra].name);
        return rule;
    }

    /// Twice the complexity norm, so both modes stay integral.
    std::int64_t norm2(const IRule& r, const MinerConfig& config) const {
        const auto& w = config.weights;
        std::int64_t us = 0, rs = 0;
        for (std::size_t a = 0; a < attrs_.size(); ++a) {
            const auto n = static_cast<std::int64_t>(std::count(r.sets[a].begin(), r.sets[a].end(), 1));
            (attrs_[a].side == Side::User ? us : rs) += n;
        }
        us *= static_cast<std::int64_t>(w.user_value);
        rs *= static_cast<std::int64_t>(w.resource_value);
        const auto ops = static_cast<std::int64_t>(w.operation) * std::count(r.ops.begin(), r.ops.end(), 1);
        const auto cons = static_cast<std::int64_t>(w.constraint * r.cons.size());
        if (config.quality_side_mode == QualitySideMode::Summed) return 2 * (us + rs + ops + cons);
        return us + rs + 2 * ops + 2 * cons;
    }

private:
    std::vector<AttrInfo> attrs_;
    std::size_t n_user_ = 0;
    std::size_t n_resource_ = 0;
    std::vector<std::string> ops_;
    std::vector<Key> keys_;
    std::map<std::pair<std::vector<std::uint32_t>, std::uint32_t>, std::size_t> lookup_;
    std::map<std::tuple<std::string, std::string, std::uint32_t>, std::int64_t> triples_;
    std::vector<Pair> pairs_;
    double completeness_ = 0.0;
};

constexpr std::size_t kMaxUniversePairs = 4'000'000;

bool within_tolerance(const Stats& s, double tolerance) {
    if (s.deny == 0) return true;
    return static_cast<double>(s.deny) <= tolerance * static_cast<double>(s.allow);
}

/// fresh_a / norm_a > fresh_b / norm_b
bool better(const Stats& a, std::int64_t norm_a, const Stats& b, std::int64_t norm_b) {
    return static_cast<__int128>(a.fresh) * norm_b > static_cast<__int128>(b.fresh) * norm_a;
}

std::vector<std::size_t> attribute_order(const Space& space, const AttributeRanking& ranking) {
    std::vector<std::size_t> order;
    for (const auto& ra : ranking.attributes)
        if (auto a = space.attr_index(ra.side, ra.name)) order.push_back(*a);
    // attributes the ranking does not mention go last, by (side, name)
    std::vector<std::size_t> rest;
    for (std::size_t a = 0; a < space.attrs().size(); ++a)
        if (std::find(order.begin(), order.end(), a) == order.end()) rest.push_back(a);
    std::sort(rest.begin(), rest.end(), [&](std::size_t x, std::size_t y) {
        return std::tie(space.attrs()[x].side, space.attrs()[x].name) <
               std::tie(space.attrs()[y].side, space.attrs()[y].name);
    });
    order.insert(order.end(), rest.begin(), rest.end());
    return order;
}

IRule generalize_internal(IRule r, const Space& space, const std::vector<std::size_t>& order,
                          const MinerConfig& config) {
    const auto& attrs = space.attrs();
    const auto& keys = space.keys();
    Stats cur = space.stats(r, config.threads);
    std::int64_t cur_norm = space.norm2(r, config);
    const bool guard = config.evidence_guard && space.guarded();
    // Steps that add no fresh coverage wait until no covering step is left.
    // Taken early, they let a decisive attribute go while the rule is still
    // too narrow for the loss to show.
    bool allow_free = false;

    for (std::size_t pass = 0; pass < config.max_generalization_passes; ++pass) {
        bool changed = false;
        for (std::size_t a : order) {
            if (r.wildcard(a)) continue;
            std::vector<Stats> by_value(attrs[a].values.size());
            for (const auto& k : keys)
                if (space.matches_except_attr(r, k, a)) by_value[k.v[a]] += Space::contribution(k);
            std::vector<std::int64_t> slice;
            if (guard) slice = space.slice_by_value(r, a);
            auto evidenced = [&](std::uint32_t v) {
                return !guard || space.supported(slice[v], by_value[v].seen, config.evidence_alpha);
            };

            // widen
            std::vector<std::uint32_t> candidates;
            for (std::uint32_t v = 0; v < by_value.size(); ++v)
                if (!r.sets[a][v] && by_value[v].fresh > 0) candidates.push_back(v);
            std::sort(candidates.begin(), candidates.end(), [&](std::uint32_t x, std::uint32_t y) {
                if (by_value[x].fresh != by_value[y].fresh) return by_value[x].fresh > by_value[y].fresh;
                return attrs[a].values[x] < attrs[a].values[y];
            });
            for (auto v : candidates) {
                IRule next = r;
                next.sets[a][v] = 1;
                space.collapse(next, a);
                Stats s = cur;
                s += by_value[v];
                const auto n = space.norm2(next, config);
                if (within_tolerance(s, config.deny_tolerance) && better(s, n, cur, cur_norm) && evidenced(v)) {
                    r = std::move(next);
                    cur = s;
                    cur_norm = n;
                    changed = true;
                    if (r.wildcard(a)) break;
                }
            }
            if (r.wildcard(a)) continue;

            // drop
            Stats all;
            for (const auto& s : by_value) all += s;
            bool drop_evidenced = true;
            if (guard) {
                std::int64_t add_slice = 0, add_seen = 0;
                for (std::uint32_t v = 0; v < by_value.size(); ++v)
                    if (!r.sets[a][v]) {
                        add_slice += slice[v];
                        add_seen += by_value[v].seen;
                    }
                drop_evidenced = space.supported(add_slice, add_seen, config.evidence_alpha);
            }
            IRule next = r;
            next.sets[a].clear();
            const auto n = space.norm2(next, config);
            const bool gains = all.fresh > cur.fresh || allow_free;
            if (gains && within_tolerance(all, config.deny_tolerance) && better(all, n, cur, cur_norm) &&
                drop_evidenced) {
                r = std::move(next);
                cur = all;
                cur_norm = n;
                changed = true;
            }
        }
        for (std::size_t c = 0; c < r.cons.size();) {
            IRule next = r;
            next.cons.erase(next.cons.begin() + static_cast<std::ptrdiff_t>(c));
            const Stats s = space.stats(next, config.threads);
            const auto n = space.norm2(next, config);
            const bool acceptable = (s.fresh > cur.fresh || allow_free) &&
                                    within_tolerance(s, config.deny_tolerance) && better(s, n, cur, cur_norm);
            bool evidenced = true;
            if (guard && acceptable) {
                const auto [add_slice, add_seen] = space.added(next, {&r});
                evidenced = space.supported(add_slice, add_seen, config.evidence_alpha);
            }
            if (acceptable && evidenced) {
                r = std::move(next);
                cur = s;
                cur_norm = n;
                changed = true;
            } else {
                ++c;
            }
        }
        if (!changed) {
            if (allow_free) break;
            allow_free = true;
        } else {
            allow_free = false;
        }
    }
    return r;
}

std::vector<std::size_t> seed_order(const Space& space) {
    const auto& keys = space.keys();
    const auto& attrs = space.attrs();
    std::map<std::vector<std::uint32_t>, std::int64_t> user_freq, resource_freq;
    auto side_tuple = [&](const Key& k, Side side) {
        std::vector<std::uint32_t> t;
        for (std::size_t a = 0; a < attrs.size(); ++a)
            if (attrs[a].side == side) t.push_back(k.v[a]);
        return t;
    };
    for (const auto& k : keys) {
        user_freq[side_tuple(k, Side::User)] += k.allow;
        resource_freq[side_tuple(k, Side::Resource)] += k.allow;
    }
    // canonical text independent of declaration order
    std::vector<std::size_t> by_name(attrs.size());
    std::iota(by_name.begin(), by_name.end(), 0);
    std::sort(by_name.begin(), by_name.end(), [&](std::size_t x, std::size_t y) {
        return std::tie(attrs[x].side, attrs[x].name) < std::tie(attrs[y].side, attrs[y].name);
    });
    struct Entry {
        std::size_t key;
        std::int64_t freq, side_freq;
        std::string text;
    };
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto& k = keys[i];
        if (k.allow == 0) continue;
        std::string text;
        for (auto a : by_name) {
            text += attrs[a].name;
            text += '=';
            text += attrs[a].values[k.v[a]];
            text += ';';
        }
        text += space.ops()[k.op];
        entries.push_back({i, k.allow,
                           user_freq[side_tuple(k, Side::User)] + resource_freq[side_tuple(k, Side::Resource)],
                           std::move(text)});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        if (x.freq != y.freq) return x.freq > y.freq;
        if (x.side_freq != y.side_freq) return x.side_freq > y.side_freq;
        return x.text < y.text;
    });
    std::vector<std::size_t> out;
    for (const auto& e : entries) out.push_back(e.key);
    return out;
}

std::size_t irule_wsc(const Space& space, const IRule& r, const WscWeights& w) {
    return wsc(space.to_rule(r), w);
}

/// Union of two rules that differ in exactly one attribute, or only in operations.
std::optional<IRule> try_merge(const IRule& x, const IRule& y) {
    if (x.cons != y.cons) return std::nullopt;
    std::optional<std::size_t> diff;
    for (std::size_t a = 0; a < x.sets.size(); ++a) {
        if (x.sets[a] == y.sets[a]) continue;
        if (diff) return std::nullopt;
        diff = a;
    }
    if (diff && x.ops != y.ops) return std::nullopt;
    if (!diff && x.ops == y.ops) return x;  // duplicates
    IRule m = x;
    if (diff) {
        const auto a = *diff;
        if (x.sets[a].empty() || y.sets[a].empty()) {
            m.sets[a].clear();
        } else {
            for (std::size_t i = 0; i < m.sets[a].size(); ++i) m.sets[a][i] = x.sets[a][i] || y.sets[a][i];
            if (std::all_of(m.sets[a].begin(), m.sets[a].end(), [](char c) { return c != 0; })) m.sets[a].clear();
        }
    } else {
        for (std::size_t i = 0; i < m.ops.size(); ++i) m.ops[i] = x.ops[i] || y.ops[i];
    }
    return m;
}

/// Least general rule matching everything either rule matches.
IRule generalization_of(const IRule& x, const IRule& y) {
    IRule m = x;
    for (std::size_t a = 0; a < x.sets.size(); ++a) {
        if (x.sets[a].empty() || y.sets[a].empty()) {
            m.sets[a].clear();
            continue;
        }
        for (std::size_t i = 0; i < m.sets[a].size(); ++i) m.sets[a][i] = x.sets[a][i] || y.sets[a][i];
        if (std::all_of(m.sets[a].begin(), m.sets[a].end(), [](char c) { return c != 0; })) m.sets[a].clear();
    }
    for (std::size_t i = 0; i < m.ops.size(); ++i) m.ops[i] = x.ops[i] || y.ops[i];
    m.cons.clear();
    for (const auto& c : x.cons)
        if (std::find(y.cons.begin(), y.cons.end(), c) != y.cons.end()) m.cons.push_back(c);
    return m;
}

void merge_rules(std::vector<IRule>& rules, const Space& space, const MinerConfig& config, bool general) {
    auto text = [&](const IRule& r) { return format_rule_body(space.to_rule(r)); };
    while (true) {
        std::sort(rules.begin(), rules.end(),
                  [&](const IRule& a, const IRule& b) { return text(a) < text(b); });
        bool merged = false;
        for (std::size_t i = 0; i < rules.size() && !merged; ++i) {
            for (std::size_t j = i + 1; j < rules.size() && !merged; ++j) {
                auto m = general ? std::optional<IRule>(generalization_of(rules[i], rules[j]))
                                 : try_merge(rules[i], rules[j]);
                if (!m) continue;
                const Stats s = space.stats(*m, config.threads);
                if (!within_tolerance(s, config.deny_tolerance)) continue;
                if (irule_wsc(space, *m, config.weights) >=
                    irule_wsc(space, rules[i], config.weights) + irule_wsc(space, rules[j], config.weights))
                    continue;
                if (config.evidence_guard && space.guarded()) {
                    const auto [add_slice, add_seen] = space.added(*m, {&rules[i], &rules[j]});
                    if (!space.supported(add_slice, add_seen, config.evidence_alpha)) continue;
                }
                rules[i] = std::move(*m);
                rules.erase(rules.begin() + static_cast<std::ptrdiff_t>(j));
                merged = true;
            }
        }
        if (!merged) return;
    }
}

/// Indices of rules to keep; order of the input preserved.
std::vector<std::size_t> prune_indices(const std::vector<std::vector<std::size_t>>& covers,
                                       const std::vector<std::int64_t>& weight_of,
                                       std::size_t n_items, const std::vector<std::size_t>& wscs,
                                       const std::vector<std::string>& texts) {
    const std::size_t n = covers.size();
    std::vector<int> count(n_items, 0);
    std::vector<std::int64_t> covered_weight(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (auto item : covers[i]) {
            ++count[item];
            covered_weight[i] += weight_of[item];
        }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (covered_weight[a] != covered_weight[b]) return covered_weight[a] < covered_weight[b];
        if (wscs[a] != wscs[b]) return wscs[a] > wscs[b];
        if (texts[a] != texts[b]) return texts[a] > texts[b];
        return a > b;
    });
    std::vector<char> removed(n, 0);
    for (auto i : order) {
        const bool redundant =
            std::all_of(covers[i].begin(), covers[i].end(), [&](std::size_t item) { return count[item] >= 2; });
        if (!redundant) continue;
        removed[i] = 1;
        for (auto item : covers[i]) --count[item];
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i)
        if (!removed[i]) keep.push_back(i);
    return keep;
}

void prune_rules(std::vector<IRule>& rules, const Space& space, const WscWeights& weights) {
    const auto& keys = space.keys();
    std::vector<std::int64_t> weight_of(keys.size());
    for (std::size_t k = 0; k < keys.size(); ++k) weight_of[k] = keys[k].allow;
    std::vector<std::vector<std::size_t>> covers(rules.size());
    std::vector<std::size_t> wscs;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        for (std::size_t k = 0; k < keys.size(); ++k)
            if (keys[k].allow > 0 && space.matches(rules[i], keys[k])) covers[i].push_back(k);
        const auto rule = space.to_rule(rules[i]);
        wscs.push_back(wsc(rule, weights));
        texts.push_back(format_rule_body(rule));
    }
    std::vector<IRule> kept;
    for (auto i : prune_indices(covers, weight_of, keys.size(), wscs, texts)) kept.push_back(std::move(rules[i]));
    rules = std::move(kept);
}

// Second look with every Allow pattern counted as fresh: each coverable
// pattern seeds a maximal rule, then a greedy weighted set cover picks the
// cheapest family that still covers what the first pass covered.
std::vector<IRule> consolidate(std::vector<IRule> first, Space& space, const std::vector<std::size_t>& order,
                               const MinerConfig& config) {
    auto& keys = space.keys();
    std::vector<char> target(keys.size(), 0);
    for (std::size_t k = 0; k < keys.size(); ++k) {
        target[k] = keys[k].covered ? 1 : 0;
        keys[k].covered = false;
    }
    auto text = [&](const IRule& r) { return format_rule_body(space.to_rule(r)); };
    std::map<std::string, IRule> pool;
    for (auto& r : first) pool.emplace(text(r), std::move(r));
    // one search per leading attribute; a greedy path that takes a wrong
    // turn early never reaches some rules
    std::vector<std::vector<std::size_t>> orders{order};
    for (std::size_t i = 1; i < order.size(); ++i) {
        auto o = order;
        std::rotate(o.begin(), o.begin() + static_cast<std::ptrdiff_t>(i), o.end());
        orders.push_back(std::move(o));
    }
    for (auto seed : seed_order(space)) {
        if (!target[seed]) continue;
        for (const auto& o : orders) {
            IRule r = generalize_internal(space.seed_rule(keys[seed]), space, o, config);
            pool.emplace(text(r), std::move(r));
        }
    }

    struct Cand {
        IRule rule;
        std::vector<std::size_t> covers;
        std::int64_t wsc;
        std::string text;
    };
    std::vector<Cand> cands;
    for (auto& [t, r] : pool) {
        Cand c{std::move(r), {}, 0, t};
        for (std::size_t k = 0; k < keys.size(); ++k)
            if (target[k] && space.matches(c.rule, keys[k])) c.covers.push_back(k);
        c.wsc = static_cast<std::int64_t>(std::max<std::size_t>(1, irule_wsc(space, c.rule, config.weights)));
        cands.push_back(std::move(c));
    }

    std::vector<char> done(keys.size(), 0), used(cands.size(), 0);
    std::vector<IRule> chosen;
    while (true) {
        std::size_t best = SIZE_MAX;
        std::int64_t best_gain = 0;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (used[i]) continue;
            std::int64_t gain = 0;
            for (auto k : cands[i].covers)
                if (!done[k]) gain += keys[k].allow;
            if (gain == 0) continue;
            // gain / wsc, ties to the earlier (lexically smaller) text
            if (best == SIZE_MAX || static_cast<__int128>(gain) * cands[best].wsc >
                                        static_cast<__int128>(best_gain) * cands[i].wsc) {
                best = i;
                best_gain = gain;
            }
        }
        if (best == SIZE_MAX) break;
        used[best] = 1;
        for (auto k : cands[best].covers) done[k] = 1;
        chosen.push_back(cands[best].rule);
    }
    for (std::size_t k = 0; k < keys.size(); ++k) keys[k].covered = done[k] != 0;
    return chosen;
}

std::set<std::string> operations_of(std::span<const LogEntry> logs) {
    std::set<std::string> ops;
    for (const auto& e : logs) ops.insert(e.operation);
    return ops;
}

}  // namespace

AbacRule generalize(const AbacRule& rule, std::span<const LogEntry> uncovered_allow,
                    std::span<const LogEntry> deny_entries, const EntityMap& users,
                    const EntityMap& resources, const AttributeSchema& schema,
                    const AttributeRanking& ranking, const MinerConfig& config,
                    std::span<const LogEntry> covered_allow) {
    config.validate();
    auto ops = operations_of(uncovered_allow);
    for (const auto& e : deny_entries) ops.insert(e.operation);
    for (const auto& e : covered_allow) ops.insert(e.operation);
    ops.insert(rule.operations.begin(), rule.operations.end());
    Space space(schema, ops);
    space.add_entries(uncovered_allow, users, resources, false);
    space.add_entries(covered_allow, users, resources, true);
    std::vector<LogEntry> denies;
    for (const auto& e : deny_entries)
        if (e.decision == Decision::Deny) denies.push_back(e);
    space.add_entries(denies, users, resources, false);
    if (config.evidence_guard) space.build_universe(users, resources, kMaxUniversePairs);
    auto r = generalize_internal(space.from_rule(rule), space, attribute_order(space, ranking), config);
    return canonicalize(space.to_rule(r), schema);
}

std::vector<AbacRule> redundancy_prune(std::span<const AbacRule> rules,
                                       std::span<const LogEntry> logs, const EntityMap& users,
                                       const EntityMap& resources) {
    std::vector<std::pair<const Entity*, const Entity*>> allow;
    std::vector<const LogEntry*> entries;
    for (const auto& e : logs) {
        if (e.decision != Decision::Allow) continue;
        auto u = users.find(e.user_id);
        auto r = resources.find(e.resource_id);
        if (u == users.end() || r == resources.end()) continue;
        allow.emplace_back(&u->second, &r->second);
        entries.push_back(&e);
    }
    std::vector<std::vector<std::size_t>> covers(rules.size());
    std::vector<std::size_t> wscs;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        for (std::size_t k = 0; k < allow.size(); ++k)
            if (rule_matches(rules[i], *allow[k].first, *allow[k].second, entries[k]->operation))
                covers[i].push_back(k);
        wscs.push_back(wsc(rules[i]));
        texts.push_back(format_rule_body(rules[i]));
    }
    std::vector<AbacRule> out;
    for (auto i : prune_indices(covers, std::vector<std::int64_t>(allow.size(), 1), allow.size(), wscs, texts))
        out.push_back(rules[i]);
    return out;
}

void order_policy(std::vector<AbacRule>& rules, std::span<const LogEntry> logs,
                  const EntityMap& users, const EntityMap& resources, const WscWeights& weights) {
    struct Row {
        AbacRule rule;
        std::size_t covered;
        std::size_t wsc;
        std::string text;
    };
    std::vector<Row> rows;
    for (auto& rule : rules) {
        std::size_t covered = 0;
        for (const auto& e : logs) {
            if (e.decision != Decision::Allow) continue;
            auto u = users.find(e.user_id);
            auto r = resources.find(e.resource_id);
            if (u == users.end() || r == resources.end()) continue;
            if (rule_matches(rule, u->second, r->second, e.operation)) ++covered;
        }
        auto text = format_rule_body(rule);
        const auto w = wsc(rule, weights);
        rows.push_back({std::move(rule), covered, w, std::move(text)});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.covered != b.covered) return a.covered > b.covered;
        if (a.wsc != b.wsc) return a.wsc < b.wsc;
        return a.text < b.text;
    });
    rules.clear();
    for (auto& row : rows) rules.push_back(std::move(row.rule));
}

MiningResult mine_policy(const EntityMap& users, const EntityMap& resources,
                         std::span<const LogEntry> logs, const AttributeSchema& schema,
                         const MinerConfig& config) {
    config.validate();
    schema.validate();
    const auto start = std::chrono::steady_clock::now();

    MiningResult result;
    Space space(schema, operations_of(logs));
    std::vector<std::string> diagnostics;
    space.add_entries(logs, users, resources, false, &diagnostics);
    if (config.evidence_guard) space.build_universe(users, resources, kMaxUniversePairs);
    const bool any_allow = std::any_of(space.keys().begin(), space.keys().end(),
                                       [](const Key& k) { return k.allow > 0; });
    if (!any_allow) throw EmptyLog("the log contains no resolvable Allow entries");

    result.ranking = rank_attributes(logs, users, resources, schema);
    const auto order = attribute_order(space, result.ranking);

    std::vector<IRule> rules;
    auto& keys = space.keys();
    for (auto seed : seed_order(space)) {
        if (keys[seed].covered || keys[seed].uncoverable) continue;
        IRule r = space.seed_rule(keys[seed]);
        if (!within_tolerance(space.stats(r, config.threads), config.deny_tolerance)) {
            keys[seed].uncoverable = true;
            ++result.uncoverable_seeds;
            continue;
        }
        r = generalize_internal(std::move(r), space, order, config);
        const Stats s = space.stats(r, config.threads);
        if (s.fresh < static_cast<std::int64_t>(config.min_rule_coverage)) {
            keys[seed].uncoverable = true;
            ++result.uncoverable_seeds;
            continue;
        }
        for (auto& k : keys)
            if (k.allow > 0 && !k.covered && space.matches(r, k)) k.covered = true;
        rules.push_back(std::move(r));
    }

    if (config.consolidate) rules = consolidate(std::move(rules), space, order, config);
    merge_rules(rules, space, config, false);
    merge_rules(rules, space, config, true);
    prune_rules(rules, space, config.weights);

    std::vector<AbacRule> out;
    for (const auto& r : rules) out.push_back(canonicalize(space.to_rule(r), schema));
    order_policy(out, logs, users, resources, config.weights);

    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.policy = Policy{std::move(out), schema};
    result.report = coverage(result.policy, logs, users, resources, {false, config.threads});
    result.report.total_wsc = policy_wsc(result.policy, config.weights);
    result.report.mining_seconds = elapsed;
    result.report.diagnostics.insert(result.report.diagnostics.end(), diagnostics.begin(), diagnostics.end());
    if (result.ranking.warning) result.report.diagnostics.push_back(*result.ranking.warning);
    if (result.uncoverable_seeds > 0)
        result.report.diagnostics.push_back(std::to_string(result.uncoverable_seeds) +
                                            " Allow pattern(s) conflict with Deny evidence and stay uncovered");
    return result;
}

nlohmann::json policy_to_json(const Policy& policy, const EvaluationReport& report,
                              const WscWeights& weights) {
    nlohmann::json j;
    j["rules"] = nlohmann::json::array();
    for (const auto& r : policy.rules) {
        auto rj = rule_to_json(r);
        rj["wsc"] = wsc(r, weights);
        j["rules"].push_back(std::move(rj));
    }
    j["rule_count"] = policy.rules.size();
    j["total_wsc"] = policy_wsc(policy, weights);
    j["coverage_percent"] = report.coverage_percent;
    j["allow_total"] = report.allow_total;
    j["allow_covered"] = report.allow_covered;
    j["over_permissions"] = report.over_permissions;
    return j;
}

}  // namespace abac
