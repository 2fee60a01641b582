#include "abac/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ctime>
#include <fstream>

#include "abac/rng.hpp"
#include "abac/rule_format.hpp"
#include "abac/embedded_data.hpp"

namespace abac {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Separate streams for entities and logs, so log generation never shifts the
// entities drawn for a seed.
constexpr std::uint64_t kLogStream = 0x9E3779B97F4A7C15ull;

std::string padded_id(const std::string& prefix, std::size_t i, std::size_t n) {
    std::size_t width = 1;
    for (std::size_t m = n > 0 ? n - 1 : 0; m >= 10; m /= 10) ++width;
    width = std::max<std::size_t>(width, 2);
    std::string digits = std::to_string(i);
    return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

const nlohmann::json& schema_document() {
    static const nlohmann::json doc = nlohmann::json::parse(embedded::kAbacSchemaJson);
    return doc;
}

std::pair<std::vector<std::string>, std::vector<std::string>> variant_attributes(SchemaVariant v) {
    const auto& entry = schema_document().at("variants").at(std::string(to_string(v)));
    return {entry.at("user").get<std::vector<std::string>>(),
            entry.at("resource").get<std::vector<std::string>>()};
}

bool rule_fits(const AbacRule& rule, const AttributeSchema& schema) {
    for (const auto& [name, _] : rule.user_expr)
        if (!schema.find(Side::User, name)) return false;
    for (const auto& [name, _] : rule.resource_expr)
        if (!schema.find(Side::Resource, name)) return false;
    for (const auto& [ua, ra] : rule.constraints)
        if (!schema.find(Side::User, ua) || !schema.find(Side::Resource, ra)) return false;
    return true;
}

Entity project_entity(const Entity& e, const std::vector<AttributeDef>& defs) {
    Entity out{e.id, {}};
    for (const auto& d : defs) out.attributes[d.name] = e.attributes.at(d.name);
    return out;
}

std::vector<std::string> sorted_domain(const AttributeDef& d) {
    return {d.domain.begin(), d.domain.end()};
}

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ContractViolation(std::string(what) + " must be in [0, 1], got " + std::to_string(p));
}

}  // namespace

std::string_view to_string(SchemaVariant v) {
    switch (v) {
        case SchemaVariant::U2O2: return "u2o2";
        case SchemaVariant::U3O2: return "u3o2";
        case SchemaVariant::U4O5: return "u4o5";
    }
    return "?";
}

SchemaVariant schema_variant_from_string(std::string_view s) {
    const auto l = lower(s);
    if (l == "u2o2") return SchemaVariant::U2O2;
    if (l == "u3o2") return SchemaVariant::U3O2;
    if (l == "u4o5") return SchemaVariant::U4O5;
    throw ContractViolation("unknown schema variant '" + std::string(s) + "'");
}

std::string_view to_string(DataModel m) { return m == DataModel::Abac ? "abac" : "dac"; }

DataModel data_model_from_string(std::string_view s) {
    const auto l = lower(s);
    if (l == "abac") return DataModel::Abac;
    if (l == "dac") return DataModel::Dac;
    throw ContractViolation("unknown data model '" + std::string(s) + "'");
}

void GenConfig::validate() const {
    if (log_size < 1 || log_size > 1'000'000)
        throw ContractViolation("log_size must be in [1, 1000000]");
    check_probability(deny_sample_prob, "deny_sample_prob");
    check_probability(dac_allow_ratio, "dac_allow_ratio");
    if (abac_users == 0 || abac_resources == 0)
        throw ContractViolation("abac_users and abac_resources must be positive");
}

AttributeSchema abac_schema(SchemaVariant variant) {
    const auto full = schema_from_json(schema_document());
    const auto [u, r] = variant_attributes(variant);
    return full.project(u, r);
}

std::vector<std::string> abac_operations() {
    return schema_document().at("operations").get<std::vector<std::string>>();
}

GroundTruthPolicy master_policy() {
    static const GroundTruthPolicy master{"master", parse_policy(embedded::kAbacPolicyText)};
    return master;
}

GroundTruthPolicy variant_policy(SchemaVariant variant, const GroundTruthPolicy& master) {
    const auto schema = abac_schema(variant);
    GroundTruthPolicy out{std::string(to_string(variant)), {}};
    for (const auto& rule : master.rules)
        if (rule_fits(rule, schema)) out.rules.push_back(rule);
    return out;
}

AbacOrg generate_abac_org(const GenConfig& config, const GroundTruthPolicy& master) {
    config.validate();
    const auto full = abac_schema(SchemaVariant::U4O5);
    for (const auto& rule : master.rules) validate_rule(rule, full);

    Rng rng(config.rng_seed);
    auto draw = [&](const std::vector<AttributeDef>& defs, const std::string& prefix, std::size_t n) {
        EntityMap out;
        std::vector<std::vector<std::string>> domains;
        for (const auto& d : defs) domains.push_back(sorted_domain(d));
        for (std::size_t i = 0; i < n; ++i) {
            Entity e{padded_id(prefix, i, n), {}};
            for (std::size_t a = 0; a < defs.size(); ++a) e.attributes[defs[a].name] = rng.pick(domains[a]);
            out.emplace(e.id, std::move(e));
        }
        return out;
    };
    const auto users = draw(full.user_attributes, "user_", config.abac_users);
    const auto resources = draw(full.resource_attributes, "res_", config.abac_resources);

    AbacOrg org;
    org.variant = config.schema_variant;
    org.schema = abac_schema(config.schema_variant);
    for (const auto& [id, e] : users) org.users.emplace(id, project_entity(e, org.schema.user_attributes));
    for (const auto& [id, e] : resources)
        org.resources.emplace(id, project_entity(e, org.schema.resource_attributes));
    org.policy = variant_policy(config.schema_variant, master);
    org.operations = abac_operations();
    return org;
}

std::string format_timestamp(std::uint64_t seconds) {
    const std::time_t t = static_cast<std::time_t>(1728979200 + seconds);  // 2024-10-15T08:00:00Z
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<LogEntry> generate_abac_logs(const AbacOrg& org, const GroundTruthPolicy& policy,
                                         const GenConfig& config) {
    config.validate();
    if (policy.rules.empty()) throw AllDeny("ground-truth policy '" + policy.name + "' has no rules");
    if (org.users.empty() || org.resources.empty() || org.operations.empty())
        throw AllDeny("organization has no users, resources or operations");

    std::vector<const Entity*> users, resources;
    for (const auto& [_, e] : org.users) users.push_back(&e);
    for (const auto& [_, e] : org.resources) resources.push_back(&e);
    const auto& ops = org.operations;

    // Truth table over every (user, resource, op) triple.
    std::vector<char> allowed(users.size() * resources.size() * ops.size(), 0);
    std::size_t granted = 0;
    for (std::size_t u = 0; u < users.size(); ++u)
        for (std::size_t r = 0; r < resources.size(); ++r)
            for (std::size_t o = 0; o < ops.size(); ++o) {
                bool hit = false;
                for (const auto& rule : policy.rules)
                    if (rule_matches(rule, *users[u], *resources[r], ops[o])) {
                        hit = true;
                        break;
                    }
                allowed[(u * resources.size() + r) * ops.size() + o] = hit;
                granted += hit;
            }
    if (granted == 0 && config.deny_sample_prob == 0.0)
        throw AllDeny("ground-truth policy grants nothing and Deny sampling is off");
    if (granted == 0) throw AllDeny("ground-truth policy grants no (user, resource, operation) triple");

    Rng rng(config.rng_seed ^ kLogStream);
    std::vector<LogEntry> logs;
    logs.reserve(config.log_size);
    std::uint64_t clock = 0;
    const std::size_t budget = 1000 * config.log_size + 100000;
    for (std::size_t attempt = 0; logs.size() < config.log_size; ++attempt) {
        if (attempt >= budget)
            throw AllDeny("attempt budget exhausted after " + std::to_string(logs.size()) + " entries");
        const auto u = rng.uniform(users.size());
        const auto r = rng.uniform(resources.size());
        const auto o = rng.uniform(ops.size());
        const bool allow = allowed[(u * resources.size() + r) * ops.size() + o];
        if (!allow && !rng.bernoulli(config.deny_sample_prob)) continue;
        clock += 1 + rng.uniform(90);
        logs.push_back({users[u]->id, resources[r]->id, ops[o], format_timestamp(clock),
                        allow ? Decision::Allow : Decision::Deny});
    }
    return logs;
}

// ── DAC ─────────────────────────────────────────────────────────────────────

void DacOrgConfig::validate() const {
    if (users == 0 || objects == 0) throw ContractViolation("DAC users and objects must be positive");
    if (departments.empty()) throw ContractViolation("DAC departments empty");
    if (designation_tiers.empty() || tier_weights.size() != designation_tiers.size())
        throw ContractViolation("designation_tiers and tier_weights must be non-empty and aligned");
    for (const auto& t : designation_tiers)
        if (t.empty()) throw ContractViolation("empty designation tier");
    if (senior_tier >= designation_tiers.size()) throw ContractViolation("senior_tier out of range");
    if (types.empty()) throw ContractViolation("DAC types empty");
    if (sensitivities.empty() || sensitivity_weights.size() != sensitivities.size())
        throw ContractViolation("sensitivities and sensitivity_weights must be non-empty and aligned");
    check_probability(home_type_probability, "home_type_probability");
    check_probability(request_locality, "request_locality");
    check_probability(discretionary_focus, "discretionary_focus");
    if (designation_skew < 0) throw ContractViolation("designation_skew < 0");
    check_probability(read_probability, "read_probability");
    if (discretionary_grants_per_user < 0) throw ContractViolation("discretionary_grants_per_user < 0");
    for (double w : tier_weights)
        if (w < 0) throw ContractViolation("negative tier weight");
    for (double w : sensitivity_weights)
        if (w < 0) throw ContractViolation("negative sensitivity weight");
}

DacOrgConfig DacOrgConfig::from_json(const nlohmann::json& j) {
    DacOrgConfig c;
    c.users = j.value("users", c.users);
    c.objects = j.value("objects", c.objects);
    c.departments = j.value("departments", c.departments);
    c.designation_tiers = j.value("designation_tiers", c.designation_tiers);
    c.tier_weights = j.value("tier_weights", c.tier_weights);
    c.senior_tier = j.value("senior_tier", c.senior_tier);
    c.types = j.value("types", c.types);
    c.home_type_probability = j.value("home_type_probability", c.home_type_probability);
    c.sensitivities = j.value("sensitivities", c.sensitivities);
    c.sensitivity_weights = j.value("sensitivity_weights", c.sensitivity_weights);
    c.confidential_level = j.value("confidential_level", c.confidential_level);
    c.confidential_acl_max = j.value("confidential_acl_max", c.confidential_acl_max);
    if (j.contains("cross_department"))
        for (const auto& pair : j.at("cross_department"))
            c.cross_department.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    c.discretionary_grants_per_user = j.value("discretionary_grants_per_user", c.discretionary_grants_per_user);
    c.request_locality = j.value("request_locality", c.request_locality);
    c.discretionary_focus = j.value("discretionary_focus", c.discretionary_focus);
    c.designation_skew = j.value("designation_skew", c.designation_skew);
    c.read_probability = j.value("read_probability", c.read_probability);
    c.validate();
    return c;
}

nlohmann::json DacOrgConfig::to_json() const {
    nlohmann::json j;
    j["users"] = users;
    j["objects"] = objects;
    j["departments"] = departments;
    j["designation_tiers"] = designation_tiers;
    j["tier_weights"] = tier_weights;
    j["senior_tier"] = senior_tier;
    j["types"] = types;
    j["home_type_probability"] = home_type_probability;
    j["sensitivities"] = sensitivities;
    j["sensitivity_weights"] = sensitivity_weights;
    j["confidential_level"] = confidential_level;
    j["confidential_acl_max"] = confidential_acl_max;
    j["cross_department"] = nlohmann::json::array();
    for (const auto& [a, b] : cross_department) j["cross_department"].push_back({a, b});
    j["discretionary_grants_per_user"] = discretionary_grants_per_user;
    j["request_locality"] = request_locality;
    j["discretionary_focus"] = discretionary_focus;
    j["designation_skew"] = designation_skew;
    j["read_probability"] = read_probability;
    return j;
}

DacOrgConfig default_dac_config() {
    static const DacOrgConfig c = DacOrgConfig::from_json(nlohmann::json::parse(embedded::kDacOrgJson));
    return c;
}

bool DacOrg::allows(const std::string& user, const std::string& object, const std::string& op) const {
    auto it = acls.find(object);
    return it != acls.end() && it->second.count({user, op}) > 0;
}

DacOrg generate_dac_org(const GenConfig& config, const DacOrgConfig& dac) {
    config.validate();
    dac.validate();
    Rng rng(config.rng_seed);

    DacOrg org;
    org.operations = {"read", "write"};
    AttributeDef department{"department", {dac.departments.begin(), dac.departments.end()}};
    AttributeDef designation{"designation", {}};
    for (const auto& tier : dac.designation_tiers) designation.domain.insert(tier.begin(), tier.end());
    AttributeDef type{"type", {}};
    for (const auto& [t, _] : dac.types) type.domain.insert(t);
    AttributeDef sensitivity{"sensitivity", {dac.sensitivities.begin(), dac.sensitivities.end()}};
    org.schema.user_attributes = {department, designation};
    org.schema.resource_attributes = {type, sensitivity};

    // Seniority rank: tier first, then position within the tier.
    std::map<std::string, std::pair<std::size_t, std::size_t>> rank;
    for (std::size_t t = 0; t < dac.designation_tiers.size(); ++t)
        for (std::size_t k = 0; k < dac.designation_tiers[t].size(); ++k)
            rank[dac.designation_tiers[t][k]] = {t, k};

    std::map<std::string, std::vector<std::string>> members;  // department -> user ids
    for (std::size_t i = 0; i < dac.users; ++i) {
        const auto id = padded_id("user_", i, dac.users);
        const auto& dept = rng.pick(dac.departments);
        const auto tier = rng.weighted(dac.tier_weights);
        const auto& titles = dac.designation_tiers[tier];
        std::vector<double> w(titles.size());
        for (std::size_t k = 0; k < w.size(); ++k)
            w[k] = 1.0 / std::pow(static_cast<double>(k + 1), dac.designation_skew);
        const auto& desig = titles[rng.weighted(w)];
        org.users.emplace(id, Entity{id, {{"department", dept}, {"designation", desig}}});
        org.tiers[id] = tier;
        members[dept].push_back(id);
    }

    std::map<std::string, std::vector<std::string>> home_types;
    std::vector<std::string> all_types;
    for (const auto& [t, d] : dac.types) {
        home_types[d].push_back(t);
        all_types.push_back(t);
    }
    for (std::size_t i = 0; i < dac.objects; ++i) {
        const auto id = padded_id("obj_", i, dac.objects);
        const auto& owner = rng.pick(dac.departments);
        auto home = home_types.find(owner);
        const bool at_home = home != home_types.end() && rng.bernoulli(dac.home_type_probability);
        const auto& t = at_home ? rng.pick(home->second) : rng.pick(all_types);
        const auto& s = dac.sensitivities[rng.weighted(dac.sensitivity_weights)];
        org.objects.emplace(id, Entity{id, {{"type", t}, {"sensitivity", s}}});
        org.owners[id] = owner;
    }

    std::vector<std::string> open_objects;
    for (const auto& [id, obj] : org.objects) {
        auto& acl = org.acls[id];
        const auto& owner = org.owners.at(id);
        const auto& dept_users = members[owner];
        if (obj.attributes.at("sensitivity") == dac.confidential_level) {
            // Most senior members of the owning department only.
            std::vector<std::string> ranked = dept_users;
            std::sort(ranked.begin(), ranked.end(), [&](const std::string& a, const std::string& b) {
                const auto& ra = rank.at(org.users.at(a).attributes.at("designation"));
                const auto& rb = rank.at(org.users.at(b).attributes.at("designation"));
                if (ra != rb) return ra > rb;
                return a < b;
            });
            ranked.resize(std::min(ranked.size(), dac.confidential_acl_max));
            for (std::size_t k = 0; k < ranked.size(); ++k) {
                acl.insert({ranked[k], "read"});
                if (k == 0) acl.insert({ranked[k], "write"});
            }
            continue;
        }
        open_objects.push_back(id);
        for (const auto& u : dept_users) {
            acl.insert({u, "read"});
            if (org.tiers.at(u) >= 1) acl.insert({u, "write"});
        }
        for (const auto& [uid, tier] : org.tiers)
            if (tier >= dac.senior_tier) acl.insert({uid, "read"});
        for (const auto& [reader, target] : dac.cross_department)
            if (target == owner)
                for (const auto& u : members[reader]) acl.insert({u, "read"});
    }

    // Individual grants with no attribute-level explanation.
    if (!open_objects.empty()) {
        const double whole = std::floor(dac.discretionary_grants_per_user);
        const double frac = dac.discretionary_grants_per_user - whole;
        for (const auto& [uid, _] : org.users) {
            const auto n = static_cast<std::size_t>(whole) + (rng.bernoulli(frac) ? 1 : 0);
            for (std::size_t k = 0; k < n; ++k) {
                const auto& obj = rng.pick(open_objects);
                org.acls[obj].insert({uid, rng.bernoulli(dac.read_probability) ? "read" : "write"});
                org.discretionary[uid].push_back(obj);
            }
        }
    }
    return org;
}

std::vector<LogEntry> generate_dac_logs(const DacOrg& org, const GenConfig& config, const DacOrgConfig& dac) {
    config.validate();
    dac.validate();
    const auto target_allow = static_cast<std::size_t>(
        std::llround(static_cast<double>(config.log_size) * config.dac_allow_ratio));
    const std::size_t target_deny = config.log_size - target_allow;

    std::size_t granted = 0;
    for (const auto& [_, acl] : org.acls) granted += acl.size();
    const std::size_t triples = org.users.size() * org.objects.size() * org.operations.size();
    if (target_allow > 0 && granted == 0) throw RatioUnreachable("ACLs grant nothing; no Allow entry possible");
    if (target_deny > 0 && granted >= triples)
        throw RatioUnreachable("ACLs grant everything; no Deny entry possible");

    std::vector<const Entity*> users;
    for (const auto& [_, e] : org.users) users.push_back(&e);
    std::vector<std::string> object_ids;
    for (const auto& [id, _] : org.objects) object_ids.push_back(id);

    // Objects a department habitually touches: its own and its partners'.
    std::map<std::string, std::vector<std::string>> local;
    for (const auto& [id, owner] : org.owners) {
        local[owner].push_back(id);
        for (const auto& [reader, target] : dac.cross_department)
            if (target == owner) local[reader].push_back(id);
    }

    std::map<std::string, std::vector<std::string>> by_type;
    for (const auto& [id, obj] : org.objects) by_type[obj.attributes.at("type")].push_back(id);

    Rng rng(config.rng_seed ^ kLogStream);
    std::vector<LogEntry> logs;
    logs.reserve(config.log_size);
    std::size_t n_allow = 0, n_deny = 0;
    std::uint64_t clock = 0;
    const std::size_t budget = 1000 * config.log_size + 100000;
    for (std::size_t attempt = 0; logs.size() < config.log_size; ++attempt) {
        if (attempt >= budget)
            throw RatioUnreachable("could not reach " + std::to_string(target_allow) + " Allow / " +
                                   std::to_string(target_deny) + " Deny within the attempt budget");
        const auto* u = users[rng.uniform(users.size())];
        const auto& dept = u->attributes.at("department");
        auto loc = local.find(dept);
        const bool use_local = rng.bernoulli(dac.request_locality) && loc != local.end();
        const std::string* pick = nullptr;
        if (use_local) {
            pick = &rng.pick(loc->second);
        } else if (auto g = org.discretionary.find(u->id);
                   g != org.discretionary.end() && rng.bernoulli(dac.discretionary_focus)) {
            // look-alikes of something the user was handed individually
            const auto& granted = rng.pick(g->second);
            pick = &rng.pick(by_type.at(org.objects.at(granted).attributes.at("type")));
        } else {
            pick = &rng.pick(object_ids);
        }
        const auto& obj = *pick;
        const std::string op = rng.bernoulli(dac.read_probability) ? "read" : "write";
        const bool allow = org.allows(u->id, obj, op);
        if (allow ? n_allow >= target_allow : n_deny >= target_deny) continue;
        (allow ? n_allow : n_deny)++;
        clock += 1 + rng.uniform(90);
        logs.push_back({u->id, obj, op, format_timestamp(clock), allow ? Decision::Allow : Decision::Deny});
    }
    return logs;
}

// ── Datasets on disk ────────────────────────────────────────────────────────

GeneratedDataset generate_dataset(DataModel model, const GenConfig& config) {
    GeneratedDataset out;
    if (model == DataModel::Abac) {
        auto org = generate_abac_org(config);
        out.logs = generate_abac_logs(org, org.policy, config);
        out.schema = std::move(org.schema);
        out.users = std::move(org.users);
        out.resources = std::move(org.resources);
        out.ground_truth = std::move(org.policy.rules);
    } else {
        auto org = generate_dac_org(config);
        out.logs = generate_dac_logs(org, config);
        out.schema = std::move(org.schema);
        out.users = std::move(org.users);
        out.resources = std::move(org.objects);
    }
    return out;
}

std::string_view to_string(EmitStyle s) {
    switch (s) {
        case EmitStyle::Angle: return "angle";
        case EmitStyle::Csv: return "csv";
        case EmitStyle::Pipe: return "pipe";
    }
    return "?";
}

EmitStyle emit_style_from_string(std::string_view s) {
    const auto l = lower(s);
    if (l == "angle") return EmitStyle::Angle;
    if (l == "csv") return EmitStyle::Csv;
    if (l == "pipe") return EmitStyle::Pipe;
    throw ContractViolation("unknown output format '" + std::string(s) + "'");
}

FormatSpec emit_format(EmitStyle style, FileKind kind, const AttributeSchema& schema) {
    FormatSpec spec;
    spec.kind = kind;
    switch (style) {
        case EmitStyle::Angle:
            spec.wrapper = std::make_pair('<', '>');
            spec.delimiter = Delimiter::Space;
            break;
        case EmitStyle::Csv: spec.delimiter = Delimiter::Comma; break;
        case EmitStyle::Pipe: spec.delimiter = Delimiter::Pipe; break;
    }
    if (kind == FileKind::Logs) {
        spec.style = AttributeStyle::Positional;
        spec.positional_order = kLogFields;
    } else if (style == EmitStyle::Angle) {
        spec.style = AttributeStyle::KeyValueColon;
    } else {
        spec.style = AttributeStyle::Positional;
        spec.positional_order = schema.names(kind == FileKind::Users ? Side::User : Side::Resource);
    }
    return spec;
}

DatasetPaths DatasetPaths::in(const std::filesystem::path& dir) {
    return {dir / "users.txt", dir / "resources.txt", dir / "logs.txt"};
}

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void emit_dataset(const GeneratedDataset& dataset, EmitStyle style, const DatasetPaths& paths) {
    std::vector<std::string> lines;
    const auto uspec = emit_format(style, FileKind::Users, dataset.schema);
    const auto unames = dataset.schema.names(Side::User);
    for (const auto& [_, e] : dataset.users) lines.push_back(format_entity_line(e, uspec, unames));
    write_lines(paths.users, lines);

    lines.clear();
    const auto rspec = emit_format(style, FileKind::Resources, dataset.schema);
    const auto rnames = dataset.schema.names(Side::Resource);
    for (const auto& [_, e] : dataset.resources) lines.push_back(format_entity_line(e, rspec, rnames));
    write_lines(paths.resources, lines);

    lines.clear();
    const auto lspec = emit_format(style, FileKind::Logs, dataset.schema);
    for (const auto& e : dataset.logs) lines.push_back(format_log_line(e, lspec));
    write_lines(paths.logs, lines);
}

}  // namespace abac
