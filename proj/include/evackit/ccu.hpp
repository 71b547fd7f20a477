#pragma once

// Command-and-Control Unit: rule-based incident classification and
// department notification routing. The classifier is a pluggable interface;
// the shipped baseline is a deterministic token table.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "evackit/common.hpp"

namespace evackit::ccu {

enum class Scene { household, road, facility };
enum class EmergencyType { medical, traffic, fire, attack };
enum class Level { major, minor };
enum class Department { hospital, police, fire, bus_terminal, traffic_control };

inline const char* to_string(Scene s) {
    switch (s) {
        case Scene::household: return "household";
        case Scene::road: return "road";
        case Scene::facility: return "facility";
    }
    return "?";
}

inline Scene scene_from_string(const std::string& s) {
    if (s == "household") return Scene::household;
    if (s == "road") return Scene::road;
    if (s == "facility") return Scene::facility;
    throw ValidationError("unknown scene: " + s);
}

inline const char* to_string(EmergencyType t) {
    switch (t) {
        case EmergencyType::medical: return "medical";
        case EmergencyType::traffic: return "traffic";
        case EmergencyType::fire: return "fire";
        case EmergencyType::attack: return "attack";
    }
    return "?";
}

inline const char* to_string(Level l) {
    return l == Level::major ? "major" : "minor";
}

inline const char* to_string(Department d) {
    switch (d) {
        case Department::hospital: return "hospital";
        case Department::police: return "police";
        case Department::fire: return "fire";
        case Department::bus_terminal: return "bus_terminal";
        case Department::traffic_control: return "traffic_control";
    }
    return "?";
}

struct CongestionSnapshot {
    double link_flow_vph = 0;  // vehicles/hour
    double avg_speed_mps = 0;
};

struct IncidentMessage {
    std::int64_t id = 0;
    Seconds timestamp = 0;
    Scene scene = Scene::household;
    NodeId location = 0;
    std::string observed_condition;
    std::int64_t population_impacted = 0;
    std::optional<CongestionSnapshot> congestion;

    void validate() const {
        if (timestamp < 0)
            throw ValidationError("incident timestamp must be >= 0");
        if (population_impacted < 0)
            throw ValidationError("population_impacted must be >= 0");
    }
};

struct Classification {
    EmergencyType type = EmergencyType::medical;
    Level level = Level::major;

    bool operator==(const Classification& o) const {
        return type == o.type && level == o.level;
    }
};

struct Notification {
    std::int64_t incident_id = 0;
    Department department = Department::hospital;
    Classification classification;
    IncidentMessage payload;
};

class UnknownConditionError : public ValidationError {
public:
    explicit UnknownConditionError(const std::string& token)
        : ValidationError("unknown condition token: " + token) {}
};

class DuplicateIncidentError : public ValidationError {
public:
    explicit DuplicateIncidentError(std::int64_t id)
        : ValidationError("incident id already ingested: " + std::to_string(id)) {}
};

/// Medical condition tokens. Unknown tokens raise rather than default:
/// silent misclassification is worse than a loud failure here.
inline const std::map<std::string, Level>& medical_condition_table() {
    static const std::map<std::string, Level> table = {
        {"cardiac_arrest", Level::major},
        {"unconsciousness", Level::major},
        {"difficulty_breathing", Level::major},
        {"seizures", Level::major},
        {"severe_injuries", Level::major},
        {"strokes", Level::major},
        {"head_trauma", Level::major},
        {"bone_fractures", Level::major},
        {"asthma_attacks", Level::major},
        {"chronic_condition_elderly", Level::major},
        {"sick_children", Level::major},
        {"bleeding_cuts", Level::major},
        {"bruising_swelling", Level::major},
        {"minor_injuries", Level::major},
        {"persistent_fevers", Level::major},
        {"constipation", Level::minor},
        {"chronic_cough", Level::minor},
        {"diarrhoea", Level::minor},
        {"skin_rash", Level::minor},
    };
    return table;
}

inline const std::set<std::string>& road_crash_tokens() {
    static const std::set<std::string> table = {"vehicle_crash", "collision", "pileup",
                                                "crash"};
    return table;
}

inline const std::set<std::string>& fire_tokens() {
    static const std::set<std::string> table = {"fire_alarm", "fire", "smoke_detected"};
    return table;
}

inline const std::set<std::string>& attack_tokens() {
    static const std::set<std::string> table = {"terrorist_attack", "attack",
                                                "intrusion_alarm"};
    return table;
}

/// Pluggable classifier contract; Baseline below is the shipped rule table.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual Classification classify(const IncidentMessage& msg) const = 0;
};

inline Classification classify(const IncidentMessage& msg) {
    const std::string& tok = msg.observed_condition;
    const auto& medical = medical_condition_table();
    if (auto it = medical.find(tok); it != medical.end())
        return {EmergencyType::medical, it->second};
    if (road_crash_tokens().count(tok))
        return {EmergencyType::traffic, Level::major};
    if (fire_tokens().count(tok))
        return {EmergencyType::fire, Level::major};
    if (attack_tokens().count(tok))
        return {EmergencyType::attack, Level::major};
    throw UnknownConditionError(tok);
}

class RuleBasedClassifier final : public Classifier {
public:
    Classification classify(const IncidentMessage& msg) const override {
        return ccu::classify(msg);
    }
};

/// Total routing table: every (type, level) pair maps to a non-empty,
/// duplicate-free, deterministically ordered department list.
inline std::vector<Department> departments_for(const Classification& cls) {
    using D = Department;
    switch (cls.type) {
        case EmergencyType::medical:
            return {D::hospital};
        case EmergencyType::traffic:
            if (cls.level == Level::major)
                return {D::police, D::hospital, D::traffic_control};
            return {D::traffic_control};
        case EmergencyType::fire:
            if (cls.level == Level::major)
                return {D::fire, D::hospital, D::bus_terminal, D::police, D::traffic_control};
            return {D::fire};
        case EmergencyType::attack:
            if (cls.level == Level::major)
                return {D::fire, D::hospital, D::bus_terminal, D::police, D::traffic_control};
            return {D::police};
    }
    return {D::hospital};
}

inline std::vector<Notification> route_notifications(const Classification& cls,
                                                     const IncidentMessage& msg) {
    std::vector<Notification> out;
    for (Department d : departments_for(cls))
        out.push_back({msg.id, d, cls, msg});
    return out;
}

/// In-process message bus standing in for the wireless transport. Single
/// writer; ingestion order defines per-department FIFO order.
class CcuBus {
public:
    explicit CcuBus(const Classifier* classifier = nullptr) : classifier_(classifier) {}

    std::vector<Notification> ingest(const IncidentMessage& msg) {
        msg.validate();
        if (seen_.count(msg.id))
            throw DuplicateIncidentError(msg.id);
        Classification cls =
            classifier_ ? classifier_->classify(msg) : ccu::classify(msg);
        auto notifications = route_notifications(cls, msg);
        seen_.insert(msg.id);
        for (const Notification& n : notifications) {
            queues_[n.department].push_back(n);
            log_.push_back(n);
        }
        return notifications;
    }

    const std::deque<Notification>& queue(Department d) const {
        static const std::deque<Notification> empty;
        auto it = queues_.find(d);
        return it == queues_.end() ? empty : it->second;
    }

    const std::vector<Notification>& emission_log() const { return log_; }
    bool has_seen(std::int64_t id) const { return seen_.count(id) > 0; }

private:
    const Classifier* classifier_;
    std::set<std::int64_t> seen_;
    std::map<Department, std::deque<Notification>> queues_;
    std::vector<Notification> log_;
};

// --- JSON-lines interchange -----------------------------------------------

inline nlohmann::json incident_to_json(const IncidentMessage& m) {
    nlohmann::json j = {{"id", m.id},
                        {"timestamp_s", m.timestamp},
                        {"scene", to_string(m.scene)},
                        {"location", m.location},
                        {"observed_condition", m.observed_condition},
                        {"population_impacted", m.population_impacted}};
    if (m.congestion)
        j["congestion"] = {{"link_flow_vph", m.congestion->link_flow_vph},
                           {"avg_speed_mps", m.congestion->avg_speed_mps}};
    return j;
}

inline IncidentMessage incident_from_json(const nlohmann::json& j) {
    IncidentMessage m;
    m.id = j.at("id").get<std::int64_t>();
    m.timestamp = j.at("timestamp_s").get<double>();
    m.scene = scene_from_string(j.at("scene").get<std::string>());
    m.location = j.at("location").get<NodeId>();
    m.observed_condition = j.at("observed_condition").get<std::string>();
    m.population_impacted = j.value("population_impacted", std::int64_t{0});
    if (j.contains("congestion")) {
        CongestionSnapshot c;
        c.link_flow_vph = j["congestion"].value("link_flow_vph", 0.0);
        c.avg_speed_mps = j["congestion"].value("avg_speed_mps", 0.0);
        m.congestion = c;
    }
    m.validate();
    return m;
}

inline nlohmann::json notification_to_json(const Notification& n) {
    return {{"incident_id", n.incident_id},
            {"department", to_string(n.department)},
            {"type", to_string(n.classification.type)},
            {"level", to_string(n.classification.level)},
            {"payload", incident_to_json(n.payload)}};
}

}  // namespace evackit::ccu
