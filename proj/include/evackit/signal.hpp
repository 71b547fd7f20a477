#pragma once

// Intersection signal control: fixed-time plan arithmetic, GLOSA speed
// advisories, and an emergency preemption state machine (phase extension or
// truncate-and-switch) with priority ordering among conflicting requests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "evackit/common.hpp"

namespace evackit::signal {

struct Phase {
    int id = 0;
    std::vector<int> approaches;  // approach ids served green in this phase
    Seconds green = 30;
    Seconds intergreen = 5;

    bool serves(int approach) const {
        return std::find(approaches.begin(), approaches.end(), approach) != approaches.end();
    }
};

struct SignalPlan {
    std::vector<Phase> phases;
    Seconds offset = 0;
    Seconds min_green = 5;

    Seconds cycle() const {
        Seconds c = 0;
        for (const auto& p : phases)
            c += p.green + p.intergreen;
        return c;
    }

    void validate() const {
        if (phases.size() < 2)
            throw ValidationError("signal plan needs at least 2 phases");
        for (const auto& p : phases) {
            if (p.green < min_green)
                throw ValidationError("phase green below min_green");
            if (p.intergreen < 0)
                throw ValidationError("negative intergreen");
        }
        if (cycle() <= 0)
            throw ValidationError("cycle must be positive");
    }
};

struct PhasePosition {
    int phase_id = 0;
    Seconds elapsed = 0;  // into the phase's (green + intergreen) block
    bool is_green = false;
};

inline PhasePosition phase_at(const SignalPlan& plan, Seconds t) {
    const Seconds cycle = plan.cycle();
    Seconds u = std::fmod(t - plan.offset, cycle);
    if (u < 0)
        u += cycle;
    for (const auto& p : plan.phases) {
        if (u < p.green)
            return {p.id, u, true};
        if (u < p.green + p.intergreen)
            return {p.id, u, false};
        u -= p.green + p.intergreen;
    }
    return {plan.phases.back().id, u, false};  // unreachable for valid plans
}

// --- GLOSA ----------------------------------------------------------------

struct ApproachingVehicle {
    int vehicle_id = 0;
    Meters distance_to_stopline = 0;
    double v_min = 0;  // m/s
    double v_max = 0;
    int approach = 0;
};

struct GlosaAdvisory {
    int vehicle_id = 0;
    bool stop_advice = false;
    double advised_speed = 0;  // m/s, valid when !stop_advice
};

/// Green windows [start, end) for an approach within [from, from + horizon).
inline std::vector<std::pair<Seconds, Seconds>> green_windows(const SignalPlan& plan,
                                                              int approach, Seconds from,
                                                              Seconds horizon) {
    const Seconds cycle = plan.cycle();
    std::vector<std::pair<Seconds, Seconds>> windows;
    // first cycle start at or before `from`
    double k = std::floor((from - plan.offset) / cycle);
    for (Seconds base = plan.offset + k * cycle; base < from + horizon; base += cycle) {
        Seconds u = 0;
        for (const auto& p : plan.phases) {
            if (p.serves(approach)) {
                Seconds ws = base + u;
                Seconds we = ws + p.green;
                if (we > from && ws < from + horizon)
                    windows.push_back({ws, we});
            }
            u += p.green + p.intergreen;
        }
    }
    std::sort(windows.begin(), windows.end());
    return windows;
}

/// Advises a constant speed landing the vehicle inside the earliest
/// reachable green window; stop-advice when none exists within 2 cycles.
inline GlosaAdvisory glosa_advise(const SignalPlan& plan, const ApproachingVehicle& vehicle,
                                  Seconds now) {
    if (vehicle.distance_to_stopline <= 0)
        throw ValidationError("distance to stopline must be positive");
    if (vehicle.v_min <= 0 || vehicle.v_min > vehicle.v_max)
        throw ValidationError("require 0 < v_min <= v_max");

    const Seconds horizon = 2 * plan.cycle();
    const Seconds arrival_min = now + vehicle.distance_to_stopline / vehicle.v_max;
    const Seconds arrival_max = now + vehicle.distance_to_stopline / vehicle.v_min;

    for (const auto& [ws, we] : green_windows(plan, vehicle.approach, now, horizon)) {
        Seconds entry = std::max(ws, arrival_min);
        if (entry >= we || entry > arrival_max)
            continue;
        double speed = vehicle.distance_to_stopline / (entry - now);
        speed = std::clamp(speed, vehicle.v_min, vehicle.v_max);
        return {vehicle.vehicle_id, false, speed};
    }
    return {vehicle.vehicle_id, true, 0};
}

// --- preemption -----------------------------------------------------------

enum class VehicleClass { ambulance, emergency_bus };

struct BusAttributes {
    std::int64_t demand = 0;        // evacuees waiting on this bus's route
    Meters shelter_distance = 0;    // to its next shelter
    int remaining_pickups = 0;
};

struct PreemptionRequest {
    int vehicle_id = 0;
    VehicleClass vehicle_class = VehicleClass::ambulance;
    int approach = 0;
    Seconds eta = 0;
    Seconds requested_at = 0;
    std::optional<BusAttributes> bus;
};

struct PriorityWeights {
    double per_evacuee = 1.0;       // w1
    double per_meter = 0.001;       // w2, subtracted
    double per_remaining_stop = 5.0;  // w3
};

/// Ambulances outrank every bus; buses rank by a linear attribute score.
inline double priority_score(const PreemptionRequest& req, const PriorityWeights& w = {}) {
    if (req.vehicle_class == VehicleClass::ambulance) {
        if (req.bus)
            throw ValidationError("ambulance request carries bus attributes");
        return std::numeric_limits<double>::infinity();
    }
    if (!req.bus)
        throw ValidationError("bus request missing attributes");
    return w.per_evacuee * static_cast<double>(req.bus->demand) -
           w.per_meter * req.bus->shelter_distance +
           w.per_remaining_stop * req.bus->remaining_pickups;
}

enum class Mode { normal, extended, preempting };
enum class PreemptAction { extend, switch_phase, queue };

class StaleRequestError : public ValidationError {
public:
    StaleRequestError() : ValidationError("preemption request eta is in the past") {}
};

class TimeRegressionError : public ValidationError {
public:
    TimeRegressionError() : ValidationError("tick time moved backwards") {}
};

/// One intersection. Callers serialize tick()/request_preemption(); distinct
/// controllers are independent.
class SignalController {
public:
    struct Interval {
        int phase_id;
        bool green;
        Seconds start;
        Seconds end;  // infinity while open
    };

    struct ServiceEvent {
        int vehicle_id;
        double score;
        Seconds time;
        std::vector<std::pair<int, double>> pending_at_service;  // (vehicle, score)
    };

    SignalController(SignalPlan plan, Seconds start_time = 0, Seconds max_extension = 60,
                     PriorityWeights weights = {})
        : plan_(std::move(plan)), weights_(weights), max_extension_(max_extension),
          now_(start_time) {
        plan_.validate();
        phase_idx_ = 0;
        seg_green_ = true;
        seg_start_ = start_time;
        open_interval();
    }

    Mode mode() const {
        switch (sub_) {
            case Sub::normal: return Mode::normal;
            case Sub::extended: return Mode::extended;
            default: return Mode::preempting;
        }
    }

    int current_phase() const { return plan_.phases[phase_idx_].id; }
    Seconds phase_elapsed() const { return now_ - seg_start_; }
    bool is_green() const { return seg_green_; }
    const std::vector<PreemptionRequest>& preemption_queue() const { return queue_; }
    std::optional<int> serving_vehicle() const {
        return serving_ ? std::optional<int>(serving_->vehicle_id) : std::nullopt;
    }

    const std::vector<Interval>& intervals() const { return intervals_; }
    const std::vector<ServiceEvent>& service_log() const { return services_; }
    const std::vector<Seconds>& extension_log() const { return extensions_; }

    void tick(Seconds now, const std::set<int>& crossing_confirmations = {}) {
        if (now < now_)
            throw TimeRegressionError();
        advance_to(now);
        if (serving_ && crossing_confirmations.count(serving_->vehicle_id))
            release(now, /*crossed=*/true);
    }

    PreemptAction request_preemption(const PreemptionRequest& req, Seconds now) {
        if (req.eta < now)
            throw StaleRequestError();
        if (req.vehicle_class == VehicleClass::emergency_bus && !req.bus)
            throw ValidationError("bus request missing attributes");
        tick(now);
        if (serving_) {
            // while the committed vehicle is still waiting for its green
            // (truncating/switching), a strictly higher-priority request
            // takes over the commitment and the old one re-queues
            bool service_started = sub_ == Sub::extended || sub_ == Sub::serving;
            if (!service_started &&
                priority_score(req, weights_) > priority_score(*serving_, weights_)) {
                enqueue(*serving_);
                return begin_service(req, now);
            }
            enqueue(req);
            return PreemptAction::queue;
        }
        return begin_service(req, now);
    }

private:
    enum class Sub { normal, extended, truncating, switching, serving };

    const Phase& phase() const { return plan_.phases[phase_idx_]; }

    void open_interval() {
        intervals_.push_back({current_phase(), seg_green_,
                              seg_start_, std::numeric_limits<double>::infinity()});
    }

    void transition(Seconds t, std::size_t new_phase_idx, bool green) {
        intervals_.back().end = t;
        phase_idx_ = new_phase_idx;
        seg_green_ = green;
        seg_start_ = t;
        open_interval();
    }

    std::size_t phase_index_serving(int approach) const {
        for (std::size_t i = 0; i < plan_.phases.size(); ++i)
            if (plan_.phases[i].serves(approach))
                return i;
        throw UnknownEntityError("no phase serves approach " + std::to_string(approach));
    }

    void enqueue(const PreemptionRequest& req) {
        queue_.push_back(req);
        std::stable_sort(queue_.begin(), queue_.end(),
                         [this](const PreemptionRequest& a, const PreemptionRequest& b) {
                             double sa = priority_score(a, weights_);
                             double sb = priority_score(b, weights_);
                             if (sa != sb)
                                 return sa > sb;
                             if (a.eta != b.eta)
                                 return a.eta < b.eta;
                             if (a.requested_at != b.requested_at)
                                 return a.requested_at < b.requested_at;
                             return a.vehicle_id < b.vehicle_id;
                         });
    }

    PreemptAction begin_service(const PreemptionRequest& req, Seconds now) {
        serving_ = req;
        if (seg_green_ && phase().serves(req.approach)) {
            sub_ = Sub::extended;
            record_service(now);
            return PreemptAction::extend;
        }
        target_idx_ = phase_index_serving(req.approach);
        if (seg_green_) {
            sub_ = Sub::truncating;
            truncate_at_ = std::max(now, seg_start_ + plan_.min_green);
        } else {
            sub_ = Sub::switching;  // reuse the running intergreen as clearance
        }
        return PreemptAction::switch_phase;
    }

    void record_service(Seconds t) {
        ServiceEvent ev;
        ev.vehicle_id = serving_->vehicle_id;
        ev.score = priority_score(*serving_, weights_);
        ev.time = t;
        for (const auto& q : queue_)
            ev.pending_at_service.push_back({q.vehicle_id, priority_score(q, weights_)});
        services_.push_back(std::move(ev));
    }

    /// Ends the green hold for the vehicle being served.
    void release(Seconds t, bool crossed) {
        if (!serving_)
            return;
        if (sub_ == Sub::truncating || sub_ == Sub::switching) {
            // vehicle crossed before the switch completed; abandon the switch
            if (crossed) {
                serving_.reset();
                sub_ = Sub::normal;
                serve_next(t);
            }
            return;
        }
        Seconds planned_end = seg_start_ + phase().green;
        extensions_.push_back(std::max(0.0, t - planned_end));
        serving_.reset();
        if (t < planned_end) {
            sub_ = Sub::normal;  // crossed early, green simply continues
        } else {
            sub_ = Sub::normal;
            transition(t, phase_idx_, false);  // into this phase's intergreen
        }
        serve_next(t);
    }

    void serve_next(Seconds t) {
        if (queue_.empty() || serving_)
            return;
        PreemptionRequest next = queue_.front();
        queue_.erase(queue_.begin());
        begin_service(next, t);
    }

    void advance_to(Seconds t) {
        while (true) {
            Seconds seg_end;
            if (seg_green_) {
                switch (sub_) {
                    case Sub::normal:
                        seg_end = seg_start_ + phase().green;
                        break;
                    case Sub::extended:
                    case Sub::serving:
                        seg_end = seg_start_ + phase().green + max_extension_;
                        break;
                    case Sub::truncating:
                        seg_end = truncate_at_;
                        break;
                    default:
                        seg_end = seg_start_ + phase().green;
                        break;
                }
            } else {
                seg_end = seg_start_ + phase().intergreen;
            }
            if (seg_end > t)
                break;

            if (seg_green_) {
                if (sub_ == Sub::extended || sub_ == Sub::serving) {
                    // extension cap reached without a crossing confirmation
                    release(seg_end, /*crossed=*/false);
                    if (now_ < seg_end)
                        now_ = seg_end;
                    continue;
                }
                if (sub_ == Sub::truncating) {
                    sub_ = Sub::switching;
                    transition(seg_end, phase_idx_, false);
                    continue;
                }
                transition(seg_end, phase_idx_, false);
            } else {
                if (sub_ == Sub::switching) {
                    transition(seg_end, target_idx_, true);
                    sub_ = Sub::serving;
                    record_service(seg_end);
                } else {
                    transition(seg_end, (phase_idx_ + 1) % plan_.phases.size(), true);
                }
            }
        }
        now_ = t;
    }

    SignalPlan plan_;
    PriorityWeights weights_;
    Seconds max_extension_;
    Seconds now_;
    std::size_t phase_idx_ = 0;
    bool seg_green_ = true;
    Seconds seg_start_ = 0;
    Sub sub_ = Sub::normal;
    Seconds truncate_at_ = 0;
    std::size_t target_idx_ = 0;
    std::optional<PreemptionRequest> serving_;
    std::vector<PreemptionRequest> queue_;
    std::vector<Interval> intervals_;
    std::vector<ServiceEvent> services_;
    std::vector<Seconds> extensions_;
};

// --- interchange ----------------------------------------------------------

inline SignalPlan plan_from_json(const nlohmann::json& j) {
    SignalPlan plan;
    plan.offset = j.value("offset_s", 0.0);
    plan.min_green = j.value("min_green_s", 5.0);
    for (const auto& p : j.at("phases")) {
        Phase ph;
        ph.id = p.at("id").get<int>();
        ph.green = p.at("green_s").get<double>();
        ph.intergreen = p.at("intergreen_s").get<double>();
        for (const auto& a : p.at("approaches"))
            ph.approaches.push_back(a.get<int>());
        plan.phases.push_back(std::move(ph));
    }
    plan.validate();
    return plan;
}

inline std::string controller_trace_csv(const SignalController& c) {
    std::ostringstream out;
    out << "t_start,t_end,phase,state\n";
    for (const auto& iv : c.intervals()) {
        out << iv.start << ",";
        if (std::isinf(iv.end))
            out << "open";
        else
            out << iv.end;
        out << "," << iv.phase_id << "," << (iv.green ? "green" : "intergreen") << "\n";
    }
    return out.str();
}

}  // namespace evackit::signal
