#include "drainguard/scenarios.hpp"

#include "drainguard/config_file.hpp"
#include "drainguard/error.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

namespace drainguard {

namespace {

std::vector<RequesterId> parse_id_list(const std::string& text) {
    std::vector<RequesterId> ids;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        if (first == std::string::npos) {
            continue;
        }
        try {
            std::size_t used = 0;
            const auto value = std::stoul(item.substr(first), &used);
            if (item.find_first_not_of(" \t", first + used) != std::string::npos) {
                throw std::invalid_argument(item);
            }
            ids.push_back(RequesterId{static_cast<std::uint32_t>(value)});
        } catch (const std::logic_error&) {
            throw Error(Errc::ConfigError, "bad requester id '" + item + "'");
        }
    }
    return ids;
}

std::string format(const char* fmt, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, value);
    return buf;
}

} // namespace

ScenarioSpec scenario_from(const KeyValueConfig& kv) {
    ScenarioSpec spec;
    spec.sim = sim_config_from(kv);
    spec.name = kv.get_string("name", spec.name);
    const auto seed = kv.get_int("seed", 1);
    if (seed < 0) {
        throw Error(Errc::ConfigError, "seed must be non-negative");
    }
    spec.seed = static_cast<std::uint64_t>(seed);
    spec.horizon_days = kv.get_double("horizon_days", spec.sim.deployment.lifetime_days);
    if (!(spec.horizon_days > 0.0) || spec.horizon_days > spec.sim.deployment.lifetime_days) {
        throw Error(Errc::ConfigError, "horizon_days must be in (0, lifetime_days]");
    }
    spec.benign.probability_per_day = kv.get_double(
        "benign.probability_per_day",
        static_cast<double>(spec.sim.deployment.requesters) / spec.sim.deployment.lifetime_days);
    spec.benign_until_day = kv.get_double("benign.until_day", spec.horizon_days);
    spec.sampled = parse_id_list(kv.get_string("sample", ""));

    const auto kind = kv.get_string("attack", "none");
    const auto start_day = kv.get_double("attack.start_day", 0.0);
    if (kind == "bursts") {
        ChainedBursts b;
        b.requests = static_cast<std::uint32_t>(kv.get_int("attack.requests", spec.sim.burst.requests));
        b.window = from_seconds(kv.get_double("attack.window_s", to_seconds(spec.sim.burst.window)));
        b.start_day = start_day;
        b.requester = RequesterId{static_cast<std::uint32_t>(kv.get_int("attack.requester", 0))};
        spec.attack = b;
    } else if (kind == "flood") {
        CompromisedFlood f;
        f.requesters = parse_id_list(kv.get_string("attack.requesters"));
        f.requests_per_day = kv.get_double("attack.rate_per_day");
        f.start_day = start_day;
        spec.attack = f;
    } else if (kind == "garbage") {
        spec.attack = GarbageInjection{kv.get_double("attack.per_second", 1.0), start_day};
    } else if (kind != "none") {
        throw Error(Errc::ConfigError, "unknown attack '" + kind + "'");
    }

    if (const auto unread = kv.unread_keys(); !unread.empty()) {
        throw Error(Errc::ConfigError, "unknown key '" + unread.front() + "'");
    }
    return spec;
}

ScenarioSpec load_scenario(const std::string& path) { return scenario_from(KeyValueConfig::load(path)); }

ScenarioSpec detection_scenario(const DeploymentConfig& deployment) {
    ScenarioSpec spec;
    spec.name = "detect";
    spec.sim.deployment = deployment;
    spec.sim.fidelity = Fidelity::PreAuthenticated;
    spec.horizon_days = deployment.lifetime_days;
    spec.benign.probability_per_day = static_cast<double>(deployment.requesters) / deployment.lifetime_days;
    spec.benign_until_day = spec.horizon_days;
    ChainedBursts attack;
    attack.requests = spec.sim.burst.requests;
    attack.window = spec.sim.burst.window;
    attack.start_day = 200.0;
    attack.requester = RequesterId{0};
    spec.attack = attack;
    spec.sampled = {RequesterId{0}};
    if (deployment.requesters > 1) {
        spec.sampled.push_back(RequesterId{1});
    }
    return spec;
}

SimulationReport run_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    Simulation sim(spec.sim, seed);
    if (spec.benign.probability_per_day > 0.0) {
        sim.spawn_benign_traffic(spec.benign, std::min(spec.benign_until_day, spec.horizon_days));
    }
    if (spec.attack) {
        sim.spawn_attack(*spec.attack, spec.horizon_days);
    }
    sim.sample_daily(spec.sampled, spec.horizon_days);
    return sim.run_until(from_days(spec.horizon_days));
}

DetectionMetrics detection_metrics(const SimulationReport& report, const ScenarioSpec& spec, double transient_days) {
    const auto* bursts = spec.attack ? std::get_if<ChainedBursts>(&*spec.attack) : nullptr;
    if (bursts == nullptr) {
        throw Error(Errc::ConfigError, "detection metrics need a chained-burst attack");
    }
    DetectionMetrics m;
    const double attack_start = bursts->start_day;
    const double settled = attack_start + transient_days;
    const double e_s = spec.sim.deployment.service_energy(spec.sim.burst.service);
    std::map<RequesterId, std::uint64_t> served_by;
    for (const auto& row : report.rows) {
        served_by[row.requester] += row.served;
        if (row.day < attack_start) {
            m.benign_requests += row.requested;
            m.benign_dropped += row.dropped;
        }
        if (row.requester != bursts->requester) {
            continue;
        }
        if (row.day >= attack_start) {
            m.attack_phase_served += row.served;
        }
        if (row.day >= settled) {
            m.attack_served += row.served;
            m.attack_dropped += row.dropped;
        }
    }
    m.false_drop_rate =
        m.benign_requests == 0 ? 0.0 : static_cast<double>(m.benign_dropped) / static_cast<double>(m.benign_requests);
    m.attack_days = std::max(0.0, spec.horizon_days - settled);
    m.served_per_day = m.attack_days > 0.0 ? static_cast<double>(m.attack_served) / m.attack_days : 0.0;
    for (const auto& [id, served] : served_by) {
        m.max_requester_energy_j = std::max(m.max_requester_energy_j, static_cast<double>(served) * e_s);
    }
    const auto limiter = spec.sim.limiter();
    m.requester_energy_bound_j =
        limiter.threshold(spec.sim.algorithm) + e_s + limiter.lambda_th_j_per_day * spec.horizon_days;
    return m;
}

DetectionMetrics average_metrics(const std::vector<DetectionMetrics>& runs) {
    DetectionMetrics avg;
    if (runs.empty()) {
        return avg;
    }
    const auto n = static_cast<double>(runs.size());
    double rate = 0.0;
    double per_day = 0.0;
    for (const auto& r : runs) {
        avg.benign_requests += r.benign_requests;
        avg.benign_dropped += r.benign_dropped;
        avg.attack_served += r.attack_served;
        avg.attack_dropped += r.attack_dropped;
        avg.attack_phase_served += r.attack_phase_served;
        rate += r.false_drop_rate;
        per_day += r.served_per_day;
        avg.attack_days = r.attack_days;
        avg.max_requester_energy_j = std::max(avg.max_requester_energy_j, r.max_requester_energy_j);
        avg.requester_energy_bound_j = r.requester_energy_bound_j;
    }
    avg.false_drop_rate = rate / n;
    avg.served_per_day = per_day / n;
    return avg;
}

ParameterTable parametrize(const SimConfig& cfg) {
    const auto limiter = cfg.limiter();
    ParameterTable t;
    t.rx_energy_j = rx_baseline_energy(cfg.deployment);
    t.usable_energy_j = usable_service_energy(cfg.deployment);
    t.lambda_th_j_per_day = limiter.lambda_th_j_per_day;
    t.lb_drain_per_tick_j = limiter.lb.drain_per_tick_j;
    t.lb_threshold_j = limiter.lb.threshold_j;
    t.ewma_decay = limiter.ewma.decay;
    t.ewma_initial_j = limiter.ewma.initial_j;
    t.ewma_threshold_j = limiter.ewma.threshold_j;
    return t;
}

void write_parameter_table(std::ostream& out, const ParameterTable& t) {
    out << "parameter,value,unit\n"
        << "E_rx," << format("%.3f", t.rx_energy_j) << ",J\n"
        << "E_tot," << format("%.3f", t.usable_energy_j) << ",J\n"
        << "lambda_th," << format("%.4f", t.lambda_th_j_per_day * 1e3) << ",mJ/day\n"
        << "D," << format("%.6e", t.lb_drain_per_tick_j) << ",J/tick\n"
        << "K_lb," << format("%.6f", t.lb_threshold_j) << ",J\n"
        << "d," << format("%.9f", t.ewma_decay) << ",\n"
        << "e0," << format("%.6e", t.ewma_initial_j) << ",J\n"
        << "K_ewma," << format("%.6e", t.ewma_threshold_j) << ",J\n";
}

void write_severity_csv(std::ostream& out, const std::vector<SeverityPoint>& points) {
    out << "burst_requests,window_s,start_day,days_to_exhaustion,exhaustion_day\n";
    for (const auto& p : points) {
        out << p.burst_requests << ',' << format("%g", to_seconds(p.window)) << ',' << format("%g", p.start_day) << ','
            << format("%.6f", p.days_to_exhaustion) << ',' << format("%.6f", p.exhaustion_day) << '\n';
    }
}

std::vector<LatencyRow> latency_table(const SimConfig& cfg) {
    std::vector<LatencyRow> rows;
    for (const auto p : {Protocol::Proxy, Protocol::TicketIssuer, Protocol::Asymmetric}) {
        SimConfig c = cfg;
        c.protocol = p;
        const auto bytes = c.provider_request_bytes();
        rows.push_back(LatencyRow{p, bytes, to_seconds(transmit_latency(cfg.network.constrained, bytes))});
    }
    return rows;
}

void write_latency_table(std::ostream& out, const std::vector<LatencyRow>& rows) {
    out << "protocol,request_bytes,transfer_s\n";
    for (const auto& r : rows) {
        out << to_string(r.protocol) << ',' << r.request_bytes << ',' << format("%.3f", r.transfer_s) << '\n';
    }
}

InjectionResult injection_drain(const SimConfig& cfg, Protocol protocol, double per_second, double days) {
    if (per_second < 0.0 || days < 0.0) {
        throw Error(Errc::ConfigError, "injection rate and duration must be non-negative");
    }
    InjectionResult r;
    r.protocol = protocol;
    r.per_second = per_second;
    r.days = days;
    const double messages = per_second * days * kSecondsPerDay;
    r.messages = static_cast<std::uint64_t>(messages);
    r.drained_j = messages * cfg.costs.for_protocol(protocol);
    r.battery_percent = 100.0 * r.drained_j / cfg.deployment.battery_j;
    return r;
}

InjectionResult simulate_injection(const SimConfig& cfg, Protocol protocol, double per_second, double days,
                                   std::uint64_t seed) {
    InjectionResult r;
    r.protocol = protocol;
    r.per_second = per_second;
    r.days = days;
    if (per_second > 0.0 && days > 0.0) {
        SimConfig c = cfg;
        c.protocol = protocol;
        c.attacker_observes = false;
        Simulation sim(std::move(c), seed);
        sim.spawn_attack(GarbageInjection{per_second, 0.0}, days);
        // Let the last message cross the constrained link.
        const auto report = sim.run_until(from_days(days) + Millis{60'000});
        r.drained_j = report.drained_j;
        r.messages = report.provider_handled;
    }
    r.battery_percent = 100.0 * r.drained_j / cfg.deployment.battery_j;
    return r;
}

void write_injection_table(std::ostream& out, const std::vector<InjectionResult>& rows) {
    out << "protocol,per_second,days,messages,drained_j,battery_percent\n";
    for (const auto& r : rows) {
        out << to_string(r.protocol) << ',' << format("%g", r.per_second) << ',' << format("%g", r.days) << ','
            << r.messages << ',' << format("%.4f", r.drained_j) << ',' << format("%.4f", r.battery_percent) << '\n';
    }
}

} // namespace drainguard
