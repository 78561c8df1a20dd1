#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drainguard/config_file.hpp"
#include "drainguard/error.hpp"
#include "drainguard/scenarios.hpp"
#include "drainguard/sweep.hpp"

#include <sstream>

using namespace drainguard;

namespace {

std::string text_of(const SimulationReport& r) {
    std::ostringstream out;
    r.write_csv(out);
    r.write_summary(out);
    return out.str();
}

ScenarioSpec short_detection() {
    auto spec = detection_scenario(rtls_deployment());
    spec.horizon_days = 30;
    std::get<ChainedBursts>(*spec.attack).start_day = 20;
    return spec;
}

} // namespace

TEST_CASE("parallel seed sweep matches the serial reference") {
    const auto spec = short_detection();
    const SeedKernel kernel = [&spec](std::uint64_t seed) { return run_scenario(spec, seed); };
    const auto seeds = seed_range(11, 4);
    const auto serial = run_seeds_serial(kernel, seeds);
    const auto parallel = run_seeds(kernel, seeds);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(text_of(serial[i]) == text_of(parallel[i]));
    }
    CHECK(text_of(serial[0]) != text_of(serial[1]));
    CHECK(parallel_threads() >= 1);
}

TEST_CASE("parallel sweep rethrows a failing run") {
    const SeedKernel kernel = [](std::uint64_t seed) -> SimulationReport {
        if (seed == 3) {
            throw Error(Errc::ConfigError, "boom");
        }
        return {};
    };
    CHECK_THROWS_AS(run_seeds(kernel, seed_range(1, 5)), Error);
}

TEST_CASE("parallel severity grid matches the serial reference") {
    SeverityGrid grid;
    grid.burst_requests = {1, 10, 100, 1000};
    grid.windows = {Millis{60'000}, Millis{600'000}};
    grid.start_days = {0, 100, 200, 300};
    const auto cfg = rtls_deployment();
    const auto serial = severity_sweep_serial(cfg, grid);
    const auto parallel = severity_sweep(cfg, grid);
    REQUIRE(serial.size() == 32);
    REQUIRE(parallel.size() == 32);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].days_to_exhaustion == parallel[i].days_to_exhaustion);
        CHECK(serial[i].burst_requests == parallel[i].burst_requests);
        CHECK(serial[i].window == parallel[i].window);
        CHECK(serial[i].start_day == parallel[i].start_day);
    }
    // Grid ordering: (burst, window, start day).
    CHECK(serial[0].burst_requests == 1);
    CHECK(serial[1].start_day == 100);
    CHECK(serial[4].window == Millis{600'000});
    CHECK(serial[8].burst_requests == 10);
}

TEST_CASE("severity points") {
    SeverityGrid grid;
    grid.burst_requests = {10, 1000};
    grid.windows = {Millis{600'000}};
    grid.start_days = {0};
    const auto points = severity_sweep(rtls_deployment(), grid);
    CHECK(points[0].days_to_exhaustion == doctest::Approx(42.5790754257907));
    CHECK(points[1].days_to_exhaustion < 1.0);
    std::ostringstream out;
    write_severity_csv(out, points);
    CHECK(out.str() == "burst_requests,window_s,start_day,days_to_exhaustion,exhaustion_day\n"
                       "10,600,0,42.579075,42.579075\n"
                       "1000,600,0,0.466219,0.466219\n");
}

TEST_CASE("parameter table") {
    SimConfig cfg;
    cfg.deployment = rtls_deployment();
    const auto t = parametrize(cfg);
    CHECK(t.rx_energy_j == doctest::Approx(2270.592));
    CHECK(t.lb_threshold_j == doctest::Approx(0.404922772602740));
    std::ostringstream out;
    write_parameter_table(out, t);
    CHECK(out.str().find("E_tot,451.008,J\n") != std::string::npos);
    CHECK(out.str().find("lambda_th,12.3564,mJ/day\n") != std::string::npos);

    cfg.deployment.rx_current_a = 0.0;
    CHECK(parametrize(cfg).usable_energy_j == doctest::Approx(0.9 * 3024));
}

TEST_CASE("latency table") {
    SimConfig cfg;
    cfg.deployment = rtls_deployment();
    const auto rows = latency_table(cfg);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].request_bytes == 9);
    CHECK(rows[0].transfer_s == doctest::Approx(0.45));
    CHECK(rows[1].request_bytes == 15);
    CHECK(rows[1].transfer_s == doctest::Approx(0.75));
    CHECK(rows[2].request_bytes == 532);
    CHECK(rows[2].transfer_s == doctest::Approx(26.6));
}

TEST_CASE("injection drain") {
    SimConfig cfg;
    cfg.deployment = rtls_deployment();
    const auto p1 = injection_drain(cfg, Protocol::Proxy, 1.0, 365);
    const auto p2 = injection_drain(cfg, Protocol::TicketIssuer, 1.0, 365);
    CHECK(p1.drained_j == doctest::Approx(38.15856));
    CHECK(p2.drained_j == doctest::Approx(73.79424));
    CHECK(p1.battery_percent == doctest::Approx(100.0 * 38.15856 / 3024));
    CHECK(injection_drain(cfg, Protocol::Proxy, 0.0, 365).drained_j == 0.0);
    CHECK_THROWS_AS(injection_drain(cfg, Protocol::Proxy, -1.0, 365), Error);

    const auto simulated = simulate_injection(cfg, Protocol::TicketIssuer, 1.0, 2.0, 1);
    const auto closed = injection_drain(cfg, Protocol::TicketIssuer, 1.0, 2.0);
    CHECK(simulated.messages == closed.messages);
    CHECK(simulated.drained_j == doctest::Approx(closed.drained_j).epsilon(1e-9));
    CHECK(simulate_injection(cfg, Protocol::Proxy, 0.0, 2.0, 1).drained_j == 0.0);
}

TEST_CASE("scenario files") {
    const auto kv = KeyValueConfig::parse(R"(
name = x
seed = 4
horizon_days = 50
battery_j = 3024
else_fraction = 0.1
supply_v = 3
rx_current_a = 24e-6
lifetime_days = 365
requesters = 10
service.1.energy_j = 0.045
attack = flood
attack.requesters = 1, 2,3
attack.rate_per_day = 5
attack.start_day = 10
sample = 1
)");
    const auto spec = scenario_from(kv);
    CHECK(spec.name == "x");
    CHECK(spec.seed == 4);
    CHECK(spec.horizon_days == 50);
    const auto& flood = std::get<CompromisedFlood>(*spec.attack);
    CHECK(flood.requesters == std::vector<RequesterId>{RequesterId{1}, RequesterId{2}, RequesterId{3}});
    CHECK(spec.benign.probability_per_day == doctest::Approx(10.0 / 365));

    auto typo = kv;
    typo.set("atack.rate_per_day", "5");
    CHECK_THROWS_AS(scenario_from(typo), Error);
    auto bad_attack = kv;
    bad_attack.set("attack", "nuke");
    CHECK_THROWS_AS(scenario_from(bad_attack), Error);
    auto bad_ids = kv;
    bad_ids.set("attack.requesters", "1,x");
    CHECK_THROWS_AS(scenario_from(bad_ids), Error);
    auto long_horizon = kv;
    long_horizon.set("horizon_days", "400");
    CHECK_THROWS_AS(scenario_from(long_horizon), Error);
}

TEST_CASE("shipped configs load") {
    const std::string dir = DRAINGUARD_CONFIG_DIR;
    CHECK_NOTHROW(load_scenario(dir + "/rtls_hospital.conf"));
    const auto detect = load_scenario(dir + "/detect.conf");
    CHECK(detect.sim.fidelity == Fidelity::PreAuthenticated);
    CHECK(std::get<ChainedBursts>(*detect.attack).start_day == 200);
    const auto garbage = load_scenario(dir + "/garbage_p2.conf");
    CHECK(std::holds_alternative<GarbageInjection>(*garbage.attack));
}

TEST_CASE("detection metrics on a short run") {
    const auto spec = short_detection();
    const auto report = run_scenario(spec, 2);
    const auto m = detection_metrics(report, spec, 2.0);
    CHECK(m.benign_requests > 0);
    CHECK(m.attack_days == doctest::Approx(8.0));
    CHECK(m.attack_dropped > 1000);
    CHECK(m.served_per_day < 1.0);
    CHECK(m.requester_energy_bound_j > 0.4);

    auto no_attack = spec;
    no_attack.attack.reset();
    CHECK_THROWS_AS(detection_metrics(report, no_attack), Error);
}
