#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drainguard/config_file.hpp"
#include "drainguard/energy_model.hpp"
#include "drainguard/error.hpp"

using namespace drainguard;

namespace {

/// Drains the battery one request at a time, with the receiver baseline
/// charged for each inter-request gap, and returns the time it ran out.
double stepwise_exhaustion_days(const DeploymentConfig& cfg, double remaining, std::uint32_t requests,
                                double window_s, double e_s) {
    const double gap_s = window_s / requests;
    const double rx_per_s = cfg.supply_v * cfg.rx_current_a;
    double t = 0.0;
    for (;;) {
        const double step = e_s + rx_per_s * gap_s;
        if (remaining <= step) {
            // Finish inside this gap at the average drain rate.
            return (t + remaining / step * gap_s) / kSecondsPerDay;
        }
        remaining -= step;
        t += gap_s;
    }
}

} // namespace

TEST_CASE("table deployment derived energies") {
    const auto cfg = rtls_deployment();
    // Frozen from an independent arbitrary-precision evaluation.
    CHECK(rx_baseline_energy(cfg) == doctest::Approx(2270.592).epsilon(1e-12));
    CHECK(usable_service_energy(cfg) == doctest::Approx(451.008).epsilon(1e-12));
    CHECK(threshold_depletion_rate(cfg) == doctest::Approx(0.0123563835616438356).epsilon(1e-12));
}

TEST_CASE("reference ranges for the RTLS deployment") {
    const auto cfg = rtls_deployment();
    CHECK(rx_baseline_energy(cfg) >= 2248.0);
    CHECK(rx_baseline_energy(cfg) <= 2293.0);
    CHECK(usable_service_energy(cfg) >= 447.0);
    CHECK(usable_service_energy(cfg) <= 457.0);
    CHECK(threshold_depletion_rate(cfg) * 1e3 >= 12.26);
    CHECK(threshold_depletion_rate(cfg) * 1e3 <= 12.51);
}

TEST_CASE("zero receive current leaves 90 percent for services") {
    auto cfg = rtls_deployment();
    cfg.rx_current_a = 0.0;
    CHECK(rx_baseline_energy(cfg) == 0.0);
    CHECK(usable_service_energy(cfg) == doctest::Approx(0.9 * 3024.0));
}

TEST_CASE("receive baseline larger than the battery share is rejected") {
    auto cfg = rtls_deployment();
    cfg.rx_current_a = 1e-3;
    CHECK_THROWS_AS(usable_service_energy(cfg), Error);
    try {
        usable_service_energy(cfg);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonPositiveBudget);
    }
}

TEST_CASE("invalid deployments") {
    auto base = rtls_deployment();
    auto bad = base;
    bad.else_fraction = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = base;
    bad.lifetime_days = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = base;
    bad.requesters = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = base;
    bad.services.clear();
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_THROWS_AS(base.service_energy(ServiceId{9}), Error);
}

TEST_CASE("time to exhaustion closed form") {
    const auto cfg = rtls_deployment();
    const double e_s = 0.045;
    // Frozen: E_bat / (m E_s / w + U I) in days.
    CHECK(time_to_exhaustion(cfg, 3024.0, 10, Millis{600'000}, e_s) == doctest::Approx(42.5790754257907).epsilon(1e-10));
    CHECK(time_to_exhaustion(cfg, 3024.0, 1000, Millis{600'000}, e_s) ==
          doctest::Approx(0.466219096334186).epsilon(1e-10));
    CHECK_THROWS_AS(time_to_exhaustion(cfg, 0.0, 10, Millis{600'000}, e_s), Error);
    CHECK_THROWS_AS(time_to_exhaustion(cfg, 1.0, 0, Millis{600'000}, e_s), Error);
}

TEST_CASE("one chained burst of exactly the remaining energy") {
    auto cfg = rtls_deployment();
    cfg.rx_current_a = 0.0;
    const double days = time_to_exhaustion(cfg, 0.45, 10, Millis{600'000}, 0.045);
    CHECK(days * kSecondsPerDay == doctest::Approx(600.0));
    CHECK(stepwise_exhaustion_days(cfg, 0.45, 10, 600.0, 0.045) * kSecondsPerDay == doctest::Approx(600.0));
}

TEST_CASE("time to exhaustion agrees with a request-by-request drain") {
    const auto cfg = rtls_deployment();
    for (const std::uint32_t m : {1u, 10u, 100u, 1000u}) {
        for (const double remaining : {3024.0, 1000.0, 17.5}) {
            const double closed = time_to_exhaustion(cfg, remaining, m, Millis{600'000}, 0.045);
            const double stepped = stepwise_exhaustion_days(cfg, remaining, m, 600.0, 0.045);
            CHECK(closed == doctest::Approx(stepped).epsilon(1e-9));
        }
    }
}

TEST_CASE("exhaustion time falls as bursts grow") {
    const auto cfg = rtls_deployment();
    double last = 1e300;
    for (std::uint32_t m = 1; m <= 2000; m *= 2) {
        const double t = time_to_exhaustion(cfg, 3024.0, m, Millis{600'000}, 0.045);
        CHECK(t < last);
        last = t;
    }
}

TEST_CASE("remaining energy at a day") {
    const auto cfg = rtls_deployment();
    CHECK(remaining_at_day(cfg, 0) == 3024.0);
    CHECK(remaining_at_day(cfg, 365) == doctest::Approx(0.0));
    CHECK(remaining_at_day(cfg, 182.5) == doctest::Approx(1512.0));
}

TEST_CASE("energy ledger") {
    EnergyLedger ledger(1.0);
    ledger.drain(0.4);
    CHECK(ledger.remaining() == doctest::Approx(0.6));
    CHECK_FALSE(ledger.exhausted());
    ledger.drain(0.6);
    CHECK(ledger.exhausted());
    ledger.drain(0.5);
    CHECK(ledger.drained() == doctest::Approx(1.5));
    CHECK_THROWS_AS(ledger.drain(-1.0), Error);

    const auto copy = ledger_drain(EnergyLedger(2.0), 0.25);
    CHECK(copy.drained() == 0.25);
}

TEST_CASE("deployment from config keys") {
    const auto kv = KeyValueConfig::parse(R"(
# coin cell
battery_j = 1000
else_fraction = 0.2
supply_v = 3
rx_current_a = 0
lifetime_days = 100
requesters = 10
service.1.energy_j = 0.5
service.4.energy_j = 2
)");
    const auto cfg = deployment_from(kv);
    CHECK(usable_service_energy(cfg) == doctest::Approx(800.0));
    CHECK(threshold_depletion_rate(cfg) == doctest::Approx(0.8));
    CHECK(cfg.service_energy(ServiceId{4}) == 2.0);
    CHECK(cfg.default_service() == ServiceId{1});
}

TEST_CASE("config parser errors") {
    CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), Error);
    CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign\n"), Error);
    const auto kv = KeyValueConfig::parse("x = abc\n");
    CHECK_THROWS_AS(kv.get_double("x"), Error);
    CHECK_THROWS_AS(kv.get_double("missing"), Error);
}
