#include "drainguard/config_file.hpp"
#include "drainguard/crypto.hpp"
#include "drainguard/error.hpp"
#include "drainguard/scenarios.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace drainguard;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;

struct Common {
    std::string config;
    std::string protocol;
    std::string limiter;
    std::optional<std::uint64_t> seed;
    std::uint32_t seeds = 1;
    std::string out;
    bool check = false;
};

ScenarioSpec base_spec(const Common& c) {
    ScenarioSpec spec;
    if (!c.config.empty()) {
        spec = load_scenario(c.config);
    } else {
        spec.sim.deployment = rtls_deployment();
    }
    if (!c.protocol.empty()) {
        spec.sim.protocol = parse_protocol(c.protocol);
    }
    if (!c.limiter.empty()) {
        spec.sim.algorithm = parse_algorithm(c.limiter);
    }
    if (c.seed) {
        spec.seed = *c.seed;
    }
    return spec;
}

/// Writes to `<out>/<name>` when an output directory is set, else stdout.
void emit(const Common& c, const std::string& name, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    fs::create_directories(c.out);
    std::ofstream file(fs::path(c.out) / name, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw Error(Errc::ConfigError, "cannot write " + (fs::path(c.out) / name).string());
    }
    file << text;
    std::cerr << "wrote " << (fs::path(c.out) / name).string() << '\n';
}

bool report_check(const std::string& what, bool ok) {
    std::cerr << (ok ? "ok    " : "FAIL  ") << what << '\n';
    return ok;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw Error(Errc::ConfigError, "bad number '" + item + "'");
        }
    }
    return values;
}

int cmd_parametrize(const Common& c) {
    const auto spec = base_spec(c);
    const auto t = parametrize(spec.sim);
    std::ostringstream text;
    write_parameter_table(text, t);
    emit(c, "parameters.csv", text.str());
    if (!c.check) {
        return kExitOk;
    }
    bool ok = report_check("E_rx in [2248, 2293] J", t.rx_energy_j >= 2248 && t.rx_energy_j <= 2293);
    ok &= report_check("E_tot in [447, 457] J", t.usable_energy_j >= 447 && t.usable_energy_j <= 457);
    ok &= report_check("lambda_th in [12.26, 12.51] mJ/day",
                       t.lambda_th_j_per_day >= 12.26e-3 && t.lambda_th_j_per_day <= 12.51e-3);
    ok &= report_check("K_lb in [0.4009, 0.4090] J", t.lb_threshold_j >= 0.4009 && t.lb_threshold_j <= 0.4090);
    ok &= report_check("K_ewma within 5% of 9.332e-6 J", std::abs(t.ewma_threshold_j / 9.332e-6 - 1.0) <= 0.05);
    return ok ? kExitOk : kExitCheck;
}

int cmd_severity(const Common& c, const std::string& bursts, const std::string& windows_s,
                 const std::string& start_days) {
    const auto spec = base_spec(c);
    SeverityGrid grid;
    for (const auto b : parse_doubles(bursts)) {
        if (b < 1) {
            throw Error(Errc::ConfigError, "burst sizes must be >= 1");
        }
        grid.burst_requests.push_back(static_cast<std::uint32_t>(b));
    }
    for (const auto w : parse_doubles(windows_s)) {
        grid.windows.push_back(from_seconds(w));
    }
    grid.start_days = parse_doubles(start_days);
    const auto points = severity_sweep(spec.sim.deployment, grid);
    std::ostringstream text;
    write_severity_csv(text, points);
    emit(c, "severity.csv", text.str());
    if (!c.check) {
        return kExitOk;
    }
    const auto& d = spec.sim.deployment;
    const auto full = d.battery_j;
    const double e_s = d.service_energy(d.default_service());
    const double heavy = time_to_exhaustion(d, full, 1000, Millis{600'000}, e_s);
    const double light = time_to_exhaustion(d, full, 10, Millis{600'000}, e_s);
    bool ok = report_check("1000 req / 10 min exhausts a full battery in < 1 day", heavy < 1.0);
    ok &= report_check("10 req / 10 min exhausts a full battery in 45 days +/- 20%",
                       light >= 36.0 && light <= 54.0);
    bool monotone = true;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& a = points[i - 1];
        const auto& b = points[i];
        if (a.window == b.window && a.start_day == b.start_day && b.burst_requests > a.burst_requests &&
            b.days_to_exhaustion > a.days_to_exhaustion) {
            monotone = false;
        }
    }
    ok &= report_check("exhaustion time falls as bursts grow", monotone);
    return ok ? kExitOk : kExitCheck;
}

int cmd_detect(const Common& c, bool full_protocol) {
    ScenarioSpec spec = c.config.empty() ? detection_scenario(rtls_deployment()) : base_spec(c);
    if (!c.protocol.empty()) {
        spec.sim.protocol = parse_protocol(c.protocol);
    }
    if (!c.limiter.empty()) {
        spec.sim.algorithm = parse_algorithm(c.limiter);
    }
    if (c.seed) {
        spec.seed = *c.seed;
    }
    if (full_protocol) {
        spec.sim.fidelity = Fidelity::Protocol;
    }
    const auto seeds = seed_range(spec.seed, c.seeds);
    const auto reports = run_seeds([&spec](std::uint64_t s) { return run_scenario(spec, s); }, seeds);

    std::vector<DetectionMetrics> metrics;
    const std::string tag = std::string(to_string(spec.sim.algorithm));
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto suffix = tag + "_seed" + std::to_string(seeds[i]);
        std::ostringstream csv;
        reports[i].write_csv(csv);
        std::ostringstream summary;
        reports[i].write_summary(summary);
        if (!c.out.empty()) {
            emit(c, "detect_" + suffix + ".csv", csv.str());
            emit(c, "detect_" + suffix + "_summary.json", summary.str());
        }
        metrics.push_back(detection_metrics(reports[i], spec));
    }
    const auto avg = average_metrics(metrics);
    std::printf("limiter=%s seeds=%u benign_requests=%llu benign_dropped=%llu false_drop_rate=%.4f%% "
                "attack_served_per_day=%.4f max_requester_energy_j=%.4f bound_j=%.4f\n",
                tag.c_str(), c.seeds, static_cast<unsigned long long>(avg.benign_requests),
                static_cast<unsigned long long>(avg.benign_dropped), 100.0 * avg.false_drop_rate, avg.served_per_day,
                avg.max_requester_energy_j, avg.requester_energy_bound_j);
    if (c.out.empty()) {
        reports.front().write_csv(std::cout);
    }
    if (!c.check) {
        return kExitOk;
    }
    bool ok = report_check("benign false-drop rate < 1%", avg.false_drop_rate < 0.01);
    ok &= report_check("attack-phase served rate in [0.20, 0.35] per day",
                       avg.served_per_day >= 0.20 && avg.served_per_day <= 0.35);
    ok &= report_check("served energy per requester within K + E_s + lambda_th * T",
                       avg.max_requester_energy_j <= avg.requester_energy_bound_j);
    return ok ? kExitOk : kExitCheck;
}

int cmd_latency(const Common& c) {
    const auto spec = base_spec(c);
    const auto rows = latency_table(spec.sim);
    std::ostringstream text;
    write_latency_table(text, rows);
    emit(c, "latency.csv", text.str());
    if (!c.check) {
        return kExitOk;
    }
    bool ok = true;
    for (const auto& r : rows) {
        if (r.protocol == Protocol::Asymmetric) {
            ok &= report_check("asymmetric request transfer in [25, 28] s", r.transfer_s >= 25 && r.transfer_s <= 28);
        } else if (r.protocol == Protocol::Proxy) {
            ok &= report_check("proxy request transfer <= 1 s", r.transfer_s <= 1.0);
        }
    }
    return ok ? kExitOk : kExitCheck;
}

int cmd_inject(const Common& c, double rate, double days, bool simulate) {
    const auto spec = base_spec(c);
    std::vector<InjectionResult> rows;
    const auto protocols = c.protocol.empty() ? std::vector<Protocol>{Protocol::Proxy, Protocol::TicketIssuer}
                                              : std::vector<Protocol>{spec.sim.protocol};
    for (const auto p : protocols) {
        rows.push_back(simulate ? simulate_injection(spec.sim, p, rate, days, spec.seed)
                                : injection_drain(spec.sim, p, rate, days));
    }
    std::ostringstream text;
    write_injection_table(text, rows);
    emit(c, "injection.csv", text.str());
    if (!c.check) {
        return kExitOk;
    }
    bool ok = true;
    for (const auto& r : rows) {
        if (r.protocol == Protocol::Proxy) {
            ok &= report_check("proxy drain 38.2 J +/- 1%", std::abs(r.drained_j / 38.2 - 1.0) <= 0.01);
        } else if (r.protocol == Protocol::TicketIssuer) {
            ok &= report_check("ticket drain 73.8 J +/- 1%", std::abs(r.drained_j / 73.8 - 1.0) <= 0.01);
        }
    }
    return ok ? kExitOk : kExitCheck;
}

int cmd_simulate(const Common& c) {
    if (c.config.empty()) {
        throw Error(Errc::ConfigError, "simulate needs --config");
    }
    const auto spec = base_spec(c);
    const auto seeds = seed_range(spec.seed, c.seeds);
    const auto reports = run_seeds([&spec](std::uint64_t s) { return run_scenario(spec, s); }, seeds);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::ostringstream csv;
        reports[i].write_csv(csv);
        std::ostringstream summary;
        reports[i].write_summary(summary);
        const auto stem = spec.name + "_seed" + std::to_string(seeds[i]);
        if (c.out.empty()) {
            std::cout << summary.str();
        } else {
            emit(c, stem + ".csv", csv.str());
            emit(c, stem + "_summary.json", summary.str());
        }
    }
    return kExitOk;
}

void write_secret(const fs::path& path, const std::string& hex) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw Error(Errc::ConfigError, "cannot write " + path.string());
    }
    file << hex << '\n';
    file.close();
    fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
}

int cmd_keygen(const Common& c, std::uint32_t requesters) {
    if (c.out.empty()) {
        throw Error(Errc::ConfigError, "keygen needs --out");
    }
    fs::create_directories(c.out);
    const fs::path dir(c.out);
    auto draw = [&c](std::span<std::uint8_t> out) {
        static std::optional<Rng> rng;
        if (c.seed && !rng) {
            rng.emplace(*c.seed, 7);
        }
        rng ? rng->fill(out) : secure_random(out);
    };
    Seed ca_seed;
    draw(ca_seed);
    const auto ca_key = SigningKey::from_seed(ca_seed);
    CertificateAuthority ca(ca_key);
    write_secret(dir / "ca.key", to_hex(ca_seed));
    std::ofstream(dir / "ca.pub") << to_hex(ca.public_key().raw()) << '\n';

    Block k_pb;
    draw(k_pb);
    write_secret(dir / "provider_backend.key", to_hex(k_pb));

    auto enroll = [&](std::uint32_t subject, const std::string& stem) {
        Seed seed;
        draw(seed);
        const auto id = ca.enroll(subject, seed);
        write_secret(dir / (stem + ".key"), to_hex(seed));
        std::ofstream(dir / (stem + ".cert")) << to_hex(id.cert.encode()) << '\n';
    };
    enroll(kBackendSubject, "backend");
    for (std::uint32_t i = 0; i < requesters; ++i) {
        enroll(i, "requester_" + std::to_string(i));
    }
    std::cerr << "wrote keys for the CA, the backend and " << requesters << " requesters to " << c.out << '\n';
    return kExitOk;
}

void add_common(CLI::App* sub, Common& c, bool with_seeds) {
    sub->add_option("--config", c.config, "key = value config file");
    sub->add_option("--protocol", c.protocol, "p1, p2 or asym")->check(CLI::IsMember({"p1", "p2", "asym"}));
    sub->add_option("--limiter", c.limiter, "lb or ewma")->check(CLI::IsMember({"lb", "ewma"}));
    sub->add_option("--seed", c.seed, "RNG seed");
    if (with_seeds) {
        sub->add_option("--seeds", c.seeds, "number of consecutive seeds to run")->check(CLI::PositiveNumber);
    }
    sub->add_option("--out", c.out, "output directory");
    sub->add_flag("--check", c.check, "exit 3 when a reference threshold is violated");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Battery-exhaustion defense simulator"};
    app.require_subcommand(1);
    Common c;

    auto* parametrize_cmd = app.add_subcommand("parametrize", "derived energy and limiter parameters");
    add_common(parametrize_cmd, c, false);

    std::string bursts = "1,10,100,1000";
    std::string windows = "600";
    std::string starts = "0";
    auto* severity_cmd = app.add_subcommand("severity", "exhaustion time under chained bursts");
    add_common(severity_cmd, c, false);
    severity_cmd->add_option("--bursts", bursts, "comma-separated burst sizes");
    severity_cmd->add_option("--windows-s", windows, "comma-separated burst windows in seconds");
    severity_cmd->add_option("--start-days", starts, "comma-separated attack start days");

    bool full_protocol = false;
    auto* detect_cmd = app.add_subcommand("detect", "year-long detection and throttling run");
    add_common(detect_cmd, c, true);
    detect_cmd->add_flag("--full-protocol", full_protocol, "run every handshake and signature");

    auto* latency_cmd = app.add_subcommand("latency", "request sizes and constrained-link transfer time");
    add_common(latency_cmd, c, false);

    double rate = 1.0;
    double days = 365.0;
    bool simulate = false;
    auto* inject_cmd = app.add_subcommand("inject", "energy drained by forged requests");
    add_common(inject_cmd, c, false);
    inject_cmd->add_option("--rate", rate, "messages per second")->check(CLI::NonNegativeNumber);
    inject_cmd->add_option("--days", days, "attack duration")->check(CLI::NonNegativeNumber);
    inject_cmd->add_flag("--simulate", simulate, "push every message through the simulator");

    std::uint32_t key_requesters = 0;
    auto* keygen_cmd = app.add_subcommand("keygen", "provision CA, backend, requester and provider keys");
    add_common(keygen_cmd, c, false);
    keygen_cmd->add_option("--requesters", key_requesters, "requester identities to enroll");

    auto* simulate_cmd = app.add_subcommand("simulate", "run a scenario file");
    add_common(simulate_cmd, c, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const auto started = std::chrono::steady_clock::now();
        int rc = kExitOk;
        if (*parametrize_cmd) {
            rc = cmd_parametrize(c);
        } else if (*severity_cmd) {
            rc = cmd_severity(c, bursts, windows, starts);
        } else if (*detect_cmd) {
            rc = cmd_detect(c, full_protocol);
        } else if (*latency_cmd) {
            rc = cmd_latency(c);
        } else if (*inject_cmd) {
            rc = cmd_inject(c, rate, days, simulate);
        } else if (*keygen_cmd) {
            rc = cmd_keygen(c, key_requesters);
        } else if (*simulate_cmd) {
            rc = cmd_simulate(c);
        }
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - started;
        std::cerr << "elapsed " << took.count() << " s\n";
        return rc;
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
