#pragma once

#include "drainguard/energy_model.hpp"
#include "drainguard/simnet.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace drainguard {

/// Runs one independent simulation for a seed. Must not share mutable state
/// across calls.
using SeedKernel = std::function<SimulationReport(std::uint64_t seed)>;

/// Reference: seeds one after another, reports in seed order.
std::vector<SimulationReport> run_seeds_serial(const SeedKernel& kernel, const std::vector<std::uint64_t>& seeds);

/// Same output as run_seeds_serial, with seeds spread over OpenMP threads.
/// The first exception thrown by any run is rethrown on the caller.
std::vector<SimulationReport> run_seeds(const SeedKernel& kernel, const std::vector<std::uint64_t>& seeds);

/// Seeds first, first+1, ..., first+count-1.
std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint32_t count);

struct SeverityPoint {
    std::uint32_t burst_requests = 0;
    Millis window{0};
    double start_day = 0.0;
    double days_to_exhaustion = 0.0; // counted from start_day
    double exhaustion_day = 0.0;
};

struct SeverityGrid {
    std::vector<std::uint32_t> burst_requests;
    std::vector<Millis> windows;
    std::vector<double> start_days;
};

/// Chained-burst exhaustion times for every grid combination, ordered by
/// (burst_requests, window, start_day). Remaining energy at a start day
/// follows the nominal linear discharge.
std::vector<SeverityPoint> severity_sweep_serial(const DeploymentConfig& cfg, const SeverityGrid& grid);
std::vector<SeverityPoint> severity_sweep(const DeploymentConfig& cfg, const SeverityGrid& grid);

/// Threads OpenMP would use for the parallel variants.
int parallel_threads();

} // namespace drainguard
