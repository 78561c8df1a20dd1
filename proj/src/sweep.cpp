#include "drainguard/sweep.hpp"

#include "drainguard/error.hpp"

#include <omp.h>

#include <exception>
#include <mutex>

namespace drainguard {

namespace {

struct GridIndex {
    std::size_t burst;
    std::size_t window;
    std::size_t start;
};

GridIndex unflatten(const SeverityGrid& grid, std::size_t flat) {
    const auto n_start = grid.start_days.size();
    const auto n_window = grid.windows.size();
    return {flat / (n_window * n_start), (flat / n_start) % n_window, flat % n_start};
}

SeverityPoint severity_point(const DeploymentConfig& cfg, const SeverityGrid& grid, std::size_t flat) {
    const auto at = unflatten(grid, flat);
    SeverityPoint p;
    p.burst_requests = grid.burst_requests[at.burst];
    p.window = grid.windows[at.window];
    p.start_day = grid.start_days[at.start];
    p.days_to_exhaustion = time_to_exhaustion(cfg, remaining_at_day(cfg, p.start_day), p.burst_requests, p.window,
                                              cfg.service_energy(cfg.default_service()));
    p.exhaustion_day = p.start_day + p.days_to_exhaustion;
    return p;
}

std::size_t grid_size(const SeverityGrid& grid) {
    return grid.burst_requests.size() * grid.windows.size() * grid.start_days.size();
}

} // namespace

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint32_t count) {
    std::vector<std::uint64_t> seeds(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        seeds[i] = first + i;
    }
    return seeds;
}

std::vector<SimulationReport> run_seeds_serial(const SeedKernel& kernel, const std::vector<std::uint64_t>& seeds) {
    std::vector<SimulationReport> out;
    out.reserve(seeds.size());
    for (const auto seed : seeds) {
        out.push_back(kernel(seed));
    }
    return out;
}

std::vector<SimulationReport> run_seeds(const SeedKernel& kernel, const std::vector<std::uint64_t>& seeds) {
    std::vector<SimulationReport> out(seeds.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto n = static_cast<std::int64_t>(seeds.size());

#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = kernel(seeds[static_cast<std::size_t>(i)]);
        } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

std::vector<SeverityPoint> severity_sweep_serial(const DeploymentConfig& cfg, const SeverityGrid& grid) {
    std::vector<SeverityPoint> out;
    out.reserve(grid_size(grid));
    for (std::size_t i = 0; i < grid_size(grid); ++i) {
        out.push_back(severity_point(cfg, grid, i));
    }
    return out;
}

std::vector<SeverityPoint> severity_sweep(const DeploymentConfig& cfg, const SeverityGrid& grid) {
    cfg.validate();
    const auto total = grid_size(grid);
    std::vector<SeverityPoint> out(total);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto n = static_cast<std::int64_t>(total);

#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = severity_point(cfg, grid, static_cast<std::size_t>(i));
        } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

int parallel_threads() { return omp_get_max_threads(); }

} // namespace drainguard
