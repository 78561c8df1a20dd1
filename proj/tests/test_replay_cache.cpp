#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drainguard/error.hpp"
#include "drainguard/replay_cache.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <vector>

using namespace drainguard;
using Admission = ReplayCache::Admission;

namespace {

/// Keeps every counter ever accepted and applies the two rules literally:
/// refuse one that lags the highest accepted counter by more than delta,
/// refuse a counter already accepted.
struct NaiveCache {
    std::uint32_t delta;
    std::set<std::uint16_t> accepted;

    Admission admit(std::uint16_t c) {
        if (!accepted.empty() && static_cast<std::int64_t>(*accepted.rbegin()) - c > delta) {
            return Admission::OutsideWindow;
        }
        if (accepted.contains(c)) {
            return Admission::Replayed;
        }
        accepted.insert(c);
        return Admission::Accept;
    }
};

} // namespace

TEST_CASE("documented examples") {
    ReplayCache cache(16);
    CHECK(cache.admit(5) == Admission::Accept);
    CHECK(cache.admit(5) == Admission::Replayed);

    ReplayCache four(4);
    CHECK(four.admit(10) == Admission::Accept);
    CHECK(four.admit(5) == Admission::OutsideWindow);

    ReplayCache ordered(4);
    CHECK(ordered.admit(5) == Admission::Accept);
    CHECK(ordered.admit(10) == Admission::Accept);
    CHECK_FALSE(ordered.seen().contains(5));
    CHECK(ordered.admit(5) == Admission::OutsideWindow);
}

TEST_CASE("zero validity distance is rejected") { CHECK_THROWS_AS(ReplayCache(0), Error); }

TEST_CASE("memory stays within the window") {
    ReplayCache cache(8);
    for (std::uint16_t c = 0; c < 1000; c += 3) {
        cache.admit(c);
        REQUIRE(cache.seen().size() <= 9);
        REQUIRE(cache.max_seen() == c);
        for (const auto s : cache.seen()) {
            REQUIRE(c - s <= 8);
        }
    }
}

TEST_CASE("all permutations of small counter sets match the naive cache") {
    std::mt19937_64 gen(21);
    std::uniform_int_distribution<int> base(0, 40);
    std::uniform_int_distribution<int> spread(0, 14);
    std::size_t permutations = 0;
    for (std::uint32_t delta = 1; delta <= 8; ++delta) {
        for (std::size_t size = 1; size <= 8; ++size) {
            for (int trial = 0; trial < 2; ++trial) {
                std::set<std::uint16_t> distinct;
                const int b = base(gen);
                while (distinct.size() < size) {
                    distinct.insert(static_cast<std::uint16_t>(b + spread(gen)));
                }
                std::vector<std::uint16_t> order(distinct.begin(), distinct.end());
                // One duplicate makes every permutation exercise replays too.
                order.push_back(order[gen() % order.size()]);
                std::sort(order.begin(), order.end());
                do {
                    ReplayCache cache(delta);
                    NaiveCache naive{delta, {}};
                    std::map<std::uint16_t, int> accepts;
                    for (const auto c : order) {
                        const auto got = cache.admit(c);
                        REQUIRE(got == naive.admit(c));
                        accepts[c] += got == Admission::Accept;
                    }
                    for (const auto& [c, n] : accepts) {
                        REQUIRE(n <= 1);
                    }
                    ++permutations;
                } while (std::next_permutation(order.begin(), order.end()));
            }
        }
    }
    CHECK(permutations > 100'000);
}

TEST_CASE("counters within the window are accepted in any order") {
    for (std::uint32_t delta = 1; delta <= 8; ++delta) {
        const std::size_t size = std::min<std::size_t>(8, delta + 1);
        std::vector<std::uint16_t> order(size);
        for (std::size_t i = 0; i < size; ++i) {
            order[i] = static_cast<std::uint16_t>(100 + i);
        }
        do {
            ReplayCache cache(delta);
            for (const auto c : order) {
                REQUIRE(cache.admit(c) == Admission::Accept);
            }
        } while (std::next_permutation(order.begin(), order.end()));
    }
}
