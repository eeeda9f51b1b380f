#include "poynting/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "poynting/error.hpp"

namespace poynting::parallel {

namespace {

std::atomic<int> g_threads{1};
std::atomic<bool> g_deterministic{true};

}  // namespace

int thread_count() noexcept { return g_threads.load(); }

void set_thread_count(int threads) {
    if (threads < 1) {
        throw ConfigError("thread count must be >= 1, got " + std::to_string(threads));
    }
    g_threads.store(threads);
}

bool deterministic() noexcept { return g_deterministic.load(); }

void set_deterministic(bool on) noexcept { g_deterministic.store(on); }

int resolve_thread_count(int requested) {
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("POYNTING_THREADS"); env != nullptr && *env != '\0') {
        try {
            const int value = std::stoi(env);
            if (value > 0) {
                return value;
            }
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("POYNTING_THREADS is not a positive integer: ") + env);
    }
    return 1;
}

void for_range(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    const auto threads = static_cast<std::size_t>(std::max(1, thread_count()));
    if (threads == 1 || n < 2) {
        body(0, n);
        return;
    }
    const std::size_t workers = std::min(threads, n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end) {
            pool.emplace_back([&body, begin, end] { body(begin, end); });
        }
    }
    body(0, std::min(n, chunk));
}

double reduce_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& chunk_sum) {
    const auto threads = static_cast<std::size_t>(std::max(1, thread_count()));
    if (deterministic() || threads == 1 || n < 2) {
        return chunk_sum(0, n);
    }
    const std::size_t workers = std::min(threads, n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<double> partial(workers, 0.0);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) {
                pool.emplace_back([&, w, begin, end] { partial[w] = chunk_sum(begin, end); });
            }
        }
    }
    double total = 0.0;
    for (double p : partial) {
        total += p;
    }
    return total;
}

}  // namespace poynting::parallel
