#include "mkv/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace mkv {

namespace {

// Below this many items the loop runs inline.
constexpr std::size_t kMinParallelItems = 1 << 14;

std::atomic<std::size_t> g_override{0};

std::size_t default_threads() {
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MKV_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) threads = std::min(threads, static_cast<std::size_t>(cap));
        } catch (const std::exception&) {
            // ignore malformed values
        }
    }
    return threads;
}

}  // namespace

std::size_t thread_count() {
    const std::size_t forced = g_override.load();
    if (forced > 0) return forced;
    static const std::size_t threads = default_threads();
    return threads;
}

void set_thread_count(std::size_t threads) { g_override.store(threads); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    const std::size_t threads = std::min(thread_count(), n / kMinParallelItems + 1);
    if (threads <= 1) {
        if (n > 0) body(0, n);
        return;
    }
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads - 1);
        for (std::size_t t = 1; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) continue;
            workers.emplace_back([&body, &errors, t, begin, end] {
                try {
                    body(begin, end);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        try {
            body(0, std::min(n, chunk));
        } catch (...) {
            errors[0] = std::current_exception();
        }
    }
    // Lowest chunk wins so the reported error does not depend on scheduling.
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace mkv
