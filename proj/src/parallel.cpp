#include "qkinetic/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qk::par {
namespace {

std::atomic<unsigned> g_threads{0};

unsigned resolve() {
    unsigned t = g_threads.load();
    if (t == 0) t = threads_from_env(1);
    return t == 0 ? 1 : t;
}

}  // namespace

unsigned threads_from_env(unsigned fallback) {
    const char* env = std::getenv("QKINETIC_THREADS");
    if (env == nullptr || *env == '\0') return fallback;
    try {
        std::size_t pos = 0;
        const long v = std::stol(env, &pos);
        if (pos != std::string(env).size() || v < 1 || v > 1024) return fallback;
        return static_cast<unsigned>(v);
    } catch (...) {
        return fallback;
    }
}

unsigned thread_count() { return resolve(); }

void set_thread_count(unsigned n) { g_threads.store(n); }

void for_chunks(std::size_t n, std::size_t chunk,
                const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    if (chunk == 0) chunk = 1;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(resolve(), n_chunks));
    auto run_chunk = [&](std::size_t c) {
        const std::size_t b = c * chunk;
        const std::size_t e = std::min(n, b + chunk);
        body(b, e);
    };
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
        return;
    }
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t c = w; c < n_chunks; c += workers) run_chunk(c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double reduce_sum(std::size_t n, std::size_t chunk,
                  const std::function<double(std::size_t, std::size_t)>& partial) {
    if (n == 0) return 0.0;
    if (chunk == 0) chunk = 1;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<double> parts(n_chunks, 0.0);
    for_chunks(n, chunk, [&](std::size_t b, std::size_t e) { parts[b / chunk] = partial(b, e); });
    // Pairwise tree combination in index order.
    std::size_t width = n_chunks;
    while (width > 1) {
        const std::size_t half = (width + 1) / 2;
        for (std::size_t i = 0; i + half < width; ++i) parts[i] += parts[i + half];
        width = half;
    }
    return parts[0];
}

}  // namespace qk::par
