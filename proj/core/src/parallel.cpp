#include "meshrefine/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace meshrefine {

int default_thread_count() {
    if (const char* env = std::getenv("MESHREFINE_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? int(hc) : 1;
}

void parallel_for(int n, int thread_count, const std::function<void(int)>& fn) {
    if (thread_count <= 0) thread_count = default_thread_count();
    thread_count = std::min(thread_count, n);
    if (thread_count <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(thread_count);
    for (int t = 0; t < thread_count; ++t)
        workers.emplace_back([&, t] {
            for (int i = t; i < n; i += thread_count) fn(i);
        });
    for (auto& w : workers) w.join();
}

}  // namespace meshrefine
