#pragma once

#include <atomic>
#include <mutex>

namespace factguard {

template <typename Fn>
auto run_batch(std::size_t n, Fn&& fn, int concurrency) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first;
    std::mutex mu;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first) first = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, concurrency)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first) std::rethrow_exception(first);

    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace factguard
