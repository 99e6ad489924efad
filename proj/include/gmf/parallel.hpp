#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gmf {

/// Run fn(i) for i in [0, count) across worker threads. Results must be
/// written to per-index slots by the caller; the first exception thrown by
/// any worker is rethrown after all workers finish.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                         unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Kahan compensated accumulator; aggregation results stay stable under
/// reordering of equal-count schedules.
class CompensatedSum {
public:
    void add(double v) {
        const double y = v - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
        ++count_;
    }
    double sum() const { return s_; }
    double mean() const { return count_ ? s_ / static_cast<double>(count_) : 0.0; }
    long count() const { return count_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
    long count_ = 0;
};

}  // namespace gmf
