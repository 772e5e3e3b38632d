#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace herdlab {

/// Static-partition fork/join helper. Work item i always lands in the same
/// partition for a given pool width, partitions write to disjoint state, and
/// partition count never exceeds width, so results are reproducible; with
/// width 1 everything runs inline on the caller.
class ThreadPool {
public:
    explicit ThreadPool(int threads) {
        int workers = threads > 1 ? threads - 1 : 0;
        for (int w = 0; w < workers; ++w) workers_.emplace_back([this] { worker_loop(); });
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    ~ThreadPool() {
        {
            std::unique_lock lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    int width() const { return static_cast<int>(workers_.size()) + 1; }

    using Body = std::function<void(std::size_t part, std::size_t begin, std::size_t end)>;

    /// Runs fn(part, begin, end) over [0, n) split into at most width()
    /// contiguous chunks. Part 0 executes on the calling thread.
    void parallel_for(std::size_t n, const Body& fn) {
        if (n == 0) return;
        std::size_t parts = static_cast<std::size_t>(width());
        parts = std::min(parts, n);
        if (parts <= 1) {
            fn(0, 0, n);
            return;
        }
        std::size_t chunk = (n + parts - 1) / parts;

        {
            std::unique_lock lock(mu_);
            job_ = &fn;
            job_n_ = n;
            job_chunk_ = chunk;
            next_part_ = 1; // part 0 runs on the calling thread
            parts_total_ = parts;
            parts_done_ = 0;
            ++generation_;
        }
        cv_.notify_all();

        fn(0, 0, std::min(chunk, n));
        finish_part();

        std::unique_lock lock(mu_);
        done_cv_.wait(lock, [this] { return parts_done_ == parts_total_; });
        job_ = nullptr;
    }

private:
    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            std::size_t part;
            const Body* job;
            std::size_t n, chunk;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [&] {
                    return stop_ || (generation_ != seen && next_part_ < parts_total_);
                });
                if (stop_) return;
                if (next_part_ >= parts_total_) {
                    seen = generation_;
                    continue;
                }
                part = next_part_++;
                job = job_;
                n = job_n_;
                chunk = job_chunk_;
                if (next_part_ >= parts_total_) seen = generation_;
            }
            std::size_t begin = part * chunk;
            std::size_t end = std::min(begin + chunk, n);
            if (begin < end) (*job)(part, begin, end);
            finish_part();
        }
    }

    void finish_part() {
        std::unique_lock lock(mu_);
        if (++parts_done_ == parts_total_) done_cv_.notify_all();
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const Body* job_ = nullptr;
    std::size_t job_n_ = 0, job_chunk_ = 0;
    std::size_t next_part_ = 0, parts_total_ = 0, parts_done_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

} // namespace herdlab
