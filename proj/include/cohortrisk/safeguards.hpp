#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <string>

#include "cohortrisk/dp.hpp"

namespace cohortrisk::safeguards {

enum class RateDecision { allow, deny };

// Sliding window: a query at time t counts against (t - window, t].
class RateLimiter {
public:
    explicit RateLimiter(int q_max = 100, double window = 1.0);

    RateDecision check_rate(const std::string& user, double t);
    std::size_t in_window(const std::string& user, double t) const;

    int q_max() const { return q_max_; }
    double window() const { return window_; }

private:
    int q_max_;
    double window_;
    std::map<std::string, std::deque<double>> stamps_;
    mutable std::mutex mu_;
};

struct QueryDescriptor {
    std::string cohort;
    std::string metric;
    std::string statistic;
    std::map<std::string, std::string> parameters;

    // Trimmed, lower-cased fields with parameters in key order.
    std::string canonical() const;
};

struct CacheStats {
    std::int64_t hits = 0;
    std::int64_t misses = 0;
};

// Day-scoped release cache. A miss runs `compute` at most once per (descriptor, day) even under
// concurrent callers; everyone else waits for and receives that release.
class ResultCache {
public:
    using Compute = std::function<dp::NoisyRelease()>;

    dp::NoisyRelease cached_release(const QueryDescriptor& query, long day, const Compute& compute);

    CacheStats stats() const;
    std::size_t size() const;
    // Drops entries stamped before `day`.
    void evict_before(long day);

private:
    std::map<std::pair<std::string, long>, std::shared_future<dp::NoisyRelease>> entries_;
    CacheStats stats_;
    mutable std::mutex mu_;
};

}  // namespace cohortrisk::safeguards
