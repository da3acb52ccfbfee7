#include "cohortrisk/safeguards.hpp"

#include <algorithm>
#include <cctype>

#include "cohortrisk/errors.hpp"

namespace cohortrisk::safeguards {

namespace {

std::string normalize(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(b, e - b + 1);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

RateLimiter::RateLimiter(int q_max, double window) : q_max_(q_max), window_(window) {
    if (q_max < 1) throw InvalidParameter("q_max must be positive");
    if (!(window > 0.0)) throw InvalidParameter("rate window must be positive");
}

RateDecision RateLimiter::check_rate(const std::string& user, double t) {
    std::lock_guard<std::mutex> lock(mu_);
    auto& q = stamps_[user];
    while (!q.empty() && q.front() <= t - window_) q.pop_front();
    if (static_cast<int>(q.size()) >= q_max_) return RateDecision::deny;
    q.push_back(t);
    return RateDecision::allow;
}

std::size_t RateLimiter::in_window(const std::string& user, double t) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = stamps_.find(user);
    if (it == stamps_.end()) return 0;
    return static_cast<std::size_t>(
        std::count_if(it->second.begin(), it->second.end(), [&](double s) { return s > t - window_ && s <= t; }));
}

std::string QueryDescriptor::canonical() const {
    std::string out = "cohort=" + normalize(cohort) + "|metric=" + normalize(metric) +
                      "|statistic=" + normalize(statistic);
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : parameters) params[normalize(k)] = normalize(v);
    for (const auto& [k, v] : params) out += "|" + k + "=" + v;
    return out;
}

dp::NoisyRelease ResultCache::cached_release(const QueryDescriptor& query, long day, const Compute& compute) {
    const auto key = std::make_pair(query.canonical(), day);
    std::promise<dp::NoisyRelease> promise;
    std::shared_future<dp::NoisyRelease> fut;
    bool owner = false;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = entries_.find(key);
        if (it != entries_.end()) {
            ++stats_.hits;
            fut = it->second;
        } else {
            ++stats_.misses;
            fut = promise.get_future().share();
            entries_.emplace(key, fut);
            owner = true;
        }
    }
    if (owner) {
        try {
            promise.set_value(compute());
        } catch (...) {
            // Failed computations are not cached; waiters see the error, later callers retry.
            {
                std::lock_guard<std::mutex> lock(mu_);
                entries_.erase(key);
            }
            promise.set_exception(std::current_exception());
        }
    }
    return fut.get();
}

CacheStats ResultCache::stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    return stats_;
}

std::size_t ResultCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

void ResultCache::evict_before(long day) {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto it = entries_.begin(); it != entries_.end();) {
        it = it->first.second < day ? entries_.erase(it) : std::next(it);
    }
}

}  // namespace cohortrisk::safeguards
