#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace cohortrisk::accounting {

double basic_compose(const std::vector<double>& epsilons);

double advanced_compose(double epsilon, long n, double delta);

struct CohortQuery {
    std::string cohort_id;
    double epsilon = 0.0;
};

// Plain max over the given budgets.
double parallel_compose(const std::vector<double>& epsilons);

// Max over queries on pairwise distinct cohorts; repeated cohort ids throw NonDisjoint.
double parallel_compose(const std::vector<CohortQuery>& queries);

// Parallel composition if the caller declares the cohorts disjoint, basic otherwise.
double account(const std::vector<CohortQuery>& queries, bool declared_disjoint);

inline constexpr double kDefaultRenyiOrder = 32.0;

// (1/alpha) * ln(sum_i exp(alpha * eps_i))
double renyi_compose(const std::vector<double>& epsilons, double alpha = kDefaultRenyiOrder);

struct GaussianLossApprox {
    double mean = 0.0;
    double variance = 0.0;
};

GaussianLossApprox gaussian_loss_approx(long n, double epsilon);

struct TierLimits {
    double per_query = 0.01;
    double per_cohort_day = 0.10;
    double per_user_month = 1.0;
};

enum class Tier { per_query, per_cohort_day, per_user_month };

const char* to_string(Tier tier);

struct ChargeResult {
    bool accepted = false;
    std::optional<Tier> rejected_tier;

    explicit operator bool() const { return accepted; }
};

struct LedgerEntry {
    long day = 0;
    std::string user;
    std::string cohort;
    double epsilon = 0.0;
};

inline constexpr long kDayWindow = 1;
inline constexpr long kMonthWindow = 30;

// Three-tier ledger over tumbling day / 30-day windows. Amounts are kept as integer
// ticks of 1e-12 so tier sums are exact.
class CompositionLedger {
public:
    explicit CompositionLedger(TierLimits limits = {});

    ChargeResult charge(const std::string& user, const std::string& cohort, double epsilon, long day);

    double multi_cohort_user_loss(const std::string& user, long day) const;
    double cohort_day_total(const std::string& cohort, long day) const;
    double user_month_total(const std::string& user, long day) const;

    std::vector<LedgerEntry> entries() const;
    std::size_t size() const;
    const TierLimits& limits() const { return limits_; }

    // Audit log of rejected attempts, in call order.
    std::vector<std::pair<LedgerEntry, Tier>> rejections() const;

    void export_ndjson(std::ostream& out) const;
    // Replays records through charge(); a record the limits would reject throws ValidationError.
    void import_ndjson(std::istream& in);

    static std::int64_t to_ticks(double epsilon);
    static double from_ticks(std::int64_t ticks);

private:
    struct Stored {
        long day;
        std::string user;
        std::string cohort;
        std::int64_t ticks;
    };

    TierLimits limits_;
    std::int64_t lim_query_, lim_cohort_day_, lim_user_month_;
    std::vector<Stored> entries_;
    std::vector<std::pair<LedgerEntry, Tier>> rejected_;
    std::map<std::pair<std::string, long>, std::int64_t> cohort_day_;
    std::map<std::pair<std::string, long>, std::int64_t> user_month_;
    mutable std::mutex mu_;
};

}  // namespace cohortrisk::accounting
