#include "cohortrisk/composition.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "cohortrisk/errors.hpp"

namespace cohortrisk::accounting {

namespace {

void require_positive(const std::vector<double>& epsilons) {
    for (double e : epsilons) {
        if (!(e > 0.0)) throw InvalidParameter("epsilon values must be positive");
    }
}

long floor_div(long a, long b) {
    long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

double basic_compose(const std::vector<double>& epsilons) {
    require_positive(epsilons);
    double total = 0.0;
    for (double e : epsilons) total += e;
    return total;
}

double advanced_compose(double epsilon, long n, double delta) {
    if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
    if (n < 1) throw InvalidParameter("advanced composition needs n >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0, 1)");
    const double nn = static_cast<double>(n);
    return epsilon * std::sqrt(2.0 * nn * std::log(1.0 / delta)) + nn * epsilon * std::expm1(epsilon);
}

double parallel_compose(const std::vector<double>& epsilons) {
    require_positive(epsilons);
    double best = 0.0;
    for (double e : epsilons) best = std::max(best, e);
    return best;
}

double parallel_compose(const std::vector<CohortQuery>& queries) {
    std::set<std::string> seen;
    std::vector<double> eps;
    eps.reserve(queries.size());
    for (const auto& q : queries) {
        if (!seen.insert(q.cohort_id).second) {
            throw NonDisjoint("parallel composition over a repeated cohort: " + q.cohort_id);
        }
        eps.push_back(q.epsilon);
    }
    return parallel_compose(eps);
}

double account(const std::vector<CohortQuery>& queries, bool declared_disjoint) {
    if (declared_disjoint) return parallel_compose(queries);
    std::vector<double> eps;
    for (const auto& q : queries) eps.push_back(q.epsilon);
    return basic_compose(eps);
}

double renyi_compose(const std::vector<double>& epsilons, double alpha) {
    if (!(alpha > 1.0)) throw InvalidParameter("renyi order must exceed 1");
    require_positive(epsilons);
    if (epsilons.empty()) throw InvalidParameter("renyi composition of an empty sequence is undefined");
    const double top = *std::max_element(epsilons.begin(), epsilons.end());
    double acc = 0.0;
    for (double e : epsilons) acc += std::exp(alpha * (e - top));
    return top + std::log(acc) / alpha;
}

GaussianLossApprox gaussian_loss_approx(long n, double epsilon) {
    if (n < 1) throw InvalidParameter("gaussian loss approximation needs n >= 1");
    if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
    const double nn = static_cast<double>(n);
    return {nn * epsilon, nn * epsilon * epsilon};
}

const char* to_string(Tier tier) {
    switch (tier) {
        case Tier::per_query: return "per_query";
        case Tier::per_cohort_day: return "per_cohort_day";
        case Tier::per_user_month: return "per_user_month";
    }
    return "unknown";
}

std::int64_t CompositionLedger::to_ticks(double epsilon) { return std::llround(epsilon * 1e12); }

double CompositionLedger::from_ticks(std::int64_t ticks) { return static_cast<double>(ticks) / 1e12; }

CompositionLedger::CompositionLedger(TierLimits limits)
    : limits_(limits),
      lim_query_(to_ticks(limits.per_query)),
      lim_cohort_day_(to_ticks(limits.per_cohort_day)),
      lim_user_month_(to_ticks(limits.per_user_month)) {
    if (!(limits.per_query > 0.0 && limits.per_cohort_day > 0.0 && limits.per_user_month > 0.0)) {
        throw InvalidParameter("tier limits must be positive");
    }
}

ChargeResult CompositionLedger::charge(const std::string& user, const std::string& cohort, double epsilon,
                                       long day) {
    if (!(epsilon > 0.0)) throw InvalidParameter("charged epsilon must be positive");
    const std::int64_t t = to_ticks(epsilon);
    const auto day_key = std::make_pair(cohort, floor_div(day, kDayWindow));
    const auto month_key = std::make_pair(user, floor_div(day, kMonthWindow));

    std::lock_guard<std::mutex> lock(mu_);
    std::optional<Tier> violated;
    if (t > lim_query_) {
        violated = Tier::per_query;
    } else if (cohort_day_[day_key] + t > lim_cohort_day_) {
        violated = Tier::per_cohort_day;
    } else if (user_month_[month_key] + t > lim_user_month_) {
        violated = Tier::per_user_month;
    }
    if (violated) {
        rejected_.push_back({LedgerEntry{day, user, cohort, epsilon}, *violated});
        return {false, violated};
    }
    cohort_day_[day_key] += t;
    user_month_[month_key] += t;
    entries_.push_back({day, user, cohort, t});
    return {true, std::nullopt};
}

double CompositionLedger::multi_cohort_user_loss(const std::string& user, long day) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::int64_t total = 0;
    for (const auto& e : entries_) {
        if (e.user == user && e.day <= day) total += e.ticks;
    }
    return from_ticks(total);
}

double CompositionLedger::cohort_day_total(const std::string& cohort, long day) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cohort_day_.find({cohort, floor_div(day, kDayWindow)});
    return it == cohort_day_.end() ? 0.0 : from_ticks(it->second);
}

double CompositionLedger::user_month_total(const std::string& user, long day) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = user_month_.find({user, floor_div(day, kMonthWindow)});
    return it == user_month_.end() ? 0.0 : from_ticks(it->second);
}

std::vector<LedgerEntry> CompositionLedger::entries() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<LedgerEntry> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back({e.day, e.user, e.cohort, from_ticks(e.ticks)});
    return out;
}

std::size_t CompositionLedger::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

std::vector<std::pair<LedgerEntry, Tier>> CompositionLedger::rejections() const {
    std::lock_guard<std::mutex> lock(mu_);
    return rejected_;
}

void CompositionLedger::export_ndjson(std::ostream& out) const {
    for (const auto& e : entries()) {
        nlohmann::ordered_json rec;
        rec["day"] = e.day;
        rec["user"] = e.user;
        rec["cohort"] = e.cohort;
        rec["epsilon"] = e.epsilon;
        out << rec.dump() << '\n';
    }
}

void CompositionLedger::import_ndjson(std::istream& in) {
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("ledger line " + std::to_string(lineno) + ": " + e.what());
        }
        for (const char* key : {"day", "user", "cohort", "epsilon"}) {
            if (!rec.contains(key)) {
                throw ValidationError("ledger line " + std::to_string(lineno) + ": missing field " + key);
            }
        }
        if (rec.size() != 4) throw ValidationError("ledger line " + std::to_string(lineno) + ": unexpected fields");
        auto res = charge(rec["user"].get<std::string>(), rec["cohort"].get<std::string>(),
                          rec["epsilon"].get<double>(), rec["day"].get<long>());
        if (!res) {
            throw ValidationError("ledger line " + std::to_string(lineno) + ": replay rejected at " +
                                  to_string(*res.rejected_tier));
        }
    }
}

}  // namespace cohortrisk::accounting
