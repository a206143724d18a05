#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcp/protocol.hpp"
#include "bcp/rng.hpp"
#include "bcp/simulate.hpp"

namespace bcp {

// ---- exhaustive reachability at fixed population size ----

struct ReachGraph {
    std::vector<Configuration> nodes;
    std::unordered_map<Configuration, std::uint32_t, ConfigurationHash> index;
    // edges[i] = (successor node, broadcasting state)
    std::vector<std::vector<std::pair<std::uint32_t, StateId>>> edges;

    std::uint32_t node(const Configuration& c) const { return index.at(c); }
};

// Breadth-first closure under non-silent broadcasts. Throws BudgetExceeded.
ReachGraph explore(Protocol& p, const Configuration& start, std::size_t node_budget);

// True iff `config` is a b-consensus and everything reachable from it stays
// one. Decided by explicit search over the fixed-n configuration space.
bool decide_stable(Protocol& p, const Configuration& config, std::size_t node_budget);

struct ReplayPath {
    Configuration initial;
    std::vector<StateId> chosen; // broadcast sources, in order
};

struct Verdict {
    enum Status { Correct, Counterexample, BoundExceeded } status = Correct;
    std::optional<ReplayPath> witness;
    std::size_t explored = 0;
    std::string detail;
};

// Probability-1 stabilization to `expected` over the finite chain: from every
// reachable configuration a stable expected-consensus is reachable, and no
// stable wrong consensus is reachable.
Verdict model_check(Protocol& p, const InputMap& input, bool expected, std::size_t node_budget);
Verdict model_check_from(Protocol& p, const Configuration& start, bool expected, std::size_t node_budget);

// ---- measurement ----

enum class Estimator { ExactStable, QuiescenceT, LastConsensusChange };

const char* estimator_name(Estimator e);
std::optional<Estimator> estimator_from_name(std::string_view name);

struct TrialRow {
    std::uint64_t n = 0;
    std::uint32_t trial = 0;
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;
    std::optional<std::uint64_t> T; // empty: estimator undefined for this trial
    Estimator estimator = Estimator::QuiescenceT;
    bool truncated = false;
};

struct RunStats {
    std::vector<TrialRow> rows;
    std::uint64_t master_seed = 0;
    std::string rng_algorithm;
    std::uint64_t max_steps = 0;

    double mean_T(std::uint64_t n) const;
    double mean_steps(std::uint64_t n) const;
    std::size_t defined_T(std::uint64_t n) const;
    std::size_t timeouts(std::uint64_t n) const;
};

struct MeasureOptions {
    std::uint64_t max_steps = 50'000'000;
    std::size_t stable_budget = 1'000'000;
    unsigned threads = 0; // 0: hardware concurrency
};

RunStats measure_time(Protocol& p, const InputMap& input, std::uint32_t trials, Estimator est,
                      Rng& rng, const MeasureOptions& opts = {});
// As above but starting from an explicit configuration (protocols without inputs).
RunStats measure_time_from(Protocol& p, const Configuration& start, std::uint32_t trials,
                           Estimator est, Rng& rng, const MeasureOptions& opts = {});

// CSV schema: n,trial,seed,steps,T,estimator,truncated
void write_stats_csv(std::ostream& os, const RunStats& stats,
                     const std::vector<std::pair<std::string, std::string>>& header);

// ---- n log n fits ----

struct FitResult {
    double a = 0;        // least squares T ~ a * n ln n
    double rms = 0;      // root mean squared residual
    double rel_rms = 0;  // rms / mean(T)
    bool poor_fit = false;
    std::vector<double> ratios; // per point: T / (n ln n), input order
    bool ratios_nonincreasing = false;
};

FitResult fit_nlogn(std::span<const std::pair<double, double>> points); // (n, mean T)

// ---- geometric tail bounds ----

// P(X >= lambda*mu) <= exp(-p_min * mu * (lambda - 1 - ln lambda)), lambda >= 1
double geom_tail_upper(std::span<const double> p_list, double lambda);
// P(X <= lambda*mu) <= same expression, 0 < lambda <= 1
double geom_tail_lower(std::span<const double> p_list, double lambda);

// l = 2*lambda where lambda >= 1 solves lambda - 1 - ln lambda = k.
double harmonic_tail_threshold(std::uint64_t n, double k);

} // namespace bcp
