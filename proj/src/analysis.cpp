#include "bcp/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <ostream>
#include <thread>

namespace bcp {

ReachGraph explore(Protocol& p, const Configuration& start, std::size_t node_budget) {
    ReachGraph g;
    g.nodes.push_back(start);
    g.index.emplace(start, 0);
    g.edges.emplace_back();
    std::deque<std::uint32_t> work{0};
    while (!work.empty()) {
        std::uint32_t i = work.front();
        work.pop_front();
        Configuration cur = g.nodes[i]; // copy: g.nodes may reallocate
        for (const auto& [q, c] : cur.entries()) {
            (void)c;
            if (p.silent(q)) continue;
            Configuration next = apply_broadcast(p, cur, q);
            auto it = g.index.find(next);
            std::uint32_t j;
            if (it == g.index.end()) {
                if (g.nodes.size() >= node_budget)
                    fail(Err::BudgetExceeded, "reachability budget of " +
                                                  std::to_string(node_budget) + " nodes exceeded");
                j = static_cast<std::uint32_t>(g.nodes.size());
                g.nodes.push_back(next);
                g.index.emplace(std::move(next), j);
                g.edges.emplace_back();
                work.push_back(j);
            } else {
                j = it->second;
            }
            g.edges[i].emplace_back(j, q);
        }
    }
    return g;
}

bool decide_stable(Protocol& p, const Configuration& config, std::size_t node_budget) {
    Consensus b = consensus_of(p, config);
    if (b == Consensus::Mixed) return false;
    // BFS; abort as soon as a configuration leaves the consensus.
    std::unordered_map<Configuration, bool, ConfigurationHash> seen;
    std::deque<Configuration> work;
    seen.emplace(config, true);
    work.push_back(config);
    while (!work.empty()) {
        Configuration cur = std::move(work.front());
        work.pop_front();
        for (const auto& [q, c] : cur.entries()) {
            (void)c;
            if (p.silent(q)) continue;
            Configuration next = apply_broadcast(p, cur, q);
            if (consensus_of(p, next) != b) return false;
            auto [it, fresh] = seen.emplace(std::move(next), true);
            if (fresh) {
                if (seen.size() > node_budget)
                    fail(Err::BudgetExceeded, "stability search budget exceeded");
                work.push_back(it->first);
            }
        }
    }
    return true;
}

namespace {

// Backward closure of `seed` over the edge relation of g.
std::vector<bool> backward_reachable(const ReachGraph& g, const std::vector<bool>& seed) {
    std::vector<std::vector<std::uint32_t>> rev(g.nodes.size());
    for (std::uint32_t i = 0; i < g.edges.size(); ++i)
        for (auto [j, q] : g.edges[i]) {
            (void)q;
            rev[j].push_back(i);
        }
    std::vector<bool> in(seed);
    std::deque<std::uint32_t> work;
    for (std::uint32_t i = 0; i < in.size(); ++i)
        if (in[i]) work.push_back(i);
    while (!work.empty()) {
        std::uint32_t i = work.front();
        work.pop_front();
        for (std::uint32_t k : rev[i])
            if (!in[k]) {
                in[k] = true;
                work.push_back(k);
            }
    }
    return in;
}

ReplayPath path_to(const ReachGraph& g, Protocol& p, std::uint32_t target) {
    (void)p;
    // BFS parents from the root.
    std::vector<std::int64_t> parent(g.nodes.size(), -1);
    std::vector<StateId> via(g.nodes.size(), 0);
    std::vector<bool> seen(g.nodes.size(), false);
    std::deque<std::uint32_t> work{0};
    seen[0] = true;
    while (!work.empty()) {
        std::uint32_t i = work.front();
        work.pop_front();
        if (i == target) break;
        for (auto [j, q] : g.edges[i])
            if (!seen[j]) {
                seen[j] = true;
                parent[j] = i;
                via[j] = q;
                work.push_back(j);
            }
    }
    ReplayPath path;
    path.initial = g.nodes[0];
    std::vector<StateId> rev_steps;
    for (std::uint32_t i = target; parent[i] >= 0; i = static_cast<std::uint32_t>(parent[i]))
        rev_steps.push_back(via[i]);
    path.chosen.assign(rev_steps.rbegin(), rev_steps.rend());
    return path;
}

} // namespace

Verdict model_check_from(Protocol& p, const Configuration& start, bool expected,
                         std::size_t node_budget) {
    Verdict v;
    ReachGraph g;
    try {
        g = explore(p, start, node_budget);
    } catch (const Error& e) {
        if (e.kind() != Err::BudgetExceeded) throw;
        v.status = Verdict::BoundExceeded;
        v.detail = e.what();
        v.explored = node_budget;
        return v;
    }
    v.explored = g.nodes.size();

    std::size_t m = g.nodes.size();
    std::vector<bool> not_expected_consensus(m), not_wrong_consensus(m);
    for (std::uint32_t i = 0; i < m; ++i) {
        Consensus c = consensus_of(p, g.nodes[i]);
        not_expected_consensus[i] = c != (expected ? Consensus::One : Consensus::Zero);
        not_wrong_consensus[i] = c != (expected ? Consensus::Zero : Consensus::One);
    }

    // stable-good: no path to a non-expected-consensus configuration
    std::vector<bool> can_leave_good = backward_reachable(g, not_expected_consensus);
    std::vector<bool> stable_good(m);
    for (std::uint32_t i = 0; i < m; ++i) stable_good[i] = !can_leave_good[i];
    // stable-wrong: no path to a non-wrong-consensus configuration
    std::vector<bool> can_leave_wrong = backward_reachable(g, not_wrong_consensus);
    for (std::uint32_t i = 0; i < m; ++i) {
        if (!can_leave_wrong[i]) {
            v.status = Verdict::Counterexample;
            v.witness = path_to(g, p, i);
            v.detail = "stable wrong consensus reachable";
            return v;
        }
    }
    std::vector<bool> can_reach_good = backward_reachable(g, stable_good);
    for (std::uint32_t i = 0; i < m; ++i) {
        if (!can_reach_good[i]) {
            v.status = Verdict::Counterexample;
            v.witness = path_to(g, p, i);
            v.detail = "configuration cannot reach a stable expected consensus";
            return v;
        }
    }
    v.status = Verdict::Correct;
    return v;
}

Verdict model_check(Protocol& p, const InputMap& input, bool expected, std::size_t node_budget) {
    return model_check_from(p, init_config(p, input), expected, node_budget);
}

const char* estimator_name(Estimator e) {
    switch (e) {
        case Estimator::ExactStable: return "exact_stable";
        case Estimator::QuiescenceT: return "quiescence";
        case Estimator::LastConsensusChange: return "last_consensus_change";
    }
    return "?";
}

std::optional<Estimator> estimator_from_name(std::string_view name) {
    if (name == "exact_stable") return Estimator::ExactStable;
    if (name == "quiescence") return Estimator::QuiescenceT;
    if (name == "last_consensus_change") return Estimator::LastConsensusChange;
    return std::nullopt;
}

namespace {

TrialRow run_trial(Protocol& p, const Configuration& start, Estimator est, Rng rng,
                   const MeasureOptions& opts) {
    TrialRow row;
    row.n = start.size();
    row.estimator = est;
    switch (est) {
        case Estimator::QuiescenceT: {
            Trace tr = run_from(p, start, rng, StopPolicy::quiescence(), opts.max_steps);
            row.steps = tr.step_count;
            row.truncated = tr.truncated;
            if (!tr.truncated) row.T = tr.step_count;
            break;
        }
        case Estimator::LastConsensusChange: {
            Trace tr = run_from(p, start, rng, StopPolicy::quiescence(), opts.max_steps);
            row.steps = tr.step_count;
            row.truncated = tr.truncated;
            if (tr.final_consensus != Consensus::Mixed)
                row.T = tr.consensus_changes.empty() ? 0 : tr.consensus_changes.back();
            break;
        }
        case Estimator::ExactStable: {
            RunOptions ro;
            ro.retain_steps = true;
            Trace tr = run_from(p, start, rng, StopPolicy::quiescence(), opts.max_steps, ro);
            row.steps = tr.step_count;
            row.truncated = tr.truncated;
            // Stability is absorbing along a trace, so the first stable index
            // can be found by bisection once the endpoint is known stable.
            if (decide_stable(p, tr.final, opts.stable_budget)) {
                std::uint64_t lo = 0, hi = tr.step_count; // config at index i: i==0 ? initial : steps[i-1]
                auto config_at = [&](std::uint64_t i) -> const Configuration& {
                    return i == 0 ? tr.initial : tr.steps[i - 1].config;
                };
                while (lo < hi) {
                    std::uint64_t mid = lo + (hi - lo) / 2;
                    if (decide_stable(p, config_at(mid), opts.stable_budget))
                        hi = mid;
                    else
                        lo = mid + 1;
                }
                row.T = lo;
            } else {
                row.truncated = true;
            }
            break;
        }
    }
    return row;
}

} // namespace

RunStats measure_time_from(Protocol& p, const Configuration& start, std::uint32_t trials,
                           Estimator est, Rng& rng, const MeasureOptions& opts) {
    RunStats stats;
    stats.master_seed = rng.seed();
    stats.rng_algorithm = Rng::algorithm();
    stats.max_steps = opts.max_steps;
    stats.rows.resize(trials);

    unsigned nthreads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<unsigned>(nthreads, std::max<std::uint32_t>(trials, 1));
    if (!p.thread_safe()) nthreads = 1;
    std::atomic<std::uint32_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::uint32_t t = next.fetch_add(1);
            if (t >= trials) return;
            Rng trial_rng = rng.stream(t);
            std::uint64_t seed = trial_rng.seed();
            TrialRow row = run_trial(p, start, est, trial_rng, opts);
            row.trial = t;
            row.seed = seed;
            stats.rows[t] = row;
        }
    };
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return stats;
}

RunStats measure_time(Protocol& p, const InputMap& input, std::uint32_t trials, Estimator est,
                      Rng& rng, const MeasureOptions& opts) {
    return measure_time_from(p, init_config(p, input), trials, est, rng, opts);
}

double RunStats::mean_T(std::uint64_t n) const {
    double sum = 0;
    std::size_t k = 0;
    for (const auto& r : rows)
        if (r.n == n && r.T) {
            sum += static_cast<double>(*r.T);
            ++k;
        }
    return k ? sum / static_cast<double>(k) : std::nan("");
}

double RunStats::mean_steps(std::uint64_t n) const {
    double sum = 0;
    std::size_t k = 0;
    for (const auto& r : rows)
        if (r.n == n) {
            sum += static_cast<double>(r.steps);
            ++k;
        }
    return k ? sum / static_cast<double>(k) : std::nan("");
}

std::size_t RunStats::defined_T(std::uint64_t n) const {
    std::size_t k = 0;
    for (const auto& r : rows)
        if (r.n == n && r.T) ++k;
    return k;
}

std::size_t RunStats::timeouts(std::uint64_t n) const {
    std::size_t k = 0;
    for (const auto& r : rows)
        if (r.n == n && r.truncated) ++k;
    return k;
}

void write_stats_csv(std::ostream& os, const RunStats& stats,
                     const std::vector<std::pair<std::string, std::string>>& header) {
    for (const auto& [k, v] : header) os << "# " << k << "=" << v << "\n";
    os << "# rng=" << stats.rng_algorithm << "\n";
    os << "# master_seed=" << stats.master_seed << "\n";
    os << "# max_steps=" << stats.max_steps << "\n";
    os << "n,trial,seed,steps,T,estimator,truncated\n";
    for (const auto& r : stats.rows) {
        os << r.n << ',' << r.trial << ',' << r.seed << ',' << r.steps << ',';
        if (r.T) os << *r.T;
        os << ',' << estimator_name(r.estimator) << ',' << (r.truncated ? 1 : 0) << "\n";
    }
}

FitResult fit_nlogn(std::span<const std::pair<double, double>> points) {
    std::vector<double> ns;
    for (const auto& [n, t] : points) {
        (void)t;
        if (n < 3) fail(Err::DegenerateInput, "fit requires n >= 3");
        ns.push_back(n);
    }
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    if (ns.size() < 3) fail(Err::DegenerateInput, "fit requires at least 3 distinct n");

    FitResult fit;
    double sxx = 0, sxy = 0, sy = 0;
    for (const auto& [n, t] : points) {
        double x = n * std::log(n);
        sxx += x * x;
        sxy += x * t;
        sy += t;
    }
    fit.a = sxy / sxx;
    double rss = 0, rel = 0;
    for (const auto& [n, t] : points) {
        double x = n * std::log(n);
        double r = t - fit.a * x;
        rss += r * r;
        if (t != 0) rel += (r / t) * (r / t);
        fit.ratios.push_back(t / x);
    }
    (void)sy;
    fit.rms = std::sqrt(rss / static_cast<double>(points.size()));
    fit.rel_rms = std::sqrt(rel / static_cast<double>(points.size()));
    fit.poor_fit = fit.rel_rms > 0.2;
    fit.ratios_nonincreasing = true;
    // Ratio monotonicity in increasing-n order.
    std::vector<std::pair<double, double>> by_n(points.begin(), points.end());
    std::sort(by_n.begin(), by_n.end());
    for (std::size_t i = 1; i < by_n.size(); ++i) {
        double r0 = by_n[i - 1].second / (by_n[i - 1].first * std::log(by_n[i - 1].first));
        double r1 = by_n[i].second / (by_n[i].first * std::log(by_n[i].first));
        if (r1 > r0 * 1.0000001) fit.ratios_nonincreasing = false;
    }
    return fit;
}

namespace {

double tail_exponent(std::span<const double> p_list, double lambda) {
    if (p_list.empty()) fail(Err::DomainError, "empty probability list");
    double mu = 0, pmin = 1;
    for (double p : p_list) {
        if (!(p > 0) || p > 1) fail(Err::DomainError, "probabilities must lie in (0,1]");
        mu += 1.0 / p;
        pmin = std::min(pmin, p);
    }
    return pmin * mu * (lambda - 1 - std::log(lambda));
}

} // namespace

double geom_tail_upper(std::span<const double> p_list, double lambda) {
    if (!(lambda >= 1)) fail(Err::DomainError, "upper tail requires lambda >= 1");
    return std::exp(-tail_exponent(p_list, lambda));
}

double geom_tail_lower(std::span<const double> p_list, double lambda) {
    if (!(lambda > 0) || lambda > 1) fail(Err::DomainError, "lower tail requires 0 < lambda <= 1");
    return std::exp(-tail_exponent(p_list, lambda));
}

double harmonic_tail_threshold(std::uint64_t n, double k) {
    if (n < 3) fail(Err::DomainError, "threshold defined for n >= 3");
    if (!(k >= 0)) fail(Err::DomainError, "k must be nonnegative");
    // lambda - 1 - ln lambda is 0 at 1 and strictly increasing for lambda > 1.
    double lo = 1, hi = 2;
    auto f = [k](double l) { return l - 1 - std::log(l) - k; };
    while (f(hi) < 0) hi *= 2;
    for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < 0)
            lo = mid;
        else
            hi = mid;
    }
    return 2 * (0.5 * (lo + hi));
}

} // namespace bcp
