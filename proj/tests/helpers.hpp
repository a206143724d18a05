#pragma once

#include <cmath>
#include <initializer_list>
#include <string>

#include "bcp/analysis.hpp"
#include "bcp/protocol.hpp"
#include "bcp/simulate.hpp"

namespace bcp::testing {

inline Configuration config_of(const ProtocolSpec& spec,
                               std::initializer_list<std::pair<const char*, std::uint64_t>> items) {
    Configuration c;
    for (const auto& [label, count] : items)
        c.add(spec.state_index(label), static_cast<std::int64_t>(count));
    return c;
}

inline std::uint64_t count_of(const ProtocolSpec& spec, const Configuration& c,
                              const std::string& label) {
    auto q = spec.find_state(label);
    return q ? c.count(*q) : 0;
}

// binomial three-sigma band around probability p
inline bool within_3sigma(double observed_fraction, double p, std::uint64_t trials) {
    double sigma = std::sqrt(p * (1 - p) / static_cast<double>(trials));
    return std::abs(observed_fraction - p) <= 3 * sigma;
}

// chi-square upper 0.001 quantiles for df = 1..8
inline double chi2_crit_999(int df) {
    static const double q[] = {10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124};
    return q[df - 1];
}

// exhaustive reachable set via plain DFS; independent of analysis::explore
inline void brute_reach(Protocol& p, const Configuration& c,
                        std::unordered_map<Configuration, bool, ConfigurationHash>& seen) {
    if (seen.count(c)) return;
    seen.emplace(c, true);
    for (const auto& [q, cnt] : c.entries()) {
        (void)cnt;
        if (p.silent(q)) continue;
        brute_reach(p, apply_broadcast(p, c, q), seen);
    }
}

// definition-level stability: every reachable configuration keeps the
// consensus of the start
inline bool brute_stable(Protocol& p, const Configuration& c) {
    Consensus b = consensus_of(p, c);
    if (b == Consensus::Mixed) return false;
    std::unordered_map<Configuration, bool, ConfigurationHash> seen;
    brute_reach(p, c, seen);
    for (const auto& [conf, _] : seen)
        if (consensus_of(p, conf) != b) return false;
    return true;
}

} // namespace bcp::testing
