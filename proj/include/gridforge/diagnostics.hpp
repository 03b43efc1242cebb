#pragma once

#include <map>
#include <string>
#include <vector>

namespace gridforge {

// Collects warnings and stage counters across the pipeline. Counters keep
// insertion-independent ordering (std::map) so reports serialize stably.
struct Diagnostics {
    std::vector<std::string> warnings;
    std::map<std::string, long long> counters;

    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
    void count(const std::string& key, long long delta = 1) { counters[key] += delta; }
};

}  // namespace gridforge
