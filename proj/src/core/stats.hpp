#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace xkde {

// Token-counting function used for dataset statistics. The default counts
// toy tokens (whitespace + punctuation split).
using TokenCounter = std::function<std::size_t(const std::string&)>;
std::size_t toy_token_count(const std::string& text);

struct QuadrantCounts {
    std::uint64_t in_with = 0;
    std::uint64_t in_without = 0;
    std::uint64_t out_with = 0;
    std::uint64_t out_without = 0;

    std::uint64_t total() const { return in_with + in_without + out_with + out_without; }
    bool operator==(const QuadrantCounts&) const = default;
};

struct StatsRow {
    QuadrantCounts counts;
    std::uint64_t token_sum = 0;

    // Mean token count of (query + answer + edit_text) per sample.
    double avg_token_length() const {
        const std::uint64_t n = counts.total();
        return n == 0 ? 0.0 : static_cast<double>(token_sum) / static_cast<double>(n);
    }
    bool operator==(const StatsRow&) const = default;
};

// Per-(source_tag, query language) dataset statistics. Merging is associative
// so shards can be computed concurrently and combined.
struct DatasetStats {
    std::map<std::pair<std::string, std::string>, StatsRow> rows;

    void add(const ParallelSample& sample, const TokenCounter& counter);
    void merge(const DatasetStats& other);
    std::uint64_t total() const;
    bool operator==(const DatasetStats&) const = default;
};

DatasetStats compute_stats(const std::vector<ParallelSample>& samples,
                           const TokenCounter& counter = toy_token_count);

// Human-readable rendering (one aligned row per (source_tag, lang)).
std::string render_stats(const DatasetStats& stats);

} // namespace xkde
