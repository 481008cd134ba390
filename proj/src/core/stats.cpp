#include "core/stats.hpp"

#include <iomanip>
#include <sstream>

#include "common/text.hpp"

namespace xkde {

std::size_t toy_token_count(const std::string& text) {
    return split_tokens(text).size();
}

void DatasetStats::add(const ParallelSample& sample, const TokenCounter& counter) {
    StatsRow& row = rows[{to_string(sample.source_tag), sample.query_lang.str()}];
    std::uint64_t& cell = sample.scope == Scope::in_scope
                              ? (sample.with_edit ? row.counts.in_with : row.counts.in_without)
                              : (sample.with_edit ? row.counts.out_with : row.counts.out_without);
    ++cell;
    std::uint64_t tokens = counter(sample.query) + counter(sample.answer);
    if (sample.edit_text) tokens += counter(*sample.edit_text);
    row.token_sum += tokens;
}

void DatasetStats::merge(const DatasetStats& other) {
    for (const auto& [key, row] : other.rows) {
        StatsRow& mine = rows[key];
        mine.counts.in_with += row.counts.in_with;
        mine.counts.in_without += row.counts.in_without;
        mine.counts.out_with += row.counts.out_with;
        mine.counts.out_without += row.counts.out_without;
        mine.token_sum += row.token_sum;
    }
}

std::uint64_t DatasetStats::total() const {
    std::uint64_t n = 0;
    for (const auto& [key, row] : rows) n += row.counts.total();
    return n;
}

DatasetStats compute_stats(const std::vector<ParallelSample>& samples,
                           const TokenCounter& counter) {
    DatasetStats stats;
    for (const auto& s : samples) stats.add(s, counter);
    return stats;
}

std::string render_stats(const DatasetStats& stats) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "source" << std::setw(6) << "lang" << std::right
        << std::setw(10) << "in/w" << std::setw(10) << "in/wo" << std::setw(10) << "out/w"
        << std::setw(10) << "out/wo" << std::setw(10) << "total" << std::setw(12) << "avg_tok"
        << "\n";
    for (const auto& [key, row] : stats.rows) {
        out << std::left << std::setw(12) << key.first << std::setw(6) << key.second << std::right
            << std::setw(10) << row.counts.in_with << std::setw(10) << row.counts.in_without
            << std::setw(10) << row.counts.out_with << std::setw(10) << row.counts.out_without
            << std::setw(10) << row.counts.total() << std::setw(12) << std::fixed
            << std::setprecision(1) << row.avg_token_length() << "\n";
        out.unsetf(std::ios::fixed);
    }
    out << "total records: " << stats.total() << "\n";
    return out.str();
}

} // namespace xkde
