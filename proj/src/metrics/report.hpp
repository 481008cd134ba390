#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "core/types.hpp"

namespace xkde::metrics {

enum class MetricName { reliability, generality, locality, portability };

const char* to_string(MetricName name);
MetricName parse_metric_name(const std::string& s);

// One computed metric in one (edit language, test language) direction.
// Values from the metric operations live in [0,1].
struct MetricValue {
    MetricName name = MetricName::reliability;
    LanguageCode edit_lang;
    LanguageCode test_lang;
    double value = 0.0;
    std::size_t n_cases = 0;
};

// A raw table cell; unconstrained value so tables can carry percent-scale
// numbers (the convention of the published tables).
struct CellValue {
    LanguageCode edit_lang;
    LanguageCode test_lang;
    std::string metric;
    double value = 0.0;
};

// Cells keyed by (edit_lang, test_lang, metric). Averages are always
// recomputed from the stored cells, never cached.
class ReportTable {
public:
    void set_cell(const CellValue& cell); // throws DuplicateKey on repeat keys

    bool has_cell(const std::string& edit_lang, const std::string& test_lang,
                  const std::string& metric) const;
    double cell(const std::string& edit_lang, const std::string& test_lang,
                const std::string& metric) const;
    const std::map<std::tuple<std::string, std::string, std::string>, double>& cells() const {
        return cells_;
    }

    // Unweighted mean of every cell with the given edit language (the "Avg."
    // column: all metrics x all test languages for one edit direction).
    double direction_average(const std::string& edit_lang) const;

    // Mean across test languages for one (edit language, metric) pair (the
    // per-metric "xx-avg" cells).
    double metric_average(const std::string& edit_lang, const std::string& metric) const;

    std::vector<std::string> edit_langs() const;
    std::vector<std::string> test_langs(const std::string& edit_lang) const;
    std::vector<std::string> metrics_present() const;

    // Recompute every derived average from the cells and confirm the values
    // the emitters would print; returns false if any mismatch (defensive
    // self-check used by the harness before emission).
    bool verify() const;

    bool operator==(const ReportTable&) const = default;

private:
    std::map<std::tuple<std::string, std::string, std::string>, double> cells_;
};

// Build a table from raw cells (DuplicateKey on repeated keys).
ReportTable aggregate(const std::vector<CellValue>& cells);

// Convenience: metric values enter the table on the percent scale used by the
// published tables (value * 100).
ReportTable aggregate(const std::vector<MetricValue>& values);

// ---- emitters ----
// All three formats carry identical numbers, rounded half-to-even to two
// decimals. The structured emitter renders numbers as fixed two-decimal
// strings so the three outputs agree byte-for-byte on every value.
std::string emit_text(const ReportTable& table);
std::string emit_csv(const ReportTable& table);
std::string emit_json(const ReportTable& table);

// Parse back a table previously written by emit_json.
ReportTable parse_report_json(const std::string& text);

// Half-to-even rounding to `digits` decimals, and its fixed-width rendering.
double round_half_even(double x, int digits);
std::string format_fixed2(double x);

} // namespace xkde::metrics
