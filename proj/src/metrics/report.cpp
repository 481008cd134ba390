#include "metrics/report.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "common/errors.hpp"

namespace xkde::metrics {

const char* to_string(MetricName name) {
    switch (name) {
        case MetricName::reliability: return "reliability";
        case MetricName::generality: return "generality";
        case MetricName::locality: return "locality";
        case MetricName::portability: return "portability";
    }
    return "reliability";
}

MetricName parse_metric_name(const std::string& s) {
    if (s == "reliability") return MetricName::reliability;
    if (s == "generality") return MetricName::generality;
    if (s == "locality") return MetricName::locality;
    if (s == "portability") return MetricName::portability;
    throw SchemaViolation("metric", "unknown metric '" + s + "'");
}

void ReportTable::set_cell(const CellValue& cell) {
    const auto key = std::make_tuple(cell.edit_lang.str(), cell.test_lang.str(), cell.metric);
    if (cells_.count(key)) {
        throw DuplicateKey("duplicate report cell (" + cell.edit_lang.str() + ", " +
                           cell.test_lang.str() + ", " + cell.metric + ")");
    }
    cells_[key] = cell.value;
}

bool ReportTable::has_cell(const std::string& edit_lang, const std::string& test_lang,
                           const std::string& metric) const {
    return cells_.count(std::make_tuple(edit_lang, test_lang, metric)) != 0;
}

double ReportTable::cell(const std::string& edit_lang, const std::string& test_lang,
                         const std::string& metric) const {
    const auto it = cells_.find(std::make_tuple(edit_lang, test_lang, metric));
    if (it == cells_.end()) {
        throw DataError("missing report cell (" + edit_lang + ", " + test_lang + ", " + metric +
                        ")");
    }
    return it->second;
}

double ReportTable::direction_average(const std::string& edit_lang) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [key, value] : cells_) {
        if (std::get<0>(key) != edit_lang) continue;
        sum += value;
        ++n;
    }
    if (n == 0) throw DataError("no cells for edit language '" + edit_lang + "'");
    return sum / static_cast<double>(n);
}

double ReportTable::metric_average(const std::string& edit_lang,
                                   const std::string& metric) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [key, value] : cells_) {
        if (std::get<0>(key) != edit_lang || std::get<2>(key) != metric) continue;
        sum += value;
        ++n;
    }
    if (n == 0) {
        throw DataError("no cells for (" + edit_lang + ", " + metric + ")");
    }
    return sum / static_cast<double>(n);
}

std::vector<std::string> ReportTable::edit_langs() const {
    std::set<std::string> seen;
    for (const auto& [key, value] : cells_) seen.insert(std::get<0>(key));
    return {seen.begin(), seen.end()};
}

std::vector<std::string> ReportTable::test_langs(const std::string& edit_lang) const {
    std::set<std::string> seen;
    for (const auto& [key, value] : cells_) {
        if (std::get<0>(key) == edit_lang) seen.insert(std::get<1>(key));
    }
    return {seen.begin(), seen.end()};
}

std::vector<std::string> ReportTable::metrics_present() const {
    std::set<std::string> seen;
    for (const auto& [key, value] : cells_) seen.insert(std::get<2>(key));
    return {seen.begin(), seen.end()};
}

bool ReportTable::verify() const {
    for (const std::string& el : edit_langs()) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& [key, value] : cells_) {
            if (std::get<0>(key) == el) {
                sum += value;
                ++n;
            }
        }
        if (n == 0) return false;
        if (std::abs(direction_average(el) - sum / static_cast<double>(n)) > 1e-12) return false;
    }
    return true;
}

ReportTable aggregate(const std::vector<CellValue>& cells) {
    ReportTable table;
    for (const CellValue& c : cells) table.set_cell(c);
    return table;
}

ReportTable aggregate(const std::vector<MetricValue>& values) {
    std::vector<CellValue> cells;
    cells.reserve(values.size());
    for (const MetricValue& v : values) {
        cells.push_back({v.edit_lang, v.test_lang, to_string(v.name), v.value * 100.0});
    }
    return aggregate(cells);
}

double round_half_even(double x, int digits) {
    double scale = 1.0;
    for (int i = 0; i < digits; ++i) scale *= 10.0;
    // nearbyint obeys the prevailing rounding mode; the default IEEE mode is
    // round-to-nearest-even, which is exactly the table convention.
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double r = std::nearbyint(x * scale) / scale;
    std::fesetround(saved);
    return r;
}

std::string format_fixed2(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", round_half_even(x, 2));
    // normalize "-0.00" to "0.00"
    if (std::string(buf) == "-0.00") return "0.00";
    return buf;
}

namespace {

// Fixed column order for emission; metrics not present are skipped.
std::vector<std::string> ordered_metrics(const ReportTable& t) {
    static const char* kOrder[] = {"reliability", "generality", "locality", "portability"};
    std::vector<std::string> present = t.metrics_present();
    std::vector<std::string> out;
    for (const char* m : kOrder) {
        if (std::find(present.begin(), present.end(), m) != present.end()) out.push_back(m);
    }
    for (const std::string& m : present) {
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    return out;
}

} // namespace

std::string emit_text(const ReportTable& table) {
    const auto metrics = ordered_metrics(table);
    std::ostringstream out;
    // header
    out << std::left;
    char buf[64];
    auto col = [&](const std::string& s, int width) {
        std::snprintf(buf, sizeof(buf), "%-*s", width, s.c_str());
        out << buf;
    };
    auto num = [&](const std::string& s, int width) {
        std::snprintf(buf, sizeof(buf), "%*s", width, s.c_str());
        out << buf;
    };
    col("edit", 6);
    col("test", 6);
    for (const auto& m : metrics) num(m, 13);
    out << "\n";
    for (const std::string& el : table.edit_langs()) {
        for (const std::string& tl : table.test_langs(el)) {
            col(el, 6);
            col(tl, 6);
            for (const auto& m : metrics) {
                num(table.has_cell(el, tl, m) ? format_fixed2(table.cell(el, tl, m)) : "-", 13);
            }
            out << "\n";
        }
        col(el, 6);
        col("avg", 6);
        for (const auto& m : metrics) {
            std::string v = "-";
            try {
                v = format_fixed2(table.metric_average(el, m));
            } catch (const DataError&) {
            }
            num(v, 13);
        }
        out << "\n";
        out << "Avg. (" << el << "): " << format_fixed2(table.direction_average(el)) << "\n";
    }
    return out.str();
}

std::string emit_csv(const ReportTable& table) {
    std::ostringstream out;
    out << "edit_lang,test_lang,metric,value\n";
    for (const auto& [key, value] : table.cells()) {
        out << std::get<0>(key) << "," << std::get<1>(key) << "," << std::get<2>(key) << ","
            << format_fixed2(value) << "\n";
    }
    for (const std::string& el : table.edit_langs()) {
        for (const std::string& m : table.metrics_present()) {
            try {
                out << el << ",avg," << m << "," << format_fixed2(table.metric_average(el, m))
                    << "\n";
            } catch (const DataError&) {
            }
        }
        out << el << ",avg,all," << format_fixed2(table.direction_average(el)) << "\n";
    }
    return out.str();
}

std::string emit_json(const ReportTable& table) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& [key, value] : table.cells()) {
        nlohmann::ordered_json c;
        c["edit_lang"] = std::get<0>(key);
        c["test_lang"] = std::get<1>(key);
        c["metric"] = std::get<2>(key);
        c["value"] = format_fixed2(value);
        // full precision kept alongside so tables can be re-loaded losslessly
        c["value_raw"] = value;
        cells.push_back(c);
    }
    j["cells"] = cells;
    nlohmann::ordered_json averages = nlohmann::ordered_json::object();
    for (const std::string& el : table.edit_langs()) {
        nlohmann::ordered_json per = nlohmann::ordered_json::object();
        for (const std::string& m : table.metrics_present()) {
            try {
                per[m] = format_fixed2(table.metric_average(el, m));
            } catch (const DataError&) {
            }
        }
        per["all"] = format_fixed2(table.direction_average(el));
        averages[el] = per;
    }
    j["averages"] = averages;
    return j.dump(2) + "\n";
}

ReportTable parse_report_json(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::ordered_json::parse_error& e) {
        throw MalformedRecord(std::string("report is not valid JSON: ") + e.what());
    }
    if (!j.contains("cells") || !j.at("cells").is_array())
        throw SchemaViolation("cells", "missing or not an array");
    ReportTable table;
    for (const auto& c : j.at("cells")) {
        CellValue cell;
        cell.edit_lang = LanguageCode(c.at("edit_lang").get<std::string>());
        cell.test_lang = LanguageCode(c.at("test_lang").get<std::string>());
        cell.metric = c.at("metric").get<std::string>();
        cell.value = c.contains("value_raw") ? c.at("value_raw").get<double>()
                                             : std::stod(c.at("value").get<std::string>());
        table.set_cell(cell);
    }
    return table;
}

} // namespace xkde::metrics
