#include "metrics/metrics.hpp"

#include <cmath>
#include <optional>

#include "common/errors.hpp"
#include "common/parallel.hpp"
#include "common/text.hpp"

namespace xkde::metrics {

namespace {

const EditDescriptor& descriptor_for(const EvalCase& c, const LanguageCode& lang) {
    const auto it = c.edit.find(lang);
    if (it == c.edit.end()) {
        throw MissingLanguage("case '" + c.id + "' has no descriptor for language '" +
                              lang.str() + "'");
    }
    return it->second;
}

double score_one(const Decoder& model, const std::string& query,
                 const std::vector<std::string>& gold, const ScoreOptions& opts) {
    const double frac = token_match(model.decode(query), gold);
    if (!opts.exact_match) return frac;
    return frac == 1.0 ? 1.0 : 0.0;
}

// Shared reduction: per-case scores (optional = case skipped), then the mean.
MetricValue reduce(MetricName name, const LanguageCode& edit_lang, const LanguageCode& test_lang,
                   const std::vector<EvalCase>& cases, const ScoreOptions& opts,
                   const std::function<std::optional<double>(const EvalCase&)>& per_case) {
    if (cases.empty()) throw EmptyCases("no cases to evaluate");
    const std::size_t threads = opts.threads;
    const std::vector<std::optional<double>> scores =
        parallel_map<std::optional<double>>(cases.size(), threads,
                                            [&](std::size_t i) { return per_case(cases[i]); });
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : scores) {
        if (!s) continue;
        sum += *s;
        ++n;
    }
    if (n == 0) {
        throw AllCasesSkipped(std::string(to_string(name)) + ": no case provided any probe in '" +
                              test_lang.str() + "'");
    }
    MetricValue v;
    v.name = name;
    v.edit_lang = edit_lang;
    v.test_lang = test_lang;
    v.value = sum / static_cast<double>(n);
    v.n_cases = n;
    return v;
}

} // namespace

std::vector<std::string> gold_tokens(const std::string& text) {
    return split_tokens(text);
}

double token_match(const std::vector<std::string>& predicted,
                   const std::vector<std::string>& gold) {
    if (gold.empty()) throw EmptyGold("gold token list is empty");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (i < predicted.size() && predicted[i] == gold[i]) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

MetricValue reliability(const EditedModelProvider& edited, const std::vector<EvalCase>& cases,
                        const LanguageCode& edit_lang, const LanguageCode& test_lang,
                        const ScoreOptions& opts) {
    return reduce(MetricName::reliability, edit_lang, test_lang, cases, opts,
                  [&](const EvalCase& c) -> std::optional<double> {
                      descriptor_for(c, edit_lang); // both languages must exist
                      const EditDescriptor& d = descriptor_for(c, test_lang);
                      const auto model = edited(c);
                      return score_one(*model, d.prompt, gold_tokens(d.target_new), opts);
                  });
}

MetricValue generality(const EditedModelProvider& edited, const std::vector<EvalCase>& cases,
                       const LanguageCode& edit_lang, const LanguageCode& test_lang,
                       const ScoreOptions& opts) {
    return reduce(MetricName::generality, edit_lang, test_lang, cases, opts,
                  [&](const EvalCase& c) -> std::optional<double> {
                      descriptor_for(c, edit_lang);
                      const EditDescriptor& d = descriptor_for(c, test_lang);
                      const auto it = c.rephrases.find(test_lang);
                      if (it == c.rephrases.end() || it->second.empty()) return std::nullopt;
                      const auto model = edited(c);
                      const auto gold = gold_tokens(d.target_new);
                      double sum = 0.0;
                      for (const std::string& q : it->second) {
                          sum += score_one(*model, q, gold, opts);
                      }
                      return sum / static_cast<double>(it->second.size());
                  });
}

MetricValue locality(const EditedModelProvider& edited, const Decoder& base,
                     const std::vector<EvalCase>& cases, const LanguageCode& edit_lang,
                     const LanguageCode& test_lang, const ScoreOptions& opts) {
    return reduce(MetricName::locality, edit_lang, test_lang, cases, opts,
                  [&](const EvalCase& c) -> std::optional<double> {
                      descriptor_for(c, edit_lang);
                      const auto it = c.locality_probes.find(test_lang);
                      if (it == c.locality_probes.end()) {
                          throw MissingLanguage("case '" + c.id +
                                                "' has no locality probes for language '" +
                                                test_lang.str() + "'");
                      }
                      if (it->second.empty()) return std::nullopt;
                      const auto model = edited(c);
                      double sum = 0.0;
                      for (const Probe& p : it->second) {
                          const auto reference = base.decode(p.query);
                          const auto post = model->decode(p.query);
                          if (reference.empty()) {
                              // no reference behavior to disturb; agreement
                              // means the edited model is silent too
                              sum += post.empty() ? 1.0 : 0.0;
                              continue;
                          }
                          const double frac = token_match(post, reference);
                          sum += opts.exact_match ? (frac == 1.0 ? 1.0 : 0.0) : frac;
                      }
                      return sum / static_cast<double>(it->second.size());
                  });
}

MetricValue portability(const EditedModelProvider& edited, const std::vector<EvalCase>& cases,
                        const LanguageCode& edit_lang, const LanguageCode& test_lang,
                        const ScoreOptions& opts) {
    return reduce(MetricName::portability, edit_lang, test_lang, cases, opts,
                  [&](const EvalCase& c) -> std::optional<double> {
                      descriptor_for(c, edit_lang);
                      const auto it = c.portability_probes.find(test_lang);
                      if (it == c.portability_probes.end()) {
                          throw MissingLanguage("case '" + c.id +
                                                "' has no portability probes for language '" +
                                                test_lang.str() + "'");
                      }
                      if (it->second.empty()) return std::nullopt;
                      const auto model = edited(c);
                      double sum = 0.0;
                      for (const Probe& p : it->second) {
                          sum += score_one(*model, p.query, gold_tokens(p.answer), opts);
                      }
                      return sum / static_cast<double>(it->second.size());
                  });
}

} // namespace xkde::metrics
