#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace xkde {

// Line-record codecs. A dataset file is UTF-8, one record per line, keys in
// the fixed order {id, source_tag, edit_lang, query_lang, scope, with_edit,
// edit_text, query, answer, quality}. serialize_sample emits the canonical
// form; parse_sample(serialize_sample(s)) == s and re-serializing a canonical
// line reproduces it byte-exactly.
//
// strict=true rejects unknown fields (SchemaViolation naming the field);
// strict=false preserves them so they survive a round trip.
ParallelSample parse_sample(const std::string& record, bool strict = true);
std::string serialize_sample(const ParallelSample& sample);

std::vector<ParallelSample> read_samples(const std::string& path, bool strict = true);
void write_samples(const std::string& path, const std::vector<ParallelSample>& samples);

// Streaming read: calls fn per record without building the full vector.
void for_each_sample(const std::string& path,
                     const std::function<void(const ParallelSample&)>& fn, bool strict = true);

// Evaluation-case files use the same one-record-per-line container.
EvalCase parse_case(const std::string& record);
std::string serialize_case(const EvalCase& c);
std::vector<EvalCase> read_cases(const std::string& path);
void write_cases(const std::string& path, const std::vector<EvalCase>& cases);

// Write a whole file atomically (temp file + rename) so concurrent readers
// never observe a partial write.
void atomic_write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

} // namespace xkde
