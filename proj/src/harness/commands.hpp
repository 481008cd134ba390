#pragma once

#include <string>

#include "harness/config_file.hpp"

namespace xkde::harness {

// One function per CLI subcommand. Each reads its slice of the config,
// runs, and writes its artifacts plus a manifest (inputs, seeds, content
// hashes) under run.output_dir. Failures throw the usual error taxonomy;
// the C wrapper maps it onto process exit codes.
void command_synth_cases(const FileConfig& cfg);
void command_build_data(const FileConfig& cfg);
void command_train_xeit(const FileConfig& cfg);
void command_train_tlpo(const FileConfig& cfg);
void command_eval(const FileConfig& cfg);
void command_ablate(const FileConfig& cfg);

// Re-renders a report previously written as JSON. format: text | csv | json.
std::string render_report(const std::string& report_json_path, const std::string& format);

} // namespace xkde::harness
