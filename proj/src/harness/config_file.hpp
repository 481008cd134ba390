#pragma once

#include <string>
#include <vector>

#include "data/assemble.hpp"
#include "harness/harness.hpp"
#include "toyworld/toyworld.hpp"
#include "train/tlpo.hpp"
#include "train/xeit.hpp"

namespace xkde::harness {

// How generation commands reach the chat service. kind is "mock" (the
// offline deterministic stand-in) or "http"; a non-empty cache_dir wraps
// either transport in the content-addressed cache with retries.
struct ClientSpec {
    std::string kind = "mock";
    std::string cache_dir;
    std::string endpoint;
    std::string path = "/v1/chat/completions";
    int timeout_s = 30;
    std::string api_key_env = "XKDE_API_KEY";
};

struct BuildSection {
    data::BuildConfig config; // quotas defaulted from `scale` when absent
    std::size_t scale = 1000; // divisor applied to the full-scale quota grid
    std::string cases;        // evaluation-case file the builder draws from
    std::string templates_dir = "prompts";
    std::string out;          // dataset path; default <output_dir>/dataset.jsonl
    ClientSpec client;
};

struct TrainSection {
    train::TrainConfig config;
    std::string dataset;
    std::string vocab;
    std::string model_in;  // empty = train a fresh model
    std::string model_out; // default <output_dir>/xeit.ckpt
    int hidden = 64;       // width of a fresh model
};

struct TlpoSection {
    train::TlpoConfig config;
    std::string cases;
    std::string vocab;
    std::string model_in;
    std::string model_out;    // default <output_dir>/tlpo.ckpt
    std::string equivalences; // translation-equivalence groups (optional)
    std::string pairs_out;    // default <output_dir>/pairs.jsonl
    double aligner_beta = 8.0;
};

struct WorldSection {
    toyworld::WorldConfig config;
};

struct AblateSection {
    std::string base_checkpoint;
    std::string vocab;
    std::string training;
    std::string cases;
    std::string equivalences;
    double aligner_beta = 8.0;
    std::vector<AblationVariant> variants; // default ladder when absent
};

// One declarative document drives every subcommand. Sections are optional
// and default-constructed when absent; keys mirror the config structs they
// fill; unknown keys are rejected with their full path.
struct FileConfig {
    RunConfig run;
    BuildSection build;
    TrainSection train;
    TlpoSection tlpo;
    WorldSection world;
    AblateSection ablate;
};

// Throws ConfigError on malformed JSON, unknown keys, or ill-typed values.
FileConfig parse_config_text(const std::string& text, const std::string& origin = "config");
FileConfig load_config_file(const std::string& path); // empty path = all defaults

// Applies `dotted.key = value` onto a config document (value parsed as JSON
// when it scans, otherwise taken as a string) and returns the new document.
std::string apply_override(const std::string& doc_text, const std::string& dotted_key,
                           const std::string& value);

// The whole document with every key at its default — the starting point for
// hand-written configs (quota and variant grids are omitted, meaning "use
// the built-in defaults").
std::string default_config_text();

// full, stage-1 only, untrained base, and the two language-composition drops.
std::vector<AblationVariant> default_ablation_variants();

} // namespace xkde::harness
