#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "voiceclef/classifier.hpp"
#include "voiceclef/common.hpp"
#include "voiceclef/features.hpp"
#include "voiceclef/vad.hpp"

namespace voiceclef::cfg {

struct ConfigError : Error {
    using Error::Error;
};

/// Flat dotted-key view of an INI-style file:
///   [features]
///   n_mfcc = 40     ->  "features.n_mfcc" = "40"
/// Lines starting with # or ; are comments.
class KeyValueTree {
  public:
    static KeyValueTree parse_file(const std::filesystem::path& path);
    static KeyValueTree parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

/// Fully resolved configuration for a pipeline run. Defaults match the
/// shipped 16 kHz / 0.5 s geometry; a config file and flag overrides refine it.
struct RunConfig {
    dsp::FeatureConfig features;
    vad::VadConfig vad;
    clf::ArchConfig arch;
    clf::TrainConfig train;
    std::uint64_t seed = 1;

    static RunConfig from_tree(const KeyValueTree& tree);
    KeyValueTree to_tree() const;
};

/// Writes `<output>.provenance.json` recording tool version, command, seed
/// and the resolved config. Content is deterministic (no timestamps) so
/// reruns with identical inputs produce identical sidecars.
void write_provenance(const std::filesystem::path& output, const std::string& command,
                      const RunConfig& config,
                      const std::map<std::string, std::string>& extra = {});

}  // namespace voiceclef::cfg
