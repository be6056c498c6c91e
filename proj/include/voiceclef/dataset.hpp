#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "voiceclef/common.hpp"
#include "voiceclef/vad.hpp"

namespace voiceclef::data {

struct MissingColumn : Error {
    using Error::Error;
};
struct UnknownLabel : Error {
    using Error::Error;
};
struct DuplicatePath : Error {
    using Error::Error;
};
struct UnreadableFile : Error {
    using Error::Error;
};
struct EmptyResult : Error {
    using Error::Error;
};
struct RootNotFound : Error {
    using Error::Error;
};
struct NoMatchingFiles : Error {
    using Error::Error;
};
struct UnmappedDiagnosis : Error {
    using Error::Error;
};

struct ManifestEntry {
    std::string path;        // relative to the manifest root
    std::string patient_id;
    std::string label;
    std::string phoneme;          // ASCII-folded tag
    std::string phoneme_display;  // original glyph as read
};

struct Dataset {
    std::vector<ManifestEntry> entries;
    std::vector<std::string> label_names;  // first-appearance order unless configured
    std::filesystem::path root;

    int label_index(const std::string& name) const;
};

/// Folds phoneme tags to portable ASCII ("ü" -> "v"), lowercases and trims.
std::string fold_phoneme(std::string_view tag);

struct LoadOptions {
    std::vector<std::string> expected_labels;  // empty = infer from the file
    bool strict = false;                       // strict checks that audio files exist
};

/// Parses a manifest CSV with header `path,patient_id,label,phoneme`
/// (an optional phoneme_display column is honored). Entries keep file order.
Dataset load_manifest(const std::filesystem::path& csv_path, const LoadOptions& options = {});

/// Writes entries back in manifest CSV form (with phoneme_display).
void write_manifest(const Dataset& ds, const std::filesystem::path& csv_path);

/// Entries whose folded phoneme tag is in the set; label_names preserved.
Dataset filter_phonemes(const Dataset& ds, const std::set<std::string>& phonemes,
                        bool strict = false);

struct AvfadImportConfig {
    std::set<std::string> vowels;                    // folded tags, e.g. {"a","i","u"}
    std::map<std::string, std::string> label_map;    // diagnosis directory -> class label
    std::filesystem::path out_dir;                   // receives clips/ and the manifest
    vad::VadConfig vad;
    int sample_rate = 16000;
    double clip_len = 0.5;
};

/// Imports an AVFAD-style tree laid out as <root>/<diagnosis>/<recording>.wav
/// where the recording stem is "<patient>_<phoneme>[_anything]". Matching
/// recordings are resampled, VAD-segmented into fixed-length clips written
/// under out_dir/clips, and a manifest.generated.csv plus provenance sidecar
/// land in out_dir. Scanning order is lexicographic, so reruns over an
/// unchanged tree are byte-identical.
Dataset import_avfad(const std::filesystem::path& root, const AvfadImportConfig& cfg);

}  // namespace voiceclef::data
