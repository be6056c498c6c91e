#include "voiceclef/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "voiceclef/audio.hpp"

namespace voiceclef::data {

int Dataset::label_index(const std::string& name) const {
    const auto it = std::find(label_names.begin(), label_names.end(), name);
    return it == label_names.end() ? -1 : static_cast<int>(it - label_names.begin());
}

std::string fold_phoneme(std::string_view tag) {
    std::string out;
    out.reserve(tag.size());
    for (std::size_t i = 0; i < tag.size();) {
        const unsigned char c = static_cast<unsigned char>(tag[i]);
        if (c == 0xC3 && i + 1 < tag.size()) {
            const unsigned char d = static_cast<unsigned char>(tag[i + 1]);
            if (d == 0xBC || d == 0x9C) {  // ü / Ü
                out.push_back('v');
                i += 2;
                continue;
            }
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
        ++i;
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

Dataset load_manifest(const std::filesystem::path& csv_path, const LoadOptions& options) {
    std::ifstream in(csv_path);
    if (!in) throw UnreadableFile("cannot open manifest: " + csv_path.string());

    std::string line;
    if (!std::getline(in, line)) throw MissingColumn("manifest has no header row");
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return static_cast<long>(i);
        return -1l;
    };
    const long col_path = column("path");
    const long col_patient = column("patient_id");
    const long col_label = column("label");
    const long col_phoneme = column("phoneme");
    const long col_display = column("phoneme_display");
    for (const auto& [name, col] : {std::pair<const char*, long>{"path", col_path},
                                    {"patient_id", col_patient},
                                    {"label", col_label},
                                    {"phoneme", col_phoneme}})
        if (col < 0) throw MissingColumn(std::string("manifest is missing column '") + name + "'");

    Dataset ds;
    ds.root = csv_path.parent_path();
    ds.label_names = options.expected_labels;
    std::set<std::string> seen_paths;

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        auto field = [&](long col) {
            return col >= 0 && static_cast<std::size_t>(col) < fields.size()
                       ? trim(fields[static_cast<std::size_t>(col)])
                       : std::string();
        };
        ManifestEntry e;
        e.path = field(col_path);
        e.patient_id = field(col_patient);
        e.label = field(col_label);
        e.phoneme_display = field(col_display >= 0 ? col_display : col_phoneme);
        e.phoneme = fold_phoneme(field(col_phoneme));
        if (e.path.empty()) throw MissingColumn("row " + std::to_string(row) + ": empty path");

        if (!seen_paths.insert(e.path).second)
            throw DuplicatePath("row " + std::to_string(row) + ": duplicate path " + e.path);
        if (!options.expected_labels.empty()) {
            if (ds.label_index(e.label) < 0)
                throw UnknownLabel("row " + std::to_string(row) + ": unknown label '" + e.label + "'");
        } else if (ds.label_index(e.label) < 0) {
            ds.label_names.push_back(e.label);
        }
        if (options.strict && !std::filesystem::exists(ds.root / e.path))
            throw UnreadableFile("row " + std::to_string(row) + ": missing file " + e.path);
        ds.entries.push_back(std::move(e));
    }
    return ds;
}

void write_manifest(const Dataset& ds, const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + csv_path.string());
    out << "path,patient_id,label,phoneme,phoneme_display\n";
    for (const ManifestEntry& e : ds.entries)
        out << e.path << ',' << e.patient_id << ',' << e.label << ',' << e.phoneme << ','
            << e.phoneme_display << '\n';
    if (!out) throw Error("write failed: " + csv_path.string());
}

Dataset filter_phonemes(const Dataset& ds, const std::set<std::string>& phonemes, bool strict) {
    if (phonemes.empty()) throw Error("filter_phonemes: empty phoneme set");
    Dataset out;
    out.label_names = ds.label_names;
    out.root = ds.root;
    for (const ManifestEntry& e : ds.entries)
        if (phonemes.count(e.phoneme)) out.entries.push_back(e);
    if (strict && out.entries.empty())
        throw EmptyResult("filter_phonemes: no entries match the phoneme set");
    return out;
}

Dataset import_avfad(const std::filesystem::path& root, const AvfadImportConfig& cfg) {
    if (!std::filesystem::is_directory(root))
        throw RootNotFound("import root not found: " + root.string());
    if (cfg.vowels.empty()) throw Error("import: vowel set is empty");

    // lexicographically sorted scan keeps reruns byte-identical
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".wav") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    Dataset ds;
    ds.root = cfg.out_dir;
    std::filesystem::create_directories(cfg.out_dir / "clips");

    std::size_t matched = 0;
    for (const auto& file : files) {
        const auto rel = std::filesystem::relative(file, root);
        if (rel.begin() == rel.end() || std::next(rel.begin()) == rel.end())
            continue;  // files directly under root carry no diagnosis directory
        const std::string diagnosis = rel.begin()->string();

        const std::string stem = file.stem().string();
        const auto sep = stem.find('_');
        if (sep == std::string::npos) continue;
        const std::string patient = stem.substr(0, sep);
        const auto rest = stem.substr(sep + 1);
        const std::string phoneme = fold_phoneme(rest.substr(0, rest.find('_')));
        if (!cfg.vowels.count(phoneme)) continue;
        ++matched;

        const auto map_it = cfg.label_map.find(diagnosis);
        if (map_it == cfg.label_map.end())
            throw UnmappedDiagnosis("no class label mapped for diagnosis '" + diagnosis + "'");
        const std::string& label = map_it->second;
        if (ds.label_index(label) < 0) ds.label_names.push_back(label);

        audio::AudioClip clip = audio::resample(audio::read_wav(file), cfg.sample_rate);
        const auto segments = clip.samples.size() >= static_cast<std::size_t>(cfg.vad.frame_len)
                                  ? vad::detect_voice_activity(clip, cfg.vad)
                                  : std::vector<vad::Segment>{};
        for (const audio::AudioClip& piece : vad::segment_clip(clip, segments, cfg.clip_len)) {
            const std::string name = piece.source_id + ".wav";
            audio::write_wav(piece, cfg.out_dir / "clips" / name);
            ManifestEntry e;
            e.path = "clips/" + name;
            e.patient_id = patient;
            e.label = label;
            e.phoneme = phoneme;
            e.phoneme_display = phoneme;
            ds.entries.push_back(std::move(e));
        }
    }
    if (matched == 0) throw NoMatchingFiles("no recordings matched the vowel filter under " +
                                            root.string());

    write_manifest(ds, cfg.out_dir / "manifest.generated.csv");

    nlohmann::json sidecar;
    sidecar["tool"] = "voiceclef";
    sidecar["version"] = VOICECLEF_VERSION;
    sidecar["command"] = "import-avfad";
    sidecar["root"] = root.string();
    sidecar["vowels"] = std::vector<std::string>(cfg.vowels.begin(), cfg.vowels.end());
    sidecar["sample_rate"] = cfg.sample_rate;
    sidecar["clip_len"] = cfg.clip_len;
    std::ofstream side(cfg.out_dir / "manifest.generated.csv.provenance.json", std::ios::trunc);
    side << sidecar.dump(2) << "\n";

    return ds;
}

}  // namespace voiceclef::data
