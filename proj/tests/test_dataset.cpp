#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "support/testutil.hpp"
#include "voiceclef/dataset.hpp"

using namespace voiceclef;

namespace {

const char* kDiseases[4] = {"spasmodic_dysphonia", "vocal_cord_paralysis", "vocal_cord_nodules",
                            "vocal_cord_polyps"};
const int kCounts[4] = {36, 54, 33, 60};
const char* kPhonemes[8] = {"a", "o", "e", "i", "u", "v", "w", "ei"};

/// Manifest mirroring the clinical collection layout: per class, the same
/// clip count for each of the eight phonemes.
std::filesystem::path write_table_mirror(const testutil::TempDir& dir) {
    const auto path = dir.path() / "manifest.csv";
    std::ofstream out(path);
    out << "path,patient_id,label,phoneme\n";
    for (int cls = 0; cls < 4; ++cls)
        for (const char* phoneme : kPhonemes)
            for (int i = 0; i < kCounts[cls]; ++i)
                out << "clips/c" << cls << "_" << phoneme << "_" << i << ".wav,patient"
                    << cls << "_" << i << "," << kDiseases[cls] << "," << phoneme << "\n";
    return path;
}

}  // namespace

TEST_CASE("fold_phoneme: umlaut folding, case and whitespace") {
    CHECK(data::fold_phoneme("a") == "a");
    CHECK(data::fold_phoneme("\xC3\xBC") == "v");  // ü
    CHECK(data::fold_phoneme("\xC3\x9C") == "v");  // Ü
    CHECK(data::fold_phoneme(" EI ") == "ei");
}

TEST_CASE("load_manifest: four rows, one per class") {
    testutil::TempDir dir("manifest");
    const auto path = dir.path() / "m.csv";
    {
        std::ofstream out(path);
        out << "path,patient_id,label,phoneme\n";
        out << "a.wav,p1,polyp,a\n";
        out << "b.wav,p2,nodule,a\n";
        out << "c.wav,p3,paralysis,i\n";
        out << "d.wav,p4,spasmodic,u\n";
    }
    const auto ds = data::load_manifest(path);
    REQUIRE(ds.entries.size() == 4);
    CHECK(ds.label_names == std::vector<std::string>{"polyp", "nodule", "paralysis", "spasmodic"});
    CHECK(ds.entries[0].path == "a.wav");
    CHECK(ds.entries[3].phoneme == "u");
    CHECK(ds.label_index("paralysis") == 2);
}

TEST_CASE("load_manifest: error taxonomy") {
    testutil::TempDir dir("manifest");

    const auto unknown = dir.path() / "unknown.csv";
    {
        std::ofstream out(unknown);
        out << "path,patient_id,label,phoneme\n";
        out << "a.wav,p1,cyst,a\n";
    }
    data::LoadOptions opts;
    opts.expected_labels = {kDiseases[0], kDiseases[1], kDiseases[2], kDiseases[3]};
    CHECK_THROWS_WITH_AS(data::load_manifest(unknown, opts),
                         doctest::Contains("row 2"), data::UnknownLabel);

    const auto duplicate = dir.path() / "duplicate.csv";
    {
        std::ofstream out(duplicate);
        out << "path,patient_id,label,phoneme\n";
        out << "a.wav,p1,polyp,a\n";
        out << "a.wav,p2,polyp,a\n";
    }
    CHECK_THROWS_AS(data::load_manifest(duplicate), data::DuplicatePath);

    const auto missing = dir.path() / "missing.csv";
    {
        std::ofstream out(missing);
        out << "path,patient_id,label\n";
        out << "a.wav,p1,polyp\n";
    }
    CHECK_THROWS_AS(data::load_manifest(missing), data::MissingColumn);

    const auto ghost = dir.path() / "ghost.csv";
    {
        std::ofstream out(ghost);
        out << "path,patient_id,label,phoneme\n";
        out << "nonexistent.wav,p1,polyp,a\n";
    }
    data::LoadOptions strict;
    strict.strict = true;
    CHECK_THROWS_AS(data::load_manifest(ghost, strict), data::UnreadableFile);
    CHECK(data::load_manifest(ghost).entries.size() == 1);  // lenient mode passes
}

TEST_CASE("table mirror: totals, phoneme filters and union property") {
    testutil::TempDir dir("mirror");
    const auto path = write_table_mirror(dir);
    const auto ds = data::load_manifest(path);

    REQUIRE(ds.entries.size() == 1464);
    std::map<std::string, int> per_class;
    for (const auto& e : ds.entries) ++per_class[e.label];
    CHECK(per_class[kDiseases[0]] == 288);
    CHECK(per_class[kDiseases[1]] == 432);
    CHECK(per_class[kDiseases[2]] == 264);
    CHECK(per_class[kDiseases[3]] == 480);

    const auto only_a = data::filter_phonemes(ds, {"a"});
    CHECK(only_a.entries.size() == 183);  // 36 + 54 + 33 + 60
    CHECK(only_a.label_names == ds.label_names);

    const auto ternary = data::filter_phonemes(ds, {"a", "i", "u"});
    CHECK(ternary.entries.size() == 3 * 183);

    std::set<std::string> all(std::begin(kPhonemes), std::end(kPhonemes));
    const auto identity = data::filter_phonemes(ds, all);
    CHECK(identity.entries.size() == ds.entries.size());

    // union equals concatenation of disjoint filters as entry sets
    const auto a_set = data::filter_phonemes(ds, {"a"});
    const auto i_set = data::filter_phonemes(ds, {"i"});
    const auto union_set = data::filter_phonemes(ds, {"a", "i"});
    CHECK(union_set.entries.size() == a_set.entries.size() + i_set.entries.size());

    CHECK_THROWS_AS(data::filter_phonemes(ds, {"zz"}, true), data::EmptyResult);
}

TEST_CASE("load_manifest: umlaut phoneme tags fold but keep their display form") {
    testutil::TempDir dir("umlaut");
    const auto path = dir.path() / "m.csv";
    {
        std::ofstream out(path);
        out << "path,patient_id,label,phoneme\n";
        out << "a.wav,p1,polyp,\xC3\xBC\n";
    }
    const auto ds = data::load_manifest(path);
    REQUIRE(ds.entries.size() == 1);
    CHECK(ds.entries[0].phoneme == "v");
    CHECK(ds.entries[0].phoneme_display == "\xC3\xBC");
    CHECK(data::filter_phonemes(ds, {"v"}).entries.size() == 1);
}

TEST_CASE("manifest re-validation is idempotent") {
    testutil::TempDir dir("idem");
    const auto path = write_table_mirror(dir);
    const auto ds = data::load_manifest(path);
    data::write_manifest(ds, dir.path() / "copy.csv");
    const auto again = data::load_manifest(dir.path() / "copy.csv");
    REQUIRE(again.entries.size() == ds.entries.size());
    for (std::size_t i = 0; i < ds.entries.size(); ++i) {
        CHECK(again.entries[i].path == ds.entries[i].path);
        CHECK(again.entries[i].label == ds.entries[i].label);
    }
}

namespace {

void write_tone_wav(const std::filesystem::path& path, double seconds, double freq = 220.0) {
    audio::AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(static_cast<std::size_t>(seconds * 16000));
    for (std::size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = static_cast<float>(
            0.5 * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / 16000.0));
    audio::write_wav(clip, path);
}

}  // namespace

TEST_CASE("import_avfad: segmentation arithmetic and determinism") {
    testutil::TempDir dir("avfad");
    const auto root = dir.path() / "corpus";
    std::filesystem::create_directories(root / "dysphonia");
    write_tone_wav(root / "dysphonia" / "P001_a.wav", 2.1);

    data::AvfadImportConfig cfg;
    cfg.vowels = {"a", "i", "u"};
    cfg.label_map = {{"dysphonia", "spasmodic_dysphonia"}};
    cfg.out_dir = dir.path() / "imported";

    const auto ds = data::import_avfad(root, cfg);
    CHECK(ds.entries.size() == 4);  // floor(2.1 / 0.5)
    CHECK(ds.label_names == std::vector<std::string>{"spasmodic_dysphonia"});
    CHECK(ds.entries[0].patient_id == "P001");
    CHECK(ds.entries[0].phoneme == "a");
    for (const auto& e : ds.entries)
        CHECK(std::filesystem::exists(cfg.out_dir / e.path));

    std::ifstream first(cfg.out_dir / "manifest.generated.csv");
    std::string bytes1((std::istreambuf_iterator<char>(first)), std::istreambuf_iterator<char>());
    data::import_avfad(root, cfg);
    std::ifstream second(cfg.out_dir / "manifest.generated.csv");
    std::string bytes2((std::istreambuf_iterator<char>(second)), std::istreambuf_iterator<char>());
    CHECK(bytes1 == bytes2);
    CHECK(std::filesystem::exists(cfg.out_dir / "manifest.generated.csv.provenance.json"));
}

TEST_CASE("import_avfad: error taxonomy") {
    testutil::TempDir dir("avfad_err");
    data::AvfadImportConfig cfg;
    cfg.vowels = {"a"};
    cfg.label_map = {{"known", "label"}};
    cfg.out_dir = dir.path() / "out";

    CHECK_THROWS_AS(data::import_avfad(dir.path() / "nope", cfg), data::RootNotFound);

    const auto empty_root = dir.path() / "empty";
    std::filesystem::create_directories(empty_root);
    CHECK_THROWS_AS(data::import_avfad(empty_root, cfg), data::NoMatchingFiles);

    const auto unmapped_root = dir.path() / "unmapped";
    std::filesystem::create_directories(unmapped_root / "mystery");
    write_tone_wav(unmapped_root / "mystery" / "P002_a.wav", 1.0);
    CHECK_THROWS_AS(data::import_avfad(unmapped_root, cfg), data::UnmappedDiagnosis);

    // vowel filter excludes everything present
    const auto vowelless_root = dir.path() / "vowelless";
    std::filesystem::create_directories(vowelless_root / "known");
    write_tone_wav(vowelless_root / "known" / "P003_o.wav", 1.0);
    CHECK_THROWS_AS(data::import_avfad(vowelless_root, cfg), data::NoMatchingFiles);
}
