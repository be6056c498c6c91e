#include "voiceclef/runconfig.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace voiceclef::cfg {

KeyValueTree KeyValueTree::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str());
}

KeyValueTree KeyValueTree::parse_string(const std::string& text) {
    KeyValueTree tree;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        tree.values_[section.empty() ? key : section + "." + key] = value;
    }
    return tree;
}

std::string KeyValueTree::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

long KeyValueTree::get_int(const std::string& key, long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const long v = std::stol(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + it->second + "'");
    }
}

double KeyValueTree::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + it->second + "'");
    }
}

bool KeyValueTree::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

RunConfig RunConfig::from_tree(const KeyValueTree& t) {
    RunConfig c;

    c.features.pre_emphasis_enabled = t.get_bool("features.pre_emphasis_enabled", c.features.pre_emphasis_enabled);
    c.features.pre_emphasis = t.get_double("features.pre_emphasis", c.features.pre_emphasis);
    c.features.win = static_cast<int>(t.get_int("features.win", c.features.win));
    c.features.inc = static_cast<int>(t.get_int("features.inc", c.features.inc));
    c.features.n_fft = static_cast<int>(t.get_int("features.n_fft", c.features.n_fft));
    c.features.n_mels = static_cast<int>(t.get_int("features.n_mels", c.features.n_mels));
    c.features.fmin = t.get_double("features.fmin", c.features.fmin);
    c.features.sample_rate = static_cast<int>(t.get_int("features.sample_rate", c.features.sample_rate));
    c.features.fmax = t.get_double("features.fmax", c.features.sample_rate / 2.0);
    c.features.n_mfcc = static_cast<int>(t.get_int("features.n_mfcc", c.features.n_mfcc));
    c.features.deltas = static_cast<int>(t.get_int("features.deltas", c.features.deltas));
    c.features.log_floor = t.get_double("features.log_floor", c.features.log_floor);

    c.vad.frame_len = static_cast<int>(t.get_int("vad.frame_len", c.vad.frame_len));
    c.vad.hop = static_cast<int>(t.get_int("vad.hop", c.vad.hop));
    c.vad.energy_ratio = t.get_double("vad.energy_ratio", c.vad.energy_ratio);
    c.vad.zcr_ceiling = t.get_double("vad.zcr_ceiling", c.vad.zcr_ceiling);
    c.vad.hangover_frames = static_cast<int>(t.get_int("vad.hangover_frames", c.vad.hangover_frames));
    c.vad.min_segment = t.get_double("vad.min_segment", c.vad.min_segment);

    c.arch.conv_channels = static_cast<int>(t.get_int("arch.conv_channels", c.arch.conv_channels));
    const std::string act = t.get_string("arch.conv_activation", "tanh");
    if (act == "tanh")
        c.arch.conv_activation = clf::ConvActivation::tanh;
    else if (act == "relu")
        c.arch.conv_activation = clf::ConvActivation::relu;
    else
        throw ConfigError("arch.conv_activation must be tanh or relu");
    c.arch.dropout_p = t.get_double("arch.dropout_p", c.arch.dropout_p);
    c.arch.hidden1 = static_cast<int>(t.get_int("arch.hidden1", c.arch.hidden1));
    c.arch.hidden2 = static_cast<int>(t.get_int("arch.hidden2", c.arch.hidden2));

    c.train.epochs = static_cast<int>(t.get_int("train.epochs", c.train.epochs));
    c.train.batch_size = static_cast<int>(t.get_int("train.batch_size", c.train.batch_size));
    c.train.early_stop_patience =
        static_cast<int>(t.get_int("train.early_stop_patience", c.train.early_stop_patience));
    const std::string opt = t.get_string("train.optimizer", "adam");
    if (opt == "adam")
        c.train.optimizer.kind = nn::OptimizerConfig::Kind::adam;
    else if (opt == "sgd")
        c.train.optimizer.kind = nn::OptimizerConfig::Kind::sgd;
    else
        throw ConfigError("train.optimizer must be adam or sgd");
    c.train.optimizer.lr = t.get_double("train.lr", c.train.optimizer.lr);

    c.seed = static_cast<std::uint64_t>(t.get_int("seed", 1));
    c.seed = static_cast<std::uint64_t>(t.get_int("train.seed", static_cast<long>(c.seed)));
    c.train.seed = c.seed;

    c.features.validate();
    c.vad.validate();
    c.train.validate();
    return c;
}

KeyValueTree RunConfig::to_tree() const {
    KeyValueTree t;
    auto num = [](double v) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    t.set("features.pre_emphasis_enabled", features.pre_emphasis_enabled ? "true" : "false");
    t.set("features.pre_emphasis", num(features.pre_emphasis));
    t.set("features.win", std::to_string(features.win));
    t.set("features.inc", std::to_string(features.inc));
    t.set("features.n_fft", std::to_string(features.n_fft));
    t.set("features.n_mels", std::to_string(features.n_mels));
    t.set("features.fmin", num(features.fmin));
    t.set("features.fmax", num(features.fmax));
    t.set("features.n_mfcc", std::to_string(features.n_mfcc));
    t.set("features.deltas", std::to_string(features.deltas));
    t.set("features.log_floor", num(features.log_floor));
    t.set("features.sample_rate", std::to_string(features.sample_rate));
    t.set("vad.frame_len", std::to_string(vad.frame_len));
    t.set("vad.hop", std::to_string(vad.hop));
    t.set("vad.energy_ratio", num(vad.energy_ratio));
    t.set("vad.zcr_ceiling", num(vad.zcr_ceiling));
    t.set("vad.hangover_frames", std::to_string(vad.hangover_frames));
    t.set("vad.min_segment", num(vad.min_segment));
    t.set("arch.conv_channels", std::to_string(arch.conv_channels));
    t.set("arch.conv_activation", arch.conv_activation == clf::ConvActivation::tanh ? "tanh" : "relu");
    t.set("arch.dropout_p", num(arch.dropout_p));
    t.set("arch.hidden1", std::to_string(arch.hidden1));
    t.set("arch.hidden2", std::to_string(arch.hidden2));
    t.set("train.epochs", std::to_string(train.epochs));
    t.set("train.batch_size", std::to_string(train.batch_size));
    t.set("train.early_stop_patience", std::to_string(train.early_stop_patience));
    t.set("train.optimizer", train.optimizer.kind == nn::OptimizerConfig::Kind::adam ? "adam" : "sgd");
    t.set("train.lr", num(train.optimizer.lr));
    t.set("seed", std::to_string(seed));
    return t;
}

void write_provenance(const std::filesystem::path& output, const std::string& command,
                      const RunConfig& config, const std::map<std::string, std::string>& extra) {
    nlohmann::json j;
    j["tool"] = "voiceclef";
    j["version"] = VOICECLEF_VERSION;
    j["command"] = command;
    j["seed"] = config.seed;
    nlohmann::json cfg_json;
    const KeyValueTree tree = config.to_tree();
    for (const auto& [key, value] : tree.values()) cfg_json[key] = value;
    j["config"] = std::move(cfg_json);
    for (const auto& [key, value] : extra) j[key] = value;

    const std::filesystem::path path = output.string() + ".provenance.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace voiceclef::cfg
