#include "absa/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "absa/errors.hpp"
#include "absa/hash.hpp"

extern char** environ;

namespace absa {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// strips a trailing comment, honoring quoted strings
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
        if (c == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

json parse_toml_scalar(const std::string& raw, std::size_t lineno);

json parse_toml_value(const std::string& raw, std::size_t lineno) {
    std::string v = trim(raw);
    if (v.empty()) throw ConfigError("toml line " + std::to_string(lineno) + ": missing value");
    if (v.front() == '[') {
        if (v.back() != ']')
            throw ConfigError("toml line " + std::to_string(lineno) +
                              ": arrays must close on the same line");
        json arr = json::array();
        std::string inner = v.substr(1, v.size() - 2);
        std::string item;
        bool in_str = false;
        int depth = 0;
        for (std::size_t i = 0; i < inner.size(); ++i) {
            char c = inner[i];
            if (c == '"' && (i == 0 || inner[i - 1] != '\\')) in_str = !in_str;
            if (!in_str && c == '[') ++depth;
            if (!in_str && c == ']') --depth;
            if (c == ',' && !in_str && depth == 0) {
                if (!trim(item).empty()) arr.push_back(parse_toml_value(item, lineno));
                item.clear();
            } else {
                item.push_back(c);
            }
        }
        if (!trim(item).empty()) arr.push_back(parse_toml_value(item, lineno));
        return arr;
    }
    return parse_toml_scalar(v, lineno);
}

json parse_toml_scalar(const std::string& v, std::size_t lineno) {
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw ConfigError("toml line " + std::to_string(lineno) + ": unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            char c = v[i];
            if (c == '\\' && i + 2 < v.size()) {
                char n = v[++i];
                switch (n) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default:
                        throw ConfigError("toml line " + std::to_string(lineno) +
                                          ": unsupported escape \\" + std::string(1, n));
                }
            } else {
                out.push_back(c);
            }
        }
        return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;
    bool floaty = v.find_first_of(".eE") != std::string::npos &&
                  v.find_first_not_of("+-0123456789.eE") == std::string::npos;
    char* end = nullptr;
    if (!floaty) {
        long long i = std::strtoll(v.c_str(), &end, 10);
        if (end && *end == '\0') return i;
    }
    double d = std::strtod(v.c_str(), &end);
    if (end && *end == '\0') return d;
    throw ConfigError("toml line " + std::to_string(lineno) + ": cannot parse value '" + v + "'");
}

json* navigate(json& root, const std::string& dotted, std::size_t lineno) {
    json* cur = &root;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = dotted.find('.', start);
        std::string part = trim(dotted.substr(start, dot - start));
        if (part.empty())
            throw ConfigError("toml line " + std::to_string(lineno) + ": empty key component");
        if (dot == std::string::npos) {
            return &(*cur)[part];
        }
        cur = &(*cur)[part];
        if (!cur->is_object() && !cur->is_null())
            throw ConfigError("toml line " + std::to_string(lineno) + ": '" + part +
                              "' is not a table");
        start = dot + 1;
    }
}

}  // namespace

json parse_toml(const std::string& text) {
    json root = json::object();
    json* table = &root;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("toml line " + std::to_string(lineno) + ": bad table header");
            std::string name = trim(line.substr(1, line.size() - 2));
            table = navigate(root, name, lineno);
            if (table->is_null()) *table = json::object();
            continue;
        }
        std::size_t eq = std::string::npos;
        bool in_str = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '=' && !in_str) {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos)
            throw ConfigError("toml line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        json* slot = navigate(*table, key, lineno);
        *slot = parse_toml_value(line.substr(eq + 1), lineno);
    }
    return root;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            return json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError("config " + path + ": " + e.what());
        }
    }
    return parse_toml(text);
}

json default_config() {
    return json{
        {"run", {{"seed", 42}, {"out_dir", "runs/out"}, {"strict", true}, {"stage_name", ""}}},
        {"data",
         {{"path", ""},
          {"hierarchy", ""},
          {"input_mode", "sentence_target"},
          {"target", "aspect_l2"},
          {"val_fraction", 0.1},
          {"val_on_train", false},
          {"split_seed", 42},
          {"max_tokens", 400}}},
        {"vocab", {{"max_size", 30000}, {"min_freq", 2}}},
        {"model",
         {{"embed_dim", 64},
          {"hidden_dim", 128},
          {"num_layers", 3},
          {"weight_drop", 0.5},
          {"embed_drop", 0.1},
          {"variational_drop", 0.3},
          {"tie_decoder", true},
          {"head_hidden", 64},
          {"transfer_head_hidden", false}}},
        {"train",
         {{"epochs", 4},
          {"batch_size", 16},
          {"bptt_len", 20},
          {"lr_max", 0.004},
          {"cut_frac", 0.1},
          {"ratio", 32.0},
          {"disc_decay", 2.6},
          {"strategy", "all_at_once"},
          {"chain_thaw_k", 0},
          {"optimizer", "adam"},
          {"momentum", 0.9},
          {"clip_norm", 0.25},
          {"patience", 3},
          {"min_delta", 1e-4},
          {"max_epochs_per_phase", 8}}},
        {"curve",
         {{"fractions", {0.25, 0.5, 1.0}},
          {"seeds", {1, 2, 3}},
          {"jobs", 1},
          {"stage", "target_classify"}}},
    };
}

namespace {

void merge_checked(json& base, const json& overlay, const std::string& prefix) {
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key()))
            throw ConfigError("unknown config key '" + path + "'");
        json& slot = base[it.key()];
        if (slot.is_object()) {
            if (!it->is_object())
                throw ConfigError("config key '" + path + "' must be a table");
            merge_checked(slot, *it, path);
        } else {
            if (it->is_object())
                throw ConfigError("config key '" + path + "' is not a table");
            slot = *it;
        }
    }
}

void apply_dotted(json& base, const std::string& dotted, const json& value) {
    json* cur = &base;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = dotted.find('.', start);
        std::string part = dotted.substr(start, dot - start);
        if (!cur->contains(part)) throw ConfigError("unknown config key '" + dotted + "'");
        if (dot == std::string::npos) {
            if ((*cur)[part].is_object())
                throw ConfigError("config key '" + dotted + "' is a table, not a value");
            (*cur)[part] = value;
            return;
        }
        cur = &(*cur)[part];
        if (!cur->is_object()) throw ConfigError("config key '" + dotted + "' is not a table");
        start = dot + 1;
    }
}

}  // namespace

std::map<std::string, std::string> env_overrides() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        std::string entry(*e);
        if (entry.rfind("ABSA_", 0) != 0) continue;
        std::size_t eq = entry.find('=');
        if (eq == std::string::npos) continue;
        out[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
    return out;
}

json resolve_config(const json& file_config,
                    const std::map<std::string, std::string>& env,
                    const std::vector<std::pair<std::string, std::string>>& flag_sets) {
    json config = default_config();
    if (!file_config.is_null()) merge_checked(config, file_config, "");

    for (const auto& [name, raw] : env) {
        std::string rest = name.substr(5);  // strip ABSA_
        std::size_t us = rest.find('_');
        if (us == std::string::npos)
            throw ConfigError("environment override " + name + " needs SECTION_KEY form");
        std::string section = rest.substr(0, us);
        std::string key = rest.substr(us + 1);
        for (auto& c : section) c = static_cast<char>(std::tolower(c));
        for (auto& c : key) c = static_cast<char>(std::tolower(c));
        apply_dotted(config, section + "." + key, parse_toml_value(raw, 0));
    }

    for (const auto& [key, raw] : flag_sets)
        apply_dotted(config, key, parse_toml_value(raw, 0));
    return config;
}

std::string config_hash(const json& config) {
    json c = config;
    // the output directory is not an input: runs into different directories
    // must hash identically
    if (c.contains("run") && c["run"].is_object()) c["run"].erase("out_dir");
    return hex64(fnv1a(c.dump()));
}

StagePlan plan_from_config(const json& config, StageKind kind) {
    StagePlan plan;
    plan.kind = kind;
    try {
        const json& run = config.at("run");
        plan.seed = run.at("seed").get<std::uint64_t>();
        plan.strict_loading = run.at("strict").get<bool>();
        plan.stage_name = run.at("stage_name").get<std::string>();

        const json& data = config.at("data");
        plan.dataset_path = data.at("path").get<std::string>();
        plan.hierarchy_path = data.at("hierarchy").get<std::string>();
        plan.input_mode = input_mode_from_string(data.at("input_mode").get<std::string>());
        plan.target_field = target_field_from_string(data.at("target").get<std::string>());
        plan.val_fraction = data.at("val_fraction").get<double>();
        plan.val_on_train = data.at("val_on_train").get<bool>();
        plan.split_seed = data.at("split_seed").get<std::uint64_t>();
        plan.max_tokens = data.at("max_tokens").get<std::size_t>();

        const json& vocab = config.at("vocab");
        plan.vocab_max_size = vocab.at("max_size").get<std::size_t>();
        plan.vocab_min_freq = vocab.at("min_freq").get<std::size_t>();

        const json& model = config.at("model");
        plan.encoder.embed_dim = model.at("embed_dim").get<std::size_t>();
        plan.encoder.hidden_dim = model.at("hidden_dim").get<std::size_t>();
        plan.encoder.num_layers = model.at("num_layers").get<std::size_t>();
        plan.encoder.weight_drop_p = model.at("weight_drop").get<double>();
        plan.encoder.embed_drop_p = model.at("embed_drop").get<double>();
        plan.encoder.variational_drop_p = model.at("variational_drop").get<double>();
        plan.encoder.tie_decoder = model.at("tie_decoder").get<bool>();
        plan.head_hidden = model.at("head_hidden").get<std::size_t>();
        plan.transfer_head_hidden = model.at("transfer_head_hidden").get<bool>();

        const json& train = config.at("train");
        plan.epochs = train.at("epochs").get<std::size_t>();
        plan.batch_size = train.at("batch_size").get<std::size_t>();
        plan.bptt_len = train.at("bptt_len").get<std::size_t>();
        plan.schedule.lr_max = train.at("lr_max").get<double>();
        plan.schedule.cut_frac = train.at("cut_frac").get<double>();
        plan.schedule.ratio = train.at("ratio").get<double>();
        plan.disc_decay = train.at("disc_decay").get<double>();
        plan.strategy = unfreeze_strategy_from_string(train.at("strategy").get<std::string>());
        plan.chain_thaw_k = train.at("chain_thaw_k").get<std::size_t>();
        std::string opt = train.at("optimizer").get<std::string>();
        if (opt == "adam")
            plan.optimizer.kind = OptimKind::adam;
        else if (opt == "sgd_momentum")
            plan.optimizer.kind = OptimKind::sgd_momentum;
        else
            throw ConfigError("unknown optimizer '" + opt + "'");
        plan.optimizer.momentum = train.at("momentum").get<double>();
        plan.clip_norm = train.at("clip_norm").get<double>();
        plan.patience = train.at("patience").get<std::size_t>();
        plan.min_delta = train.at("min_delta").get<double>();
        plan.max_epochs_per_phase = train.at("max_epochs_per_phase").get<std::size_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    plan.config_hash = config_hash(config);
    return plan;
}

}  // namespace absa
