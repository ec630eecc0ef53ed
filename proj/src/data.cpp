#include "absa/data.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "absa/errors.hpp"
#include "absa/tokenize.hpp"

namespace absa {

using nlohmann::json;

AspectHierarchy AspectHierarchy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open aspect hierarchy file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("aspect hierarchy " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ValidationError("aspect hierarchy must be a JSON object");
    std::map<std::string, std::string> m;
    for (auto& [l2, l1] : j.items()) {
        if (!l1.is_string())
            throw ValidationError("aspect hierarchy: parent of '" + l2 + "' must be a string");
        m[l2] = l1.get<std::string>();
    }
    return from_map(std::move(m));
}

AspectHierarchy AspectHierarchy::from_map(std::map<std::string, std::string> l2_to_l1) {
    if (l2_to_l1.empty()) throw ValidationError("aspect hierarchy is empty");
    AspectHierarchy h;
    h.map_ = std::move(l2_to_l1);
    std::set<std::string> l1s;
    for (const auto& [l2, l1] : h.map_) {
        h.l2_.push_back(l2);
        l1s.insert(l1);
    }
    h.l1_.assign(l1s.begin(), l1s.end());
    return h;
}

bool AspectHierarchy::has_l1(const std::string& label) const {
    return std::binary_search(l1_.begin(), l1_.end(), label);
}

const std::string& AspectHierarchy::parent(const std::string& l2) const {
    auto it = map_.find(l2);
    if (it == map_.end()) throw ValidationError("unknown fine aspect label '" + l2 + "'");
    return it->second;
}

namespace {

// A file is either one JSON array or one JSON value per line.
std::vector<json> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open data file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t first = content.find_first_not_of(" \t\r\n");
    std::vector<json> records;
    if (first == std::string::npos) return records;
    if (content[first] == '[') {
        json j;
        try {
            j = json::parse(content);
        } catch (const json::exception& e) {
            throw ValidationError(path + ": " + e.what());
        }
        for (auto& rec : j) records.push_back(std::move(rec));
    } else {
        std::istringstream lines(content);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(lines, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                records.push_back(json::parse(line));
            } catch (const json::exception& e) {
                throw ValidationError(path + " line " + std::to_string(lineno) + ": " + e.what(),
                                      lineno);
            }
        }
    }
    return records;
}

std::string get_string(const json& rec, const char* key, std::size_t index, bool required) {
    auto it = rec.find(key);
    if (it == rec.end() || it->is_null()) {
        if (required)
            throw ValidationError("record " + std::to_string(index) + ": missing field '" + key +
                                  "'", index);
        return {};
    }
    if (!it->is_string())
        throw ValidationError("record " + std::to_string(index) + ": field '" + key +
                              "' must be a string", index);
    return it->get<std::string>();
}

// aspect fields may be a string or an array of strings (multilabel source
// records); returns the first entry and whether there were more
std::pair<std::string, bool> get_aspect(const json& rec, const char* key, std::size_t index) {
    auto it = rec.find(key);
    if (it == rec.end())
        throw ValidationError("record " + std::to_string(index) + ": missing field '" + key + "'",
                              index);
    if (it->is_string()) return {it->get<std::string>(), false};
    if (it->is_array() && !it->empty() && (*it)[0].is_string())
        return {(*it)[0].get<std::string>(), it->size() > 1};
    throw ValidationError("record " + std::to_string(index) + ": field '" + key +
                          "' must be a string or non-empty array of strings", index);
}

}  // namespace

FiqaLoadResult load_fiqa(const std::string& path, const AspectHierarchy& hierarchy, bool strict) {
    FiqaLoadResult out;
    std::vector<json> records = read_records(path);
    if (records.empty()) {
        std::cerr << "warning: " << path << " contains no records\n";
        return out;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            const json& rec = records[i];
            if (!rec.is_object())
                throw ValidationError("record " + std::to_string(i) + ": not a JSON object", i);
            LabeledExample ex;
            ex.sentence = get_string(rec, "sentence", i, true);
            ex.snippet = get_string(rec, "snippet", i, false);
            ex.target = get_string(rec, "target", i, true);
            auto [l1, more1] = get_aspect(rec, "aspect_l1", i);
            auto [l2, more2] = get_aspect(rec, "aspect_l2", i);
            ex.aspect_l1 = l1;
            ex.aspect_l2 = l2;
            if (more1 || more2) ++out.multilabel_resolved;

            auto sit = rec.find("sentiment");
            if (sit == rec.end() || !sit->is_number())
                throw ValidationError("record " + std::to_string(i) +
                                      ": field 'sentiment' must be a number", i);
            ex.sentiment = sit->get<double>();
            if (!(ex.sentiment >= -1.0 && ex.sentiment <= 1.0))
                throw ValidationError("record " + std::to_string(i) + ": sentiment " +
                                      std::to_string(ex.sentiment) + " outside [-1,1]", i);
            if (!hierarchy.has_l2(ex.aspect_l2))
                throw ValidationError("record " + std::to_string(i) + ": unknown fine aspect '" +
                                      ex.aspect_l2 + "'", i);
            if (hierarchy.parent(ex.aspect_l2) != ex.aspect_l1)
                throw ValidationError("record " + std::to_string(i) + ": aspect '" + ex.aspect_l2 +
                                      "' belongs to '" + hierarchy.parent(ex.aspect_l2) +
                                      "', not '" + ex.aspect_l1 + "'", i);
            out.examples.push_back(std::move(ex));
        } catch (const ValidationError& e) {
            if (strict) throw;
            std::cerr << "warning: skipping invalid record: " << e.what() << "\n";
            ++out.skipped;
        }
    }
    if (out.multilabel_resolved > 0)
        std::cerr << "note: resolved " << out.multilabel_resolved
                  << " multilabel records to their first aspect pair\n";
    return out;
}

VicLoadResult load_vic(const std::string& path, bool strict) {
    VicLoadResult out;
    std::vector<json> records = read_records(path);
    if (records.empty()) {
        std::cerr << "warning: " << path << " contains no records\n";
        return out;
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            const json& rec = records[i];
            if (!rec.is_object())
                throw ValidationError("record " + std::to_string(i) + ": not a JSON object", i);
            CorpusDocument doc;
            doc.doc_id = get_string(rec, "doc_id", i, true);
            doc.text = get_string(rec, "text", i, true);
            auto pit = rec.find("position");
            if (pit != rec.end() && !pit->is_null()) {
                if (!pit->is_string())
                    throw ValidationError("record " + std::to_string(i) +
                                          ": field 'position' must be a string", i);
                std::string p = pit->get<std::string>();
                if (p == "long")
                    doc.position = Position::long_side;
                else if (p == "short")
                    doc.position = Position::short_side;
                else
                    throw ValidationError("record " + std::to_string(i) + ": position '" + p +
                                          "' is not one of {long, short}", i);
            }
            if (!seen.insert(doc.doc_id).second)
                throw ValidationError("record " + std::to_string(i) + ": duplicate doc_id '" +
                                      doc.doc_id + "'", i);
            out.documents.push_back(std::move(doc));
        } catch (const ValidationError& e) {
            if (strict) throw;
            std::cerr << "warning: skipping invalid record: " << e.what() << "\n";
            ++out.skipped;
        }
    }
    return out;
}

std::vector<CorpusDocument> load_corpus(const std::string& path, bool strict) {
    if (path.ends_with(".jsonl") || path.ends_with(".json"))
        return load_vic(path, strict).documents;
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file: " + path);
    std::vector<CorpusDocument> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        CorpusDocument doc;
        doc.doc_id = "line_" + std::to_string(lineno);
        doc.text = line;
        docs.push_back(std::move(doc));
    }
    if (docs.empty()) std::cerr << "warning: " << path << " contains no documents\n";
    return docs;
}

InputMode input_mode_from_string(const std::string& s) {
    if (s == "sentence_target") return InputMode::sentence_target;
    if (s == "sentence_only") return InputMode::sentence_only;
    if (s == "snippet_target") return InputMode::snippet_target;
    if (s == "snippet_only") return InputMode::snippet_only;
    throw ConfigError("unknown input mode '" + s + "'");
}

std::string to_string(InputMode m) {
    switch (m) {
        case InputMode::sentence_target: return "sentence_target";
        case InputMode::sentence_only: return "sentence_only";
        case InputMode::snippet_target: return "snippet_target";
        case InputMode::snippet_only: return "snippet_only";
    }
    return "?";
}

std::vector<std::string> example_tokens(const LabeledExample& ex, InputMode mode) {
    bool snippet = mode == InputMode::snippet_target || mode == InputMode::snippet_only;
    bool with_target = mode == InputMode::sentence_target || mode == InputMode::snippet_target;
    // snippet modes fall back to the sentence when the record has no snippet
    const std::string& body = snippet && !ex.snippet.empty() ? ex.snippet : ex.sentence;
    std::vector<std::string> toks = tokenize(body);
    if (with_target) {
        toks.emplace_back("<eos>");
        for (auto& t : tokenize(ex.target)) toks.push_back(std::move(t));
    }
    if (toks.empty()) toks.emplace_back("<unk>");  // degenerate record; keep it batchable
    return toks;
}

}  // namespace absa
