#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absa/batches.hpp"

namespace absa {

// One FiQA-style record. sentiment is a continuous value in [-1, 1].
struct LabeledExample {
    std::string sentence;
    std::string snippet;  // optional in the file
    std::string target;
    std::string aspect_l1;
    std::string aspect_l2;
    double sentiment = 0.0;
};

// Declared two-level aspect hierarchy, loaded from a JSON map of
// fine label -> coarse parent.
class AspectHierarchy {
public:
    static AspectHierarchy load(const std::string& path);
    static AspectHierarchy from_map(std::map<std::string, std::string> l2_to_l1);

    const std::vector<std::string>& l1_labels() const { return l1_; }
    const std::vector<std::string>& l2_labels() const { return l2_; }
    bool has_l2(const std::string& label) const { return map_.count(label) != 0; }
    bool has_l1(const std::string& label) const;
    const std::string& parent(const std::string& l2) const;

    LabelSet l1_label_set() const { return LabelSet(l1_); }
    LabelSet l2_label_set() const { return LabelSet(l2_); }

private:
    std::map<std::string, std::string> map_;
    std::vector<std::string> l1_, l2_;  // sorted unique
};

struct FiqaLoadResult {
    std::vector<LabeledExample> examples;
    std::size_t multilabel_resolved = 0;  // records whose aspect arrays were truncated to the first pair
    std::size_t skipped = 0;              // invalid records dropped in non-strict mode
};

// Reads a JSON array or JSON-lines file of FiQA records. strict: throw on
// the first invalid record; otherwise skip it with a warning on stderr.
FiqaLoadResult load_fiqa(const std::string& path, const AspectHierarchy& hierarchy, bool strict);

enum class Position { long_side, short_side };

struct CorpusDocument {
    std::string doc_id;
    std::string text;
    std::optional<Position> position;  // present iff usable for the auxiliary task
};

struct VicLoadResult {
    std::vector<CorpusDocument> documents;
    std::size_t skipped = 0;
};

// Reads a JSON-lines corpus of {doc_id, text, position?} records.
VicLoadResult load_vic(const std::string& path, bool strict);

// Corpus dispatch: .json/.jsonl files parse as VIC records, anything else as
// plain text with one document per non-empty line.
std::vector<CorpusDocument> load_corpus(const std::string& path, bool strict);

// What the model consumes for a FiQA example. The record keeps all fields;
// this choice is a run-time switch.
enum class InputMode { sentence_target, sentence_only, snippet_target, snippet_only };

InputMode input_mode_from_string(const std::string& s);
std::string to_string(InputMode m);

std::vector<std::string> example_tokens(const LabeledExample& ex, InputMode mode);

}  // namespace absa
