#pragma once

// Synthetic datasets for training-behavior tests: memorizable LM corpora,
// a two-domain topic task with shared token statistics, and a hierarchical
// coarse/fine label task.

#include <map>
#include <string>
#include <vector>

#include "absa/data.hpp"
#include "absa/rng.hpp"

namespace synth {

// Deterministic cyclic token sequence: next token is a function of the
// current one, so a recurrent LM can drive perplexity toward 1.
inline std::vector<absa::CorpusDocument> cycle_corpus(std::size_t n_tokens,
                                                      std::size_t cycle_len) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < cycle_len; ++i) words.push_back("w" + std::to_string(i));
    std::string text;
    for (std::size_t i = 0; i < n_tokens; ++i) {
        if (i) text += ' ';
        text += words[i % cycle_len];
    }
    return {absa::CorpusDocument{"cycle", text, {}}};
}

struct TopicSpec {
    std::size_t n_topics = 4;
    std::size_t markers_per_topic = 6;
    std::size_t n_fillers = 10;

    std::string marker(std::size_t topic, std::size_t i) const {
        return "t" + std::to_string(topic) + "m" + std::to_string(i);
    }
    std::string filler(std::size_t i) const { return "f" + std::to_string(i); }
};

// Documents whose sentences chain markers of one topic with shared fillers.
// The LM-learnable structure: a topic marker predicts another marker of the
// *same* topic two tokens later.
inline std::vector<absa::CorpusDocument> topic_corpus(const TopicSpec& spec, std::size_t n_docs,
                                                      std::size_t sentences_per_doc,
                                                      std::uint64_t seed) {
    absa::Rng rng(seed);
    std::vector<absa::CorpusDocument> docs;
    for (std::size_t d = 0; d < n_docs; ++d) {
        std::size_t topic = d % spec.n_topics;
        std::string text;
        for (std::size_t s = 0; s < sentences_per_doc; ++s) {
            std::size_t m = rng.below(spec.markers_per_topic);
            for (std::size_t w = 0; w < 3; ++w) {
                text += spec.marker(topic, (m + w) % spec.markers_per_topic) + ' ';
                text += spec.filler(rng.below(spec.n_fillers)) + ' ';
            }
            text += ". ";
        }
        docs.push_back({"doc" + std::to_string(d), text, {}});
    }
    return docs;
}

// Synthetic hierarchy: coarse labels C0..C{K-1}, fine labels F0..F{K*M-1}
// with parent C{i/M}.
inline absa::AspectHierarchy topic_hierarchy(std::size_t n_coarse, std::size_t fine_per_coarse) {
    std::map<std::string, std::string> m;
    for (std::size_t c = 0; c < n_coarse; ++c)
        for (std::size_t f = 0; f < fine_per_coarse; ++f)
            m["F" + std::to_string(c * fine_per_coarse + f)] = "C" + std::to_string(c);
    return absa::AspectHierarchy::from_map(std::move(m));
}

// Labeled examples whose sentences follow the *same* marker-filler chain
// shape as topic_corpus documents, so an encoder pretrained on that corpus
// transfers directly. Coarse label = topic; fine label = the offset class of
// the opening marker (a refinement of the coarse label).
inline std::vector<absa::LabeledExample> topic_sequence_examples(const TopicSpec& spec,
                                                                 std::size_t fine_per_coarse,
                                                                 std::size_t n_examples,
                                                                 std::uint64_t seed) {
    absa::Rng rng(seed);
    std::vector<absa::LabeledExample> out;
    for (std::size_t i = 0; i < n_examples; ++i) {
        std::size_t topic = rng.below(spec.n_topics);
        std::size_t m = rng.below(spec.markers_per_topic);
        std::string text;
        for (std::size_t w = 0; w < 3; ++w) {
            text += spec.marker(topic, (m + w) % spec.markers_per_topic) + ' ';
            text += spec.filler(rng.below(spec.n_fillers)) + ' ';
        }
        text += ".";
        absa::LabeledExample ex;
        ex.sentence = text;
        ex.target = "t" + std::to_string(topic);
        ex.aspect_l1 = "C" + std::to_string(topic);
        ex.aspect_l2 =
            "F" + std::to_string(topic * fine_per_coarse + m % fine_per_coarse);
        ex.sentiment = 0.0;
        out.push_back(std::move(ex));
    }
    return out;
}

// Labeled examples over the topic vocabulary. The coarse label is the topic;
// the fine label additionally depends on which marker index opens the
// sentence (so fine classes are refinements of coarse ones). Sentiment is
// driven by the balance of "good"/"bad" filler substitutions.
inline std::vector<absa::LabeledExample> topic_examples(const TopicSpec& spec,
                                                        std::size_t fine_per_coarse,
                                                        std::size_t n_examples,
                                                        std::uint64_t seed) {
    absa::Rng rng(seed);
    std::vector<absa::LabeledExample> out;
    for (std::size_t i = 0; i < n_examples; ++i) {
        std::size_t topic = rng.below(spec.n_topics);
        std::size_t fine = rng.below(fine_per_coarse);
        // fine class determines the marker subset: indices congruent to
        // `fine` mod fine_per_coarse
        std::string text;
        double tone = 0.0;
        for (std::size_t w = 0; w < 4; ++w) {
            std::size_t m = fine + fine_per_coarse * rng.below(
                spec.markers_per_topic / fine_per_coarse);
            text += spec.marker(topic, m % spec.markers_per_topic) + ' ';
            if (rng.bernoulli(0.5)) {
                bool good = rng.bernoulli(0.5);
                tone += good ? 0.25 : -0.25;
                text += good ? "good " : "bad ";
            } else {
                text += spec.filler(rng.below(spec.n_fillers)) + ' ';
            }
        }
        absa::LabeledExample ex;
        ex.sentence = text;
        ex.target = "t" + std::to_string(topic);
        ex.aspect_l1 = "C" + std::to_string(topic);
        ex.aspect_l2 = "F" + std::to_string(topic * fine_per_coarse + fine);
        ex.sentiment = tone;
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace synth
