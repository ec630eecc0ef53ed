#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "absa/batches.hpp"
#include "absa/data.hpp"
#include "absa/embedding_transfer.hpp"
#include "absa/errors.hpp"
#include "absa/tokenize.hpp"
#include "absa/vocab.hpp"

using namespace absa;

#ifndef ABSA_DATA_DIR
#define ABSA_DATA_DIR "data"
#endif

namespace {

std::string data_path(const std::string& name) { return std::string(ABSA_DATA_DIR) + "/" + name; }

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("absa_test_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("tokenize: lowercases and splits punctuation") {
    CHECK(tokenize("easyJet expects resilient demand.") ==
          std::vector<std::string>{"easyjet", "expects", "resilient", "demand", "."});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("A-B a-b") == std::vector<std::string>{"a", "-", "b", "a", "-", "b"});
    CHECK(tokenize("  spaced\tout\n") == std::vector<std::string>{"spaced", "out"});
    CHECK(tokenize("0.165") == std::vector<std::string>{"0", ".", "165"});
}

TEST_CASE("vocab: frequency order after reserved ids") {
    Vocabulary v = Vocabulary::build({{"a", "a", "b"}}, 10, 1);
    CHECK(v.size() == 6);
    CHECK(v.id("<pad>") == 0);
    CHECK(v.id("<unk>") == 1);
    CHECK(v.id("<bos>") == 2);
    CHECK(v.id("<eos>") == 3);
    CHECK(v.id("a") == 4);
    CHECK(v.id("b") == 5);
    CHECK(v.freq("a") == 2);

    Vocabulary v2 = Vocabulary::build({{"a", "a", "b"}}, 10, 2);
    CHECK(v2.size() == 5);
    CHECK(v2.id("b") == Vocabulary::unk_id);

    // tie broken lexicographically
    Vocabulary v3 = Vocabulary::build({{"b", "a", "b", "a"}}, 10, 1);
    CHECK(v3.id("a") == 4);
    CHECK(v3.id("b") == 5);
}

TEST_CASE("vocab: max_size cap and min bound") {
    Vocabulary v = Vocabulary::build({{"a", "a", "b", "c"}}, 5, 1);
    CHECK(v.size() == 5);  // reserved + "a"
    CHECK(v.id("a") == 4);
    CHECK(v.id("b") == Vocabulary::unk_id);
    CHECK_THROWS_AS(Vocabulary::build({{"a"}}, 3, 1), ConfigError);
}

TEST_CASE("vocab: numericalize/denumericalize identity on in-vocab tokens") {
    Vocabulary v = Vocabulary::build({{"alpha", "beta", "gamma", "alpha"}}, 100, 1);
    std::vector<std::string> toks{"alpha", "gamma", "<eos>", "beta"};
    CHECK(v.denumericalize(v.numericalize(toks)) == toks);
    // OOV maps to <unk>
    CHECK(v.numericalize({"delta"}) == std::vector<int>{Vocabulary::unk_id});
}

TEST_CASE("transfer_embeddings: copy, mean fill, and identity") {
    Vocabulary src = Vocabulary::build({{"price", "price", "gain"}}, 10, 1);
    REQUIRE(src.size() == 6);  // price=4, gain=5
    Tensor m(Shape{6, 2});
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 2; ++c) m.at(r, c) = double(r * 10 + c);
    // non-reserved rows: row4=[40,41], row5=[50,51] -> mean [45,46]
    Vocabulary dst = Vocabulary::build({{"price", "price", "drop"}}, 10, 1);
    Tensor out = transfer_embeddings(src, m, dst);
    REQUIRE(out.shape() == Shape{6, 2});
    std::size_t price_row = static_cast<std::size_t>(dst.id("price"));
    std::size_t drop_row = static_cast<std::size_t>(dst.id("drop"));
    CHECK(out.at(price_row, 0) == 40.0);
    CHECK(out.at(price_row, 1) == 41.0);
    CHECK(out.at(drop_row, 0) == 45.0);
    CHECK(out.at(drop_row, 1) == 46.0);
    // reserved rows copy through
    CHECK(out.at(0, 0) == 0.0);
    CHECK(out.at(3, 1) == 31.0);

    Tensor same = transfer_embeddings(src, m, src);
    CHECK(same.bit_equal(m));

    Tensor bad(Shape{5, 2});
    CHECK_THROWS_AS(transfer_embeddings(src, bad, dst), ShapeError);
}

TEST_CASE("transfer_embeddings: hand mean example") {
    // src rows [[1,1],[3,3]] ignoring reserved -> dst-only token gets [2,2]
    Vocabulary src = Vocabulary::build({{"x", "x", "y"}}, 10, 1);
    Tensor m(Shape{6, 2});
    m.at(4, 0) = 1.0; m.at(4, 1) = 1.0;
    m.at(5, 0) = 3.0; m.at(5, 1) = 3.0;
    Vocabulary dst = Vocabulary::build({{"z"}}, 10, 1);
    Tensor out = transfer_embeddings(src, m, dst);
    std::size_t z = static_cast<std::size_t>(dst.id("z"));
    CHECK(out.at(z, 0) == 2.0);
    CHECK(out.at(z, 1) == 2.0);
}

TEST_CASE("lm_batches: hand-enumerated partition for ids 1..12") {
    std::vector<int> ids;
    for (int i = 1; i <= 12; ++i) ids.push_back(i);
    LmBatchStream stream(ids, 2, 3);
    CHECK(stream.lane_len() == 6);
    REQUIRE(stream.num_windows() == 1);
    auto [input, target] = stream.window(0);
    CHECK(input.column(0) == std::vector<int>{1, 7});
    CHECK(input.column(1) == std::vector<int>{2, 8});
    CHECK(input.column(2) == std::vector<int>{3, 9});
    CHECK(target.column(0) == std::vector<int>{2, 8});
    CHECK(target.column(1) == std::vector<int>{3, 9});
    CHECK(target.column(2) == std::vector<int>{4, 10});
}

TEST_CASE("lm_batches: single window covering the whole stream") {
    std::vector<int> ids{5, 6, 7, 8, 9};
    LmBatchStream stream(ids, 1, 4);
    REQUIRE(stream.num_windows() == 1);
    auto [input, target] = stream.window(0);
    CHECK(input.data == std::vector<int>{5, 6, 7, 8});
    CHECK(target.data == std::vector<int>{6, 7, 8, 9});
}

TEST_CASE("lm_batches: too-short sequence rejected") {
    CHECK_THROWS_AS(LmBatchStream({1, 2, 3, 4}, 2, 2), ValidationError);
}

TEST_CASE("lm_batches: shift property holds on fuzzed sizes") {
    Rng rng(314);
    for (int iter = 0; iter < 30; ++iter) {
        std::size_t n = 12 + rng.below(200);
        std::size_t b = 1 + rng.below(4);
        if (n <= b * 2) continue;
        std::size_t bptt = 1 + rng.below(9);
        std::vector<int> ids(n);
        for (auto& x : ids) x = static_cast<int>(rng.below(50));
        LmBatchStream stream(ids, b, bptt);
        for (std::size_t k = 0; k < stream.num_windows(); ++k) {
            auto [input, target] = stream.window(k);
            for (std::size_t r = 0; r < b; ++r)
                for (std::size_t t = 0; t + 1 < bptt; ++t)
                    CHECK(target.at(r, t) == input.at(r, t + 1));
            // target of the last column continues the lane
            for (std::size_t r = 0; r < b; ++r)
                CHECK(target.at(r, bptt - 1) ==
                      ids[r * stream.lane_len() + k * bptt + bptt]);
        }
    }
}

TEST_CASE("classification_batches: left padding and lengths") {
    std::vector<ClsItem> items{
        {{7, 8}, 0, 0.0},
        {{4, 5, 6, 9}, 1, 0.0},
    };
    Rng rng(1);
    auto batches = classification_batches(items, 2, rng);
    REQUIRE(batches.size() == 1);
    const ClsBatch& b = batches[0];
    REQUIRE(b.ids.cols == 4);
    // longest-first within the bucket
    CHECK(b.lengths == std::vector<std::size_t>{4, 2});
    CHECK(b.ids.at(0, 0) == 4);
    CHECK(b.ids.at(1, 0) == Vocabulary::pad_id);
    CHECK(b.ids.at(1, 1) == Vocabulary::pad_id);
    CHECK(b.ids.at(1, 2) == 7);
    CHECK(b.ids.at(1, 3) == 8);
}

TEST_CASE("classification_batches: identical lengths need no padding") {
    std::vector<ClsItem> items{{{1, 2, 3}, 0, 0.0}, {{4, 5, 6}, 1, 0.0}};
    Rng rng(2);
    auto batches = classification_batches(items, 2, rng);
    REQUIRE(batches.size() == 1);
    for (int id : batches[0].ids.data) CHECK(id != Vocabulary::pad_id);
}

TEST_CASE("classification_batches: empty sequence rejected") {
    std::vector<ClsItem> items{{{}, 0, 0.0}};
    Rng rng(3);
    CHECK_THROWS_AS(classification_batches(items, 1, rng), ValidationError);
}

TEST_CASE("label set: unknown label error lists the declared set") {
    LabelSet set({"Corporate", "Economy", "Market", "Stock"});
    CHECK(set.index_of("Market") == 2);
    try {
        set.index_of("Weather");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("Weather") != std::string::npos);
        CHECK(msg.find("Corporate") != std::string::npos);
        CHECK(msg.find("Stock") != std::string::npos);
    }
}

TEST_CASE("fiqa loader: sample file parses and validates") {
    AspectHierarchy h = AspectHierarchy::load(data_path("aspect_hierarchy.json"));
    CHECK(h.l1_labels().size() == 4);
    CHECK(h.l2_labels().size() == 27);

    FiqaLoadResult r = load_fiqa(data_path("fiqa_sample.jsonl"), h, true);
    REQUIRE(r.examples.size() == 12);
    const LabeledExample& ex = r.examples[0];
    CHECK(ex.sentence == "easyJet expects resilient demand to withstand security fears.");
    CHECK(ex.aspect_l1 == "Corporate");
    CHECK(ex.aspect_l2 == "Risks");
    CHECK(ex.sentiment == 0.165);
    CHECK(ex.target == "easyJet");
}

TEST_CASE("fiqa loader: validation failures") {
    AspectHierarchy h = AspectHierarchy::from_map({{"Risks", "Corporate"}});
    std::string good =
        R"({"sentence":"s","target":"t","aspect_l1":"Corporate","aspect_l2":"Risks","sentiment":0.1})";

    SUBCASE("sentiment out of range") {
        TempFile f("fiqa1.jsonl", good + "\n" +
            R"({"sentence":"s","target":"t","aspect_l1":"Corporate","aspect_l2":"Risks","sentiment":1.5})" + "\n");
        CHECK_THROWS_AS(load_fiqa(f.path, h, true), ValidationError);
        FiqaLoadResult lax = load_fiqa(f.path, h, false);
        CHECK(lax.examples.size() == 1);
        CHECK(lax.skipped == 1);
    }
    SUBCASE("unknown aspect label") {
        TempFile f("fiqa2.jsonl",
            R"({"sentence":"s","target":"t","aspect_l1":"Corporate","aspect_l2":"Weather","sentiment":0.0})");
        CHECK_THROWS_AS(load_fiqa(f.path, h, true), ValidationError);
    }
    SUBCASE("parent mismatch") {
        TempFile f("fiqa3.jsonl",
            R"({"sentence":"s","target":"t","aspect_l1":"Market","aspect_l2":"Risks","sentiment":0.0})");
        CHECK_THROWS_AS(load_fiqa(f.path, h, true), ValidationError);
    }
    SUBCASE("multilabel resolved to first pair") {
        TempFile f("fiqa4.jsonl",
            R"({"sentence":"s","target":"t","aspect_l1":["Corporate"],"aspect_l2":["Risks","Other"],"sentiment":0.0})");
        FiqaLoadResult r = load_fiqa(f.path, h, true);
        REQUIRE(r.examples.size() == 1);
        CHECK(r.examples[0].aspect_l2 == "Risks");
        CHECK(r.multilabel_resolved == 1);
    }
    SUBCASE("empty file is an empty list") {
        TempFile f("fiqa5.jsonl", "");
        CHECK(load_fiqa(f.path, h, true).examples.empty());
    }
    SUBCASE("json array form accepted") {
        TempFile f("fiqa6.json", "[" + good + "]");
        CHECK(load_fiqa(f.path, h, true).examples.size() == 1);
    }
}

TEST_CASE("fiqa loader property: corrupt records rejected, clean ones kept") {
    AspectHierarchy h = AspectHierarchy::load(data_path("aspect_hierarchy.json"));
    const auto& l2s = h.l2_labels();
    Rng rng(606);
    for (int iter = 0; iter < 20; ++iter) {
        std::size_t n = 5 + rng.below(20);
        std::string content;
        std::size_t corrupt = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string& l2 = l2s[rng.below(l2s.size())];
            std::string l1 = h.parent(l2);
            double sentiment = rng.uniform(-1, 1);
            std::string sentiment_str = std::to_string(sentiment);
            bool bad = rng.bernoulli(0.35);
            if (bad) {
                ++corrupt;
                switch (rng.below(4)) {
                    case 0: sentiment_str = rng.bernoulli(0.5) ? "1.7" : "-2.0"; break;
                    case 1: l1 = "Nonsense"; break;                    // parent mismatch
                    case 2: { std::string tmp = l1; /* unknown l2 */
                              content += R"({"sentence":"s","target":"t","aspect_l1":")" + tmp +
                                         R"(","aspect_l2":"NoSuchAspect","sentiment":0.0})" "\n";
                              continue; }
                    case 3: content += R"({"target":"t","aspect_l1":")" + l1 +
                                       R"(","aspect_l2":")" + l2 +
                                       R"(","sentiment":0.0})" "\n";  // missing sentence
                             continue;
                }
            }
            content += R"({"sentence":"words here","target":"t","aspect_l1":")" + l1 +
                       R"(","aspect_l2":")" + l2 + R"(","sentiment":)" + sentiment_str + "}\n";
        }
        TempFile f("fiqa_fuzz.jsonl", content);
        FiqaLoadResult r = load_fiqa(f.path, h, false);
        CHECK(r.skipped == corrupt);
        CHECK(r.examples.size() == n - corrupt);
        for (const auto& ex : r.examples) {
            CHECK(ex.sentiment >= -1.0);
            CHECK(ex.sentiment <= 1.0);
            CHECK(h.has_l2(ex.aspect_l2));
            CHECK(h.parent(ex.aspect_l2) == ex.aspect_l1);
            CHECK_FALSE(ex.sentence.empty());
        }
        if (corrupt > 0) CHECK_THROWS_AS(load_fiqa(f.path, h, true), ValidationError);
    }
}

TEST_CASE("vic loader: positions and duplicates") {
    VicLoadResult r = load_vic(data_path("vic_sample.jsonl"), true);
    REQUIRE(r.documents.size() == 6);
    CHECK(r.documents[0].position == Position::long_side);
    CHECK(r.documents[1].position == Position::short_side);
    CHECK_FALSE(r.documents[3].position.has_value());

    TempFile dup("vic1.jsonl",
        R"({"doc_id":"a","text":"one"})" "\n" R"({"doc_id":"a","text":"two"})" "\n");
    CHECK_THROWS_AS(load_vic(dup.path, true), ValidationError);
    VicLoadResult lax = load_vic(dup.path, false);
    CHECK(lax.documents.size() == 1);
    CHECK(lax.skipped == 1);

    TempFile badpos("vic2.jsonl", R"({"doc_id":"a","text":"x","position":"sideways"})");
    CHECK_THROWS_AS(load_vic(badpos.path, true), ValidationError);
}

TEST_CASE("example_tokens: sentence + <eos> + target by default") {
    LabeledExample ex;
    ex.sentence = "Prices rose.";
    ex.snippet = "rose";
    ex.target = "ACME";
    CHECK(example_tokens(ex, InputMode::sentence_target) ==
          std::vector<std::string>{"prices", "rose", ".", "<eos>", "acme"});
    CHECK(example_tokens(ex, InputMode::sentence_only) ==
          std::vector<std::string>{"prices", "rose", "."});
    CHECK(example_tokens(ex, InputMode::snippet_target) ==
          std::vector<std::string>{"rose", "<eos>", "acme"});
}

TEST_CASE("lm_id_stream: documents joined with <eos>") {
    Vocabulary v = Vocabulary::build({{"a", "b"}}, 10, 1);
    auto ids = lm_id_stream({{"a"}, {"b", "a"}}, v);
    CHECK(ids == std::vector<int>{v.id("a"), Vocabulary::eos_id, v.id("b"), v.id("a"),
                                  Vocabulary::eos_id});
}
