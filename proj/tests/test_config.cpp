#include <doctest.h>

#include "absa/config.hpp"
#include "absa/errors.hpp"

using namespace absa;
using nlohmann::json;

TEST_CASE("toml: tables, scalars, arrays, comments") {
    json j = parse_toml(R"(
# run configuration
[run]
seed = 42           # trailing comment
out_dir = "runs/x"  # with "quotes # inside" handled
strict = true

[train]
lr_max = 4e-3
epochs = 12
fractions = [0.25, 0.5, 1.0]
names = ["a", "b"]

[data]
path = "corpus # not a comment.txt"
)");
    CHECK(j["run"]["seed"] == 42);
    CHECK(j["run"]["out_dir"] == "runs/x");
    CHECK(j["run"]["strict"] == true);
    CHECK(j["train"]["lr_max"] == 0.004);
    CHECK(j["train"]["epochs"] == 12);
    CHECK(j["train"]["fractions"] == json({0.25, 0.5, 1.0}));
    CHECK(j["train"]["names"] == json({"a", "b"}));
    CHECK(j["data"]["path"] == "corpus # not a comment.txt");
}

TEST_CASE("toml: dotted keys and nested tables") {
    json j = parse_toml("run.seed = 9\n[a.b]\nc = 1\n");
    CHECK(j["run"]["seed"] == 9);
    CHECK(j["a"]["b"]["c"] == 1);
}

TEST_CASE("toml: string escapes and integer vs float") {
    json j = parse_toml("s = \"tab\\there\\nnl \\\"q\\\"\"\ni = 7\nf = 7.0\nneg = -3\n");
    CHECK(j["s"] == "tab\there\nnl \"q\"");
    CHECK(j["i"].is_number_integer());
    CHECK(j["f"].is_number_float());
    CHECK(j["neg"] == -3);
}

TEST_CASE("toml: malformed input is rejected with a line number") {
    for (const char* bad : {"key", "[unclosed\nk=1", "k = [1, 2", "k = \"open", "k = zzz"}) {
        try {
            parse_toml(bad);
            FAIL("expected ConfigError for: ", bad);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("line") != std::string::npos);
        }
    }
}

TEST_CASE("config: precedence is flags > env > file > defaults") {
    json file = parse_toml("[train]\nepochs = 10\nbatch_size = 8\n[run]\nseed = 1\n");
    std::map<std::string, std::string> env{{"ABSA_TRAIN_BATCH_SIZE", "32"},
                                           {"ABSA_RUN_SEED", "2"}};
    std::vector<std::pair<std::string, std::string>> flags{{"run.seed", "3"}};
    json resolved = resolve_config(file, env, flags);
    CHECK(resolved["train"]["epochs"] == 10);       // file beats default (4)
    CHECK(resolved["train"]["batch_size"] == 32);   // env beats file
    CHECK(resolved["run"]["seed"] == 3);            // flag beats env
    CHECK(resolved["train"]["lr_max"] == 0.004);    // untouched default
}

TEST_CASE("config: unknown keys are rejected everywhere") {
    CHECK_THROWS_AS(resolve_config(parse_toml("[nosuch]\nx = 1\n"), {}, {}), ConfigError);
    CHECK_THROWS_AS(resolve_config(parse_toml("[train]\nnosuch = 1\n"), {}, {}), ConfigError);
    CHECK_THROWS_AS(resolve_config(json(), {{"ABSA_TRAIN_NOSUCH", "1"}}, {}), ConfigError);
    CHECK_THROWS_AS(resolve_config(json(), {}, {{"train.nosuch", "1"}}), ConfigError);
}

TEST_CASE("config: hash ignores the output directory but sees everything else") {
    json a = resolve_config(json(), {}, {{"run.out_dir", "\"x\""}});
    json b = resolve_config(json(), {}, {{"run.out_dir", "\"y\""}});
    json c = resolve_config(json(), {}, {{"run.seed", "77"}});
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("config: plan construction carries the resolved values") {
    json cfg = resolve_config(
        parse_toml("[train]\nstrategy = \"chain_thaw_partial\"\nchain_thaw_k = 2\n"
                   "optimizer = \"sgd_momentum\"\n[data]\ntarget = \"aspect_l1\"\n"),
        {}, {});
    StagePlan plan = plan_from_config(cfg, StageKind::target_classify);
    CHECK(plan.strategy == UnfreezeStrategy::chain_thaw_partial);
    CHECK(plan.chain_thaw_k == 2);
    CHECK(plan.optimizer.kind == OptimKind::sgd_momentum);
    CHECK(plan.target_field == TargetField::aspect_l1);
    CHECK(plan.kind == StageKind::target_classify);
    CHECK(!plan.config_hash.empty());

    json bad = cfg;
    bad["train"]["optimizer"] = "newton";
    CHECK_THROWS_AS(plan_from_config(bad, StageKind::target_classify), ConfigError);
}
