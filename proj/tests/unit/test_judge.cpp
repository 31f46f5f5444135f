#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "hybrid/error.hpp"
#include "hybrid/judge.hpp"
#include "test_support.hpp"

using namespace hybrid;
using hybrid::testing::ok;
using hybrid::testing::ScopedEnv;
using hybrid::testing::ScriptedTransport;

namespace {

std::string chat_reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

JudgeConfig remote_config() {
  JudgeConfig c;
  c.kind = JudgeKind::remote_llm;
  c.model_id = "judge-model";
  c.endpoint = "https://judge.invalid/v1/chat/completions";
  c.api_key_env = "JUDGE_TEST_KEY";
  c.retry_backoff = std::chrono::milliseconds(0);
  return c;
}

const JudgeRequest kRequest{"Who built it?", "dense text", "bm25 text", std::nullopt};

}  // namespace

TEST(EffectivenessScore, Range) {
  EXPECT_THROW(EffectivenessScore(-1), ContractViolation);
  EXPECT_THROW(EffectivenessScore(6), ContractViolation);
  EXPECT_EQ(EffectivenessScore(5).value(), 5);
  EXPECT_EQ(EffectivenessScore::clamped(-40).value(), 0);
  EXPECT_EQ(EffectivenessScore::clamped(1LL << 40).value(), 5);
}

TEST(ParseScores, DocumentedExamples) {
  EXPECT_EQ(parse_scores("3 4"), std::make_pair(3, 4));
  EXPECT_EQ(parse_scores("Vector: 5\nBM25: 2"), std::make_pair(5, 2));
  EXPECT_EQ(parse_scores("7 -1"), std::make_pair(5, 0));
  EXPECT_THROW(parse_scores("no numbers here"), ParseError);
  EXPECT_THROW(parse_scores("only 4"), ParseError);
  EXPECT_THROW(parse_scores(""), ParseError);
}

TEST(ParseScores, RoundTripsEveryPair) {
  for (int a = 0; a <= 5; ++a) {
    for (int b = 0; b <= 5; ++b) {
      const std::string text = std::to_string(a) + " " + std::to_string(b);
      EXPECT_EQ(parse_scores(text), std::make_pair(a, b)) << text;
      EXPECT_EQ(parse_scores(text, true), std::make_pair(a, b)) << text;
    }
  }
}

TEST(ParseScores, LenientForms) {
  EXPECT_EQ(parse_scores("  4\t1\n"), std::make_pair(4, 1));
  EXPECT_EQ(parse_scores("Scores: 2, 3."), std::make_pair(2, 3));
  EXPECT_EQ(parse_scores("The top1 dense hit scores 4; BM25 gets 1"), std::make_pair(4, 1));
  EXPECT_EQ(parse_scores("<think>maybe 1 2, no</think>\n5 0"), std::make_pair(5, 0));
  EXPECT_EQ(parse_scores("x-3 2 1"), std::make_pair(3, 2));
  EXPECT_EQ(parse_scores("12 3"), std::make_pair(5, 3));
}

TEST(ParseScores, StrictModeAcceptsOnlyBarePair) {
  EXPECT_EQ(parse_scores(" 3 2 \n", true), std::make_pair(3, 2));
  for (const char* bad : {"Vector: 5\nBM25: 2", "7 -1", "3", "3 4 5", "3,4", "6 1"}) {
    EXPECT_THROW(parse_scores(bad, true), ParseError) << bad;
  }
}

TEST(Prompt, TemplateMatchesGolden) {
  EXPECT_EQ(std::string(prompt_template()),
            hybrid::testing::read_file(hybrid::testing::data_path("tests/data/prompt_template.golden")));
}

TEST(Prompt, AnchorsPresent) {
  const std::string t(prompt_template());
  EXPECT_NE(t.find("Return two integers separated by a space"), std::string::npos);
  EXPECT_NE(t.find("Direct hit --> 5 points"), std::string::npos);
}

TEST(Prompt, RenderSubstitutesEachPlaceholderOnce) {
  const std::string golden =
      hybrid::testing::read_file(hybrid::testing::data_path("tests/data/prompt_template.golden"));
  const std::string q = "What does {bm25_reference} mean?";
  const std::vector<std::pair<std::string, std::string>> subs{
      {"{question}", q}, {"{vector_reference}", "dense {x}"}, {"{bm25_reference}", "}{"}};
  // Located in the template itself, so inserted text is never searched.
  std::vector<std::pair<std::size_t, std::size_t>> at;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto pos = golden.find(subs[i].first);
    ASSERT_NE(pos, std::string::npos) << subs[i].first;
    EXPECT_EQ(golden.find(subs[i].first, pos + 1), std::string::npos) << subs[i].first;
    at.emplace_back(pos, i);
  }
  std::sort(at.rbegin(), at.rend());
  std::string expected = golden;
  for (const auto& [pos, i] : at) expected.replace(pos, subs[i].first.size(), subs[i].second);
  EXPECT_EQ(render_prompt(q, "dense {x}", "}{"), expected);
}

TEST(FixedJudge, ReturnsConfiguredScores) {
  FixedJudge j(3, 2);
  const auto v = j.evaluate(kRequest);
  EXPECT_EQ(v.s_dense.value(), 3);
  EXPECT_EQ(v.s_bm25.value(), 2);
  EXPECT_FALSE(v.is_fallback);
  EXPECT_THROW(FixedJudge(6, 0), ContractViolation);
}

TEST(OracleJudge, GradesAgainstGold) {
  OracleJudge j;
  EXPECT_EQ(j.grade("the red fox jumps", "the red fox jumps"), 5);
  EXPECT_EQ(j.grade("the red fox", "the red fox jumps"), 4);       // J = 3/4
  EXPECT_EQ(j.grade("the red cat dog", "the red fox jumps"), 3);   // J = 2/6
  EXPECT_EQ(j.grade("the red a b c d", "the red fox jumps"), 2);   // J = 2/8
  EXPECT_EQ(j.grade("the x y z w", "the red fox jumps"), 1);       // J = 1/8
  EXPECT_EQ(j.grade("unrelated words", "the red fox jumps"), 0);
  EXPECT_EQ(j.grade("", "the red fox jumps"), 0);
  const auto v = j.evaluate({"q", "the red fox jumps", "nothing shared", std::string_view("the red fox jumps")});
  EXPECT_EQ(v.s_dense.value(), 5);
  EXPECT_EQ(v.s_bm25.value(), 0);
  EXPECT_THROW(j.evaluate(kRequest), ConfigError);
}

TEST(ReplayKey, ReferenceDigests) {
  EXPECT_EQ(replay_key("q", "dv", "db"), "2bd476c279975a67e22f4837bb20f4ea805ef90cceb00b52c6c2d39218accb97");
  EXPECT_EQ(replay_key("Wer ist \"X\"?\n", "中文", "a\\b"),
            "7139d99fa284ae0897365f1af8b113e19ec47ed4c9ac1c01808d38700b799f45");
  EXPECT_NE(replay_key("a", "b", "c"), replay_key("a", "c", "b"));
}

TEST(ReplayStore, RoundTripAndLookup) {
  ReplayStore store;
  store.put({replay_key("q2", "d", "b"), 1, 4, "1 4"});
  store.put({replay_key("q1", "d", "b"), 5, 0, "5 0"});
  std::stringstream buf;
  store.write(buf);
  const auto again = ReplayStore::read(buf);
  EXPECT_EQ(again.size(), 2u);
  ASSERT_NE(again.find(replay_key("q1", "d", "b")), nullptr);
  EXPECT_EQ(again.find(replay_key("q1", "d", "b"))->s_dense, 5);
  EXPECT_EQ(again.find("absent"), nullptr);

  ReplayJudge j(again);
  const auto v = j.evaluate({"q2", "d", "b", std::nullopt});
  EXPECT_EQ(std::make_pair(v.s_dense.value(), v.s_bm25.value()), std::make_pair(1, 4));
  EXPECT_THROW(j.evaluate({"q3", "d", "b", std::nullopt}), FixtureMissing);
}

TEST(ReplayStore, MalformedLineNamesLocation) {
  std::stringstream bad("{\"key\":\"x\"}\n");
  try {
    ReplayStore::read(bad, "fixture.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("fixture.jsonl"), std::string::npos) << e.what();
  }
}

TEST(RecordingJudge, CapturesInnerVerdicts) {
  FixedJudge inner(4, 1);
  RecordingJudge rec(inner);
  rec.evaluate(kRequest);
  const auto store = rec.store();
  ASSERT_EQ(store.size(), 1u);
  const auto* r = store.find(replay_key(kRequest.question, kRequest.dense_top1_text, kRequest.bm25_top1_text));
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->s_dense, 4);
  EXPECT_EQ(r->s_bm25, 1);
}

TEST(RemoteLlmJudge, WireFormat) {
  ScopedEnv key("JUDGE_TEST_KEY", "tok");
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{ok(chat_reply("3 4"))});
  RemoteLlmJudge j(remote_config(), transport);
  const auto v = j.evaluate(kRequest);
  EXPECT_EQ(std::make_pair(v.s_dense.value(), v.s_bm25.value()), std::make_pair(3, 4));
  EXPECT_EQ(v.retries_used, 0);
  EXPECT_EQ(v.raw_response, "3 4");
  const auto calls = transport->calls();
  ASSERT_EQ(calls.size(), 1u);
  const auto body = nlohmann::json::parse(calls[0].body);
  EXPECT_EQ(body.at("model"), "judge-model");
  EXPECT_EQ(body.at("temperature"), 0.0);
  EXPECT_EQ(body.at("messages").at(0).at("role"), "user");
  EXPECT_EQ(body.at("messages").at(0).at("content"), render_prompt("Who built it?", "dense text", "bm25 text"));
  EXPECT_EQ(calls[0].headers.at(0).second, "Bearer tok");
}

TEST(RemoteLlmJudge, RetriesUnparsableReply) {
  ScopedEnv key("JUDGE_TEST_KEY", "tok");
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{ok(chat_reply("garbage")), ok(chat_reply("2 5"))});
  const auto v = RemoteLlmJudge(remote_config(), transport).evaluate(kRequest);
  EXPECT_EQ(std::make_pair(v.s_dense.value(), v.s_bm25.value()), std::make_pair(2, 5));
  EXPECT_EQ(v.retries_used, 1);
  EXPECT_FALSE(v.is_fallback);
}

TEST(RemoteLlmJudge, FallsBackAfterExhaustingRetries) {
  ScopedEnv key("JUDGE_TEST_KEY", "tok");
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{
      {500, "oops", ""}, {0, "", "timeout"}, ok("{\"not\":\"chat\"}"), ok(chat_reply("dunno"))});
  auto cfg = remote_config();
  cfg.max_retries = 3;
  const auto v = RemoteLlmJudge(cfg, transport).evaluate(kRequest);
  EXPECT_TRUE(v.is_fallback);
  EXPECT_EQ(v.s_dense.value(), 0);
  EXPECT_EQ(v.s_bm25.value(), 0);
  EXPECT_EQ(v.retries_used, 3);
  EXPECT_EQ(transport->calls().size(), 4u);
}

TEST(RemoteLlmJudge, StrictParseRejectsProse) {
  ScopedEnv key("JUDGE_TEST_KEY", "tok");
  auto cfg = remote_config();
  cfg.strict_parse = true;
  cfg.max_retries = 0;
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{ok(chat_reply("Dense: 3, BM25: 1"))});
  EXPECT_TRUE(RemoteLlmJudge(cfg, transport).evaluate(kRequest).is_fallback);
}

TEST(RemoteLlmJudge, ExtractContentErrors) {
  EXPECT_EQ(RemoteLlmJudge::extract_content(chat_reply("x")), "x");
  EXPECT_THROW(RemoteLlmJudge::extract_content("[]"), ParseError);
  EXPECT_THROW(RemoteLlmJudge::extract_content(R"({"choices":[{"message":{"content":3}}]})"), ParseError);
}

TEST(JudgeFacade, ValidatesInputs) {
  JudgeConfig fixed;
  fixed.fixed_scores = {2, 3};
  const auto v = judge(fixed, "q", "a", "b");
  EXPECT_EQ(v.s_bm25.value(), 3);
  EXPECT_THROW(judge(fixed, "", "a", "b"), ContractViolation);
  EXPECT_EQ(parse_judge_kind(to_string(JudgeKind::replay)), JudgeKind::replay);
  EXPECT_THROW(parse_judge_kind("psychic"), ConfigError);
  JudgeConfig remote = remote_config();
  remote.endpoint.clear();
  EXPECT_THROW(remote.validate(), ConfigError);
}
