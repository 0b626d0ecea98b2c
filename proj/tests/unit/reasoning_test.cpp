#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/fixtures.hpp"
#include "vadrules/induction.hpp"
#include "vadrules/reasoning.hpp"

using namespace vadrules;
using Catch::Approx;

TEST_CASE("verdict parsing reads the reference outputs") {
  auto [anomaly_label, anomaly_ok] = parse_verdict(fixtures::kAnomalyVerdict);
  CHECK(anomaly_ok);
  CHECK(anomaly_label == 1);

  auto [normal_label, normal_ok] = parse_verdict(fixtures::kNormalVerdict);
  CHECK(normal_ok);
  CHECK(normal_label == 0);
}

TEST_CASE("the last answer wins") {
  auto [label, ok] = parse_verdict("Answer: normal. Wait - Answer: anomaly");
  CHECK(ok);
  CHECK(label == 1);

  auto [label2, ok2] = parse_verdict("Answer: anomaly\nOn reflection, answer: normal.");
  CHECK(ok2);
  CHECK(label2 == 0);
}

TEST_CASE("text without a verdict parses as a failure") {
  auto [label, ok] = parse_verdict("The frame is fine.");
  CHECK_FALSE(ok);
  CHECK(label == 0);
}

TEST_CASE("verdict parsing is total on arbitrary text") {
  std::mt19937 gen(3);
  const std::string alphabet = "abc ANSWERnormalanomaly:.\n";
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    std::size_t len = gen() % 60;
    for (std::size_t i = 0; i < len; ++i) text.push_back(alphabet[gen() % alphabet.size()]);
    auto [label, ok] = parse_verdict(text);
    CHECK((label == 0 || label == 1));
    (void)ok;
  }
}

TEST_CASE("abnormal does not match the normal token") {
  auto [label, ok] = parse_verdict("Answer: abnormal");
  CHECK_FALSE(ok);
  (void)label;
}

TEST_CASE("answers keep only the verdict on their own line") {
  auto [label, ok] = parse_verdict("The answer depends on the rules.\nAnswer: anomaly.");
  CHECK(ok);
  CHECK(label == 1);
}

TEST_CASE("recheck parses the scripted anomaly and normal verdicts") {
  RuleSet rules = parse_rules(fixtures::kRobustRules);
  // matchers target phrases unique to each description (the rendered rules
  // appear in the prompt too, so generic phrases like "riding a bicycle"
  // would match every request)
  ScriptedBackend backend({{"walking near the bicycle", fixtures::kAnomalyVerdict},
                           {"walking together", fixtures::kNormalVerdict}},
                          "Answer: normal.");

  FrameDescription anomaly_frame{"v", 0, fixtures::kAnomalyFrameText, std::nullopt, false};
  Verdict verdict = recheck(anomaly_frame, 1, rules, backend, "m");
  CHECK(verdict.label == 1);
  CHECK(verdict.parse_ok);
  CHECK(verdict.raw_text.find("Answer: anomaly") != std::string::npos);
  REQUIRE(verdict.matched_rules.size() == 2);
  CHECK(verdict.matched_rules[0] == RuleCitation{RuleSection::anomaly_human, 1});
  CHECK(verdict.matched_rules[1] == RuleCitation{RuleSection::anomaly_env, 2});

  FrameDescription normal_frame{"v", 1, fixtures::kNormalFrameText, std::nullopt, false};
  Verdict normal_verdict = recheck(normal_frame, 0, rules, backend, "m");
  CHECK(normal_verdict.label == 0);
  CHECK(normal_verdict.parse_ok);
  CHECK(normal_verdict.raw_text.rfind("Answer: normal.") != std::string::npos);
}

TEST_CASE("unparseable rechecks fall back to the dummy answer") {
  RuleSet rules = parse_rules(fixtures::kRobustRules);
  ScriptedBackend backend({}, "I cannot decide.");
  FrameDescription frame{"v", 0, "something", std::nullopt, false};

  Verdict with_anomaly_dummy = recheck(frame, 1, rules, backend, "m");
  CHECK(with_anomaly_dummy.label == 1);
  CHECK_FALSE(with_anomaly_dummy.parse_ok);

  Verdict with_normal_dummy = recheck(frame, 0, rules, backend, "m");
  CHECK(with_normal_dummy.label == 0);
  CHECK_FALSE(with_normal_dummy.parse_ok);
}

TEST_CASE("the recheck prompt carries rules, dummy answer, and description") {
  RuleSet rules = parse_rules(fixtures::kRobustRules);
  std::string seen;
  FunctionBackend backend([&](const ChatExchange& exchange) {
    seen = exchange.messages.back().content;
    return std::string("Answer: normal.");
  });
  FrameDescription frame{"v", 0, "two people walking", std::nullopt, false};
  recheck(frame, 1, rules, backend, "m");
  CHECK(seen.find("My initial result is Anomaly") != std::string::npos);
  CHECK(seen.find("two people walking") != std::string::npos);
  CHECK(seen.find("Rules for Anomaly Human Activities") != std::string::npos);
}

TEST_CASE("an agreeing backend leaves smoothed labels untouched") {
  RuleSet rules = parse_rules(fixtures::kRobustRules);
  ScriptedBackend confirm({{"My initial result is Anomaly", "Answer: anomaly."},
                           {"My initial result is Normal", "Answer: normal."}},
                          "Answer: normal.");
  std::mt19937 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    int y_hat = static_cast<int>(gen() % 2);
    FrameDescription frame{"v", 0, "anything at all", std::nullopt, false};
    Verdict verdict = recheck(frame, y_hat, rules, confirm, "m");
    CHECK(verdict.parse_ok);
    CHECK(verdict.label == y_hat);
  }
}

TEST_CASE("final scores share the score contract") {
  auto scores = final_scores(std::vector<int>{0, 1, 1}, 0.5);
  REQUIRE(scores.size() == 3);
  CHECK(scores[0] == Approx(0.0));
  CHECK(scores[1] == Approx(0.6667).margin(1e-4));
  CHECK(scores[2] == Approx(0.8571).margin(1e-4));

  auto zeros = final_scores(std::vector<int>{0, 0, 0}, 0.4);
  for (double v : zeros) CHECK(v == 0.0);

  std::vector<int> y_hat{1, 0, 1, 1};
  CHECK(final_scores(y_hat, 0.37) == anomaly_scores(y_hat, 0.37));
}
