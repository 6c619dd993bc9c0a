#include <doctest.h>

#include "affect/refine.hpp"
#include "affect/vadspace.hpp"
#include "test_support.hpp"

using namespace affect;
using affect::testing::FunctionTransport;
using affect::testing::no_sleep_options;

namespace {

SubSentence sub(SentimentPolarity polarity = SentimentPolarity::kNegative) {
  return SubSentence{"7:1", 0, "waited forever for a table", "SERVICE#GENERAL", polarity, false};
}

std::shared_ptr<FunctionTransport> answering(std::string text) {
  return std::make_shared<FunctionTransport>([text](const PromptRequest&) { return TransportReply::ok(text); });
}

}  // namespace

TEST_CASE("provenance names round trip") {
  for (Provenance p : {Provenance::kAgreed, Provenance::kRefined, Provenance::kFallback, Provenance::kBypassed}) {
    CHECK(parse_provenance(to_string(p)) == p);
  }
  CHECK_FALSE(parse_provenance("guessed"));
}

TEST_CASE("gate contract over every label pair") {
  for (EmotionLabel llm : kAllEmotions) {
    for (const auto& centroid : kEmotionCentroids) {
      const EmotionLabel vad = centroid.label;
      CAPTURE(to_string(llm));
      CAPTURE(to_string(vad));
      auto transport = answering("sadness");
      LlmClient client(transport, no_sleep_options());
      auto out = refine(sub(), llm, vad, client);
      CHECK(provenance_consistent(out.result));
      CHECK(out.result.llm_label == llm);
      CHECK(out.result.vad_label == vad);
      if (llm == vad) {
        CHECK(transport->calls() == 0);
        CHECK(out.conversations == 0);
        CHECK(out.result.provenance == Provenance::kAgreed);
        CHECK(out.result.label == llm);
      } else {
        CHECK(transport->calls() == 1);
        CHECK(out.conversations == 1);
        CHECK(out.result.provenance == Provenance::kRefined);
        CHECK(out.result.label == EmotionLabel::kSadness);
        const auto& u = transport->requests()[0].user_text;
        CHECK(u.find("language model: " + std::string(to_string(llm))) != std::string::npos);
        CHECK(u.find("scores: " + std::string(to_string(vad))) != std::string::npos);
        CHECK(u.find("Sub-sentence: \"waited forever for a table\"") != std::string::npos);
        CHECK(u.find("Aspect category: SERVICE#GENERAL") != std::string::npos);
        CHECK(u.find("Sentiment polarity: negative") != std::string::npos);
      }
    }
  }
}

TEST_CASE("unparseable refinement falls back to the VAD label") {
  auto transport = answering("hard to tell");
  LlmClient client(transport, no_sleep_options());
  auto out = refine(sub(), EmotionLabel::kAnger, EmotionLabel::kSadness, client);
  CHECK(out.result.provenance == Provenance::kFallback);
  CHECK(out.result.label == EmotionLabel::kSadness);
  CHECK(out.conversations == 1);
  CHECK(out.llm_calls == kParseAttempts);
  CHECK(provenance_consistent(out.result));
}

TEST_CASE("neutral bypass only applies to neutral polarity when enabled") {
  RefineOptions bypass;
  bypass.neutral_bypass = true;
  {
    auto transport = answering("joy");
    LlmClient client(transport, no_sleep_options());
    auto out = refine(sub(SentimentPolarity::kNeutral), EmotionLabel::kNeutral, EmotionLabel::kDisgust, client, bypass);
    CHECK(out.result.provenance == Provenance::kBypassed);
    CHECK(out.result.label == EmotionLabel::kNeutral);
    CHECK(transport->calls() == 0);
    CHECK(provenance_consistent(out.result));
  }
  {
    auto transport = answering("joy");
    LlmClient client(transport, no_sleep_options());
    auto out = refine(sub(SentimentPolarity::kPositive), EmotionLabel::kNeutral, EmotionLabel::kDisgust, client, bypass);
    CHECK(out.result.provenance == Provenance::kRefined);
    CHECK(transport->calls() == 1);
  }
  {
    auto transport = answering("joy");
    LlmClient client(transport, no_sleep_options());
    auto out = refine(sub(SentimentPolarity::kNeutral), EmotionLabel::kNeutral, EmotionLabel::kDisgust, client);
    CHECK(out.result.provenance == Provenance::kRefined);
    CHECK(transport->calls() == 1);
  }
}

TEST_CASE("refine prompt refuses agreeing labels") {
  CHECK_THROWS_AS(build_refine_prompt(sub(), EmotionLabel::kJoy, EmotionLabel::kJoy), InvalidArgument);
  CHECK(check_consistency(EmotionLabel::kFear, EmotionLabel::kFear));
  CHECK_FALSE(check_consistency(EmotionLabel::kNeutral, EmotionLabel::kDisgust));
}

TEST_CASE("inconsistent provenance is detected") {
  RefinedEmotion r{sub(), EmotionLabel::kJoy, EmotionLabel::kAnger, EmotionLabel::kJoy, Provenance::kAgreed};
  CHECK_FALSE(provenance_consistent(r));
  r.provenance = Provenance::kFallback;
  CHECK_FALSE(provenance_consistent(r));
  r.label = EmotionLabel::kAnger;
  CHECK(provenance_consistent(r));
  r.provenance = Provenance::kBypassed;
  CHECK_FALSE(provenance_consistent(r));
}
