#include "affect/decompose.hpp"

#include <cctype>
#include <sstream>

#include "affect/text.hpp"

namespace affect {

namespace {

constexpr const char* kSystemText =
    "You are a careful annotator for aspect-based sentiment analysis of product and "
    "service reviews.";

// Strips "1.", "2)", "-", "*" style markers from the start of a line.
std::string strip_enumeration(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
    ++i;
  } else if (i > 0) {
    i = 0;
  } else if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
    i = 1;
  }
  return text::trim(line.substr(i));
}

}  // namespace

std::string render_retry_note(const RetryNote& note) {
  std::ostringstream out;
  out << "\n\nYour previous answer was:\n" << note.previous_answer
      << "\nIt could not be used: " << note.problem
      << "\nAnswer again and follow the required format exactly.";
  return out.str();
}

PromptRequest build_decompose_prompt(const GoldExample& example, std::string_view model_id,
                                     const std::optional<RetryNote>& retry) {
  if (example.opinions.size() < 2) {
    throw InvalidArgument("decomposition prompt needs at least two opinions (sentence " + example.id + ")");
  }
  const std::size_t m = example.opinions.size();
  std::ostringstream user;
  user << "Decompose the review sentence into sub-sentences, one for each aspect category "
          "and sentiment pair listed below.\n\n"
       << "Sentence: \"" << example.text << "\"\n\n"
       << "Pairs (category:polarity):\n";
  for (std::size_t i = 0; i < m; ++i) {
    user << (i + 1) << ". " << example.opinions[i].category << ':'
         << to_string(example.opinions[i].polarity) << '\n';
  }
  user << "\nEach sub-sentence must keep only the wording of the original sentence that "
          "expresses the given polarity toward its own category.\n"
       << "Answer with exactly " << m << " lines, in the order of the pairs, using the format:\n"
       << "i. <category> | <sub-sentence>\n"
       << "Do not write anything else.";
  if (retry) user << render_retry_note(*retry);

  PromptRequest req;
  req.model_id = std::string(model_id);
  req.system_text = kSystemText;
  req.user_text = user.str();
  req.temperature = 0.0;
  req.max_output_tokens = 128 * static_cast<int>(m);
  return req;
}

std::vector<SubSentence> parse_decompose_response(std::string_view response, std::string_view parent_id,
                                                  const std::vector<AspectOpinion>& expected) {
  if (expected.empty()) throw InvalidArgument("no expected pairs to match");

  std::vector<std::string> lines;
  for (const auto& raw : text::split(response, '\n')) {
    std::string line = text::trim(raw);
    if (!line.empty()) lines.push_back(std::move(line));
  }
  if (lines.size() != expected.size()) {
    throw ParseError("expected " + std::to_string(expected.size()) + " lines, got " +
                     std::to_string(lines.size()));
  }

  std::vector<SubSentence> subs;
  subs.reserve(expected.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string body = strip_enumeration(lines[i]);
    const auto bar = body.find('|');
    if (bar == std::string::npos) {
      throw ParseError("line " + std::to_string(i + 1) + " has no '|' separator");
    }
    const std::string category = text::to_upper(text::trim(body.substr(0, bar)));
    if (category != expected[i].category) {
      throw ParseError("line " + std::to_string(i + 1) + " names category " + category + ", expected " +
                       expected[i].category);
    }
    std::string sub_text = text::trim(body.substr(bar + 1));
    if (sub_text.empty()) throw ParseError("line " + std::to_string(i + 1) + " has an empty sub-sentence");
    subs.push_back(SubSentence{std::string(parent_id), static_cast<int>(i), std::move(sub_text),
                               expected[i].category, expected[i].polarity, false});
  }
  return subs;
}

DecomposeOutcome decompose(const GoldExample& example, LlmClient& client, std::string_view model_id) {
  DecomposeOutcome out;
  if (example.opinions.size() == 1) {
    const auto& op = example.opinions.front();
    out.subs.push_back(SubSentence{example.id, 0, example.text, op.category, op.polarity, false});
    return out;
  }

  std::optional<RetryNote> retry;
  for (int attempt = 0; attempt < kParseAttempts; ++attempt) {
    const LlmResponse response = client.ask(build_decompose_prompt(example, model_id, retry));
    ++out.llm_calls;
    try {
      out.subs = parse_decompose_response(response.text, example.id, example.opinions);
      return out;
    } catch (const ParseError& e) {
      retry = RetryNote{response.text, e.what()};
    }
  }

  out.degraded = true;
  out.subs.clear();
  for (std::size_t i = 0; i < example.opinions.size(); ++i) {
    const auto& op = example.opinions[i];
    out.subs.push_back(SubSentence{example.id, static_cast<int>(i), example.text, op.category, op.polarity, true});
  }
  return out;
}

}  // namespace affect
