#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialkg/adapters/chat.hpp"
#include "dialkg/adapters/embedding.hpp"

namespace dialkg {

// Rule grammar behind the deterministic backend. Each function works on a
// single sentence and is a pure function of its input.
namespace mock {

struct ParsedTriple {
  std::string head;
  std::string relation;
  std::string tail;
  std::string head_type;
  std::string tail_type;
};

struct ParsedRole {
  std::string role;
  std::string mention;
  std::string type;
};

struct ParsedEvent {
  std::string trigger;
  std::string event_type;
  std::vector<ParsedRole> roles;
  std::string time;
};

struct TriggerSpec {
  std::string_view lemma;
  std::string_view event_type;
  std::string_view agent_role;
  std::string_view patient_role;
  std::string_view to_role;
  bool evolutionary = false;
  bool nominal = false;  // trigger follows its patient ("Windows 10 EOL")
};

const TriggerSpec* trigger_spec(std::string_view lemma);

// Triple readings, tried in order:
//   "The <attr> of <X> is <Y>"    -> <X, attr, Y>
//   "<X> is a|an <Y>"             -> <X, is_a, Y>
//   "<X> <rel_with_underscores> <Y>" -> <X, rel, Y>
//   event sentences compressed: agent/patient -> <agent, lemma, patient>,
//   patient only -> <patient, status, trigger>
std::vector<ParsedTriple> parse_triples(std::string_view sentence);

std::vector<ParsedEvent> parse_events(std::string_view sentence);

}  // namespace mock

/// Rule-based stand-in for every prompt template; fully deterministic.
/// Fixture records in `overrides` take precedence over the rules.
class MockChatBackend final : public ChatBackend {
 public:
  explicit MockChatBackend(FixtureTable overrides = {});
  ChatResponse send(const ChatRequest& request, const std::string& rendered_prompt) const override;

 private:
  json respond(const ChatRequest& request) const;

  FixtureTable overrides_;
  HashingEmbedder embedder_;
};

}  // namespace dialkg
