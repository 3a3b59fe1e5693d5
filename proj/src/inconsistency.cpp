#include "rcons/inconsistency.hpp"

namespace rcons {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Format: return "format";
    case Category::Source: return "source";
    case Category::RandomNumber: return "random_number";
    case Category::RoundNumber: return "round_number";
    case Category::MessageChain: return "message_chain";
    case Category::History: return "history";
    case Category::Secret: return "secret";
    case Category::Consensus: return "consensus";
    case Category::Payload: return "payload";
    case Category::Decision: return "decision";
  }
  return "?";
}

std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::Claim1: return "claim1";
    case Rule::Claim2: return "claim2";
    case Rule::Claim3: return "claim3";
    case Rule::Claim4: return "claim4";
    case Rule::Claim5: return "claim5";
    case Rule::Claim6: return "claim6";
    case Rule::Claim7: return "claim7";
    case Rule::Claim8: return "claim8";
    case Rule::Claim9: return "claim9";
    case Rule::Claim10: return "claim10";
    case Rule::Claim11: return "claim11";
    case Rule::Claim12: return "claim12";
    case Rule::Claim13: return "claim13";
    case Rule::Claim14: return "claim14";
    case Rule::Case2: return "case2";
    case Rule::Case7Relation: return "case7_relation";
    case Rule::Case8Relation: return "case8_relation";
    case Rule::Case9Relation: return "case9_relation";
    case Rule::Structure: return "structure";
    case Rule::SourceTagForm: return "source_tag_form";
    case Rule::RandomMismatch: return "random_mismatch";
    case Rule::XRandomMismatch: return "xrandom_mismatch";
    case Rule::RegistryConflict: return "registry_conflict";
    case Rule::HistoryInvariant: return "history_invariant";
    case Rule::ShareInconsistent: return "share_inconsistent";
    case Rule::ShareUndecodable: return "share_undecodable";
    case Rule::ConsensusConflict: return "consensus_conflict";
    case Rule::PayloadMismatch: return "payload_mismatch";
    case Rule::NoReliableRound: return "no_reliable_round";
  }
  return "?";
}

}  // namespace rcons
