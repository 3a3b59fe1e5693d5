#pragma once

#include <string>
#include <string_view>

#include "rcons/link_model.hpp"

namespace rcons {

// Verification category a detected inconsistency belongs to.
enum class Category {
  Format,
  Source,
  RandomNumber,
  RoundNumber,
  MessageChain,
  History,
  Secret,
  Consensus,
  Payload,
  Decision,
};

// The specific rule that fired. Claim numbering follows the order the
// link-state rules are usually listed in:
//   1-7   message chain
//   8     reporter must be an endpoint
//   9-12  direct-link round relations (cases 1, 3, 4, 5)
//   13-14 source checks
// Indirect-link relations keep their case name.
enum class Rule {
  Claim1, Claim2, Claim3, Claim4, Claim5, Claim6, Claim7,
  Claim8,
  Claim9, Claim10, Claim11, Claim12,
  Claim13, Claim14,
  Case2,
  Case7Relation, Case8Relation, Case9Relation,
  Structure,
  SourceTagForm,
  RandomMismatch,
  XRandomMismatch,
  RegistryConflict,
  HistoryInvariant,
  ShareInconsistent,
  ShareUndecodable,
  ConsensusConflict,
  PayloadMismatch,
  NoReliableRound,
};

std::string_view to_string(Category c);
std::string_view to_string(Rule r);

struct Inconsistency {
  Category category = Category::Format;
  Rule rule = Rule::Structure;
  LinkId link{};  // {0,0} when not link specific
  Round round = 0;
  std::string detail;
};

}  // namespace rcons
