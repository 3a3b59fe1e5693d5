#include "rcons/link_model.hpp"

#include <algorithm>
#include <stdexcept>


namespace rcons {

LinkId link_of(AgentId a, AgentId b) {
  if (a <= 0 || b <= 0) throw std::domain_error("agent ids start at 1");
  if (a == b) throw std::domain_error("no link from an agent to itself");
  return a < b ? LinkId{a, b} : LinkId{b, a};
}

std::vector<LinkId> all_links(int n) {
  std::vector<LinkId> links;
  links.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (AgentId k = 1; k < n; ++k) {
    for (AgentId p = k + 1; p <= n; ++p) links.push_back({k, p});
  }
  return links;
}

Round round_of(const StateTuple& s) {
  if (const auto* r = std::get_if<ReportR>(&s)) return r->round;
  if (const auto* x = std::get_if<ReportX>(&s)) return x->round;
  return 0;
}

AgentId reporter_of(const StateTuple& s) {
  if (const auto* r = std::get_if<ReportR>(&s)) return r->reporter;
  if (const auto* x = std::get_if<ReportX>(&s)) return x->reporter;
  return 0;
}

std::optional<HistoryViolation> HistoryStates::append(LinkId link, const StateTuple& tuple) {
  if (is_o(tuple)) return HistoryViolation{link, 0, "unknown state is never stored"};
  const Round r = round_of(tuple);
  const AgentId reporter = reporter_of(tuple);
  if (r < 1) return HistoryViolation{link, r, "round must be positive"};
  if (!link.touches(reporter)) {
    return HistoryViolation{link, r, "reporter " + std::to_string(reporter) + " is not an endpoint"};
  }
  auto& slot = entries_[{link, r}];
  for (const StateTuple& existing : slot) {
    if (existing == tuple) return std::nullopt;
    if (reporter_of(existing) == reporter) {
      return HistoryViolation{link, r, "conflicting reports from agent " + std::to_string(reporter)};
    }
  }
  if (slot.size() >= 2) return HistoryViolation{link, r, "more than two reports"};
  slot.push_back(tuple);
  return std::nullopt;
}

bool HistoryStates::contains(LinkId link, const StateTuple& tuple) const {
  const auto* slot = tuples(link, round_of(tuple));
  return slot != nullptr && std::find(slot->begin(), slot->end(), tuple) != slot->end();
}

const std::vector<StateTuple>* HistoryStates::tuples(LinkId link, Round r) const {
  auto it = entries_.find({link, r});
  return it == entries_.end() ? nullptr : &it->second;
}

LinkClass HistoryStates::classify(LinkId link, Round r) const {
  if (r < 1) throw std::domain_error("history rounds start at 1");
  if (auto mark = faulty_from(link); mark && *mark <= r) return LinkClass::Faulty;
  const auto* slot = tuples(link, r);
  if (slot == nullptr || slot->empty()) return LinkClass::Unknown;
  for (const StateTuple& s : *slot) {
    if (is_x(s)) return LinkClass::Faulty;
  }
  return LinkClass::Correct;
}

void HistoryStates::mark_faulty_from(LinkId link, Round r) {
  auto [it, inserted] = faulty_from_.emplace(link, r);
  if (!inserted) it->second = std::min(it->second, r);
}

std::optional<Round> HistoryStates::faulty_from(LinkId link) const {
  auto it = faulty_from_.find(link);
  if (it == faulty_from_.end()) return std::nullopt;
  return it->second;
}

void last_update(HistoryStates& hs, const NewStates& ns, Round final_round) {
  for (const auto& [link, entry] : ns) {
    if (const auto* x = std::get_if<ReportX>(&entry.state); x != nullptr && x->round <= final_round) {
      hs.mark_faulty_from(link, x->round);
    }
  }
}

nlohmann::json to_json(const StateTuple& s) {
  if (const auto* r = std::get_if<ReportR>(&s)) {
    return {{"type", "R"}, {"round", r->round}, {"reporter", r->reporter}, {"rand", r->rand}};
  }
  if (const auto* x = std::get_if<ReportX>(&s)) {
    return {{"type", "X"}, {"round", x->round}, {"reporter", x->reporter}, {"xrands", x->bits}};
  }
  return {{"type", "O"}};
}

StateTuple state_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "R") {
    return ReportR{j.at("round").get<Round>(), j.at("reporter").get<AgentId>(), j.at("rand").get<std::uint32_t>()};
  }
  if (type == "X") {
    return ReportX{j.at("round").get<Round>(), j.at("reporter").get<AgentId>(),
                   j.at("xrands").get<std::vector<std::uint8_t>>()};
  }
  if (type == "O") return ReportO{};
  throw std::invalid_argument("unknown state tuple type " + type);
}

nlohmann::json to_json(const NewStates& ns) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [link, entry] : ns) {
    nlohmann::json e = {{"link", {link.lo, link.hi}}, {"state", to_json(entry.state)}};
    if (entry.source.is_own()) {
      e["source"] = nullptr;
    } else {
      e["source"] = {entry.source.sender, entry.source.round};
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string to_string(LinkClass c) {
  switch (c) {
    case LinkClass::Correct: return "correct";
    case LinkClass::Faulty: return "faulty";
    case LinkClass::Unknown: return "unknown";
  }
  return "?";
}

}  // namespace rcons
