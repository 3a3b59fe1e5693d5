#include "rcons/simulator.hpp"

#include <algorithm>
#include <stdexcept>

namespace rcons {

namespace {

constexpr std::uint64_t kValueStream = 0x76616c73ULL;
constexpr std::uint64_t kDeviationStream = 0x64657669ULL;
constexpr std::uint64_t kAgentStreamBase = 0x1000ULL;

int domain_of(const RunConfig& cfg) { return cfg.domain_size > 0 ? cfg.domain_size : cfg.n; }

std::vector<int> initial_values(const RunConfig& cfg) {
  if (!cfg.values.empty()) return cfg.values;
  Rng rng = derive_rng(cfg.seed, kValueStream);
  std::vector<int> values(static_cast<std::size_t>(cfg.n));
  for (int& v : values) v = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(domain_of(cfg))));
  return values;
}

bool has_window_zero(const std::vector<int>& newly, Round from, Round to) {
  for (Round r = from; r <= to; ++r) {
    if (newly[static_cast<std::size_t>(r)] == 0) return true;
  }
  return false;
}

// Clean-round window counts over rounds 1..t+3 of a newly-faulty vector.
bool clean_round_density(const std::vector<int>& newly, int t) {
  if (static_cast<int>(newly.size()) < t + 4) return false;
  for (Round s = 1; s + t <= t + 3; ++s) {
    if (!has_window_zero(newly, s, s + t)) return false;
  }
  int clean = 0;
  for (Round r = 1; r <= t + 2; ++r) clean += newly[static_cast<std::size_t>(r)] == 0 ? 1 : 0;
  return clean >= 2;
}

std::optional<Round> second_clean_round(const std::vector<int>& newly) {
  int seen = 0;
  for (Round r = 1; r < static_cast<Round>(newly.size()); ++r) {
    if (newly[static_cast<std::size_t>(r)] == 0 && ++seen == 2) return r;
  }
  return std::nullopt;
}

nlohmann::json to_json(const Deviation& d) {
  return {{"type", d.type}, {"agent", d.agent}, {"round", d.round}, {"sub_case", d.sub_case},
          {"guess", d.guess}, {"proposal", d.proposal}};
}

nlohmann::json to_json(const Machinery& m) {
  nlohmann::json j{{"newly_faulty", m.newly_faulty}, {"D", m.decision_set}, {"reconstructed", m.reconstructed}};
  j["m_star"] = m.m_star ? nlohmann::json(*m.m_star) : nlohmann::json(nullptr);
  j["elected"] = m.elected ? nlohmann::json{{"agent", m.elected->winner}, {"value", m.elected->value}}
                           : nlohmann::json(nullptr);
  return j;
}

}  // namespace

LinkClass raw_classify(const HistoryStates& hs, LinkId link, Round r) {
  const auto* slot = hs.tuples(link, r);
  if (slot == nullptr || slot->empty()) return LinkClass::Unknown;
  return std::any_of(slot->begin(), slot->end(), [](const StateTuple& s) { return is_x(s); }) ? LinkClass::Faulty
                                                                                              : LinkClass::Correct;
}

LinkClass known_classify(const HistoryStates& hs, const NewStates& ns, LinkId link, Round r) {
  auto it = ns.find(link);
  if (it != ns.end() && is_x(it->second.state) && round_of(it->second.state) <= r) return LinkClass::Faulty;
  return raw_classify(hs, link, r);
}

void validate(const RunConfig& cfg) {
  if (cfg.n < 3) throw std::invalid_argument("n must be at least 3");
  if (cfg.t < 0) throw std::invalid_argument("t must be non-negative");
  if (cfg.n <= 2 * cfg.t + 1) throw std::invalid_argument("n must exceed 2t+1");
  const int domain = domain_of(cfg);
  if (domain < 1) throw std::invalid_argument("value domain must be non-empty");
  if (!cfg.values.empty()) {
    if (static_cast<int>(cfg.values.size()) != cfg.n) throw std::invalid_argument("need one value per agent");
    for (int v : cfg.values) {
      if (v < 0 || v >= domain) throw std::invalid_argument("value outside the domain");
    }
  }
  if (!(cfg.beta.beta0 > cfg.beta.beta1 && cfg.beta.beta1 > cfg.beta.beta2)) {
    throw std::invalid_argument("utilities must satisfy beta0 > beta1 > beta2");
  }
  if (!is_prime(cfg.modulus) || cfg.modulus <= static_cast<std::uint64_t>(std::max(cfg.n, domain))) {
    throw std::invalid_argument("modulus must be a prime above n and the domain size");
  }
  if (cfg.pattern) cfg.pattern->validate(cfg.n, cfg.t);
  if (cfg.deviation) validate(*cfg.deviation, cfg.n, cfg.t);
}

std::string to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::Consensus: return "consensus";
    case RunOutcome::Mixed: return "consensus-with-abstentions";
    case RunOutcome::NoConsensus: return "no-consensus";
  }
  return "?";
}

void assign_utilities(RunResult& result, const Utilities& beta) {
  const std::size_t n = result.decisions.size();
  std::set<int> decided;
  bool bottom = false;
  bool abstained = false;
  for (const Decision& d : result.decisions) {
    if (d.outcome == Outcome::Value) decided.insert(d.value);
    if (d.outcome == Outcome::Bottom || d.outcome == Outcome::Undecided) bottom = true;
    if (d.outcome == Outcome::NoDecision) abstained = true;
  }
  result.utilities.assign(n, beta.beta2);
  result.consensus_value.reset();
  if (bottom || decided.size() != 1) {
    result.outcome = RunOutcome::NoConsensus;
    return;
  }
  const int v = *decided.begin();
  result.consensus_value = v;
  result.outcome = abstained ? RunOutcome::Mixed : RunOutcome::Consensus;
  for (std::size_t k = 0; k < n; ++k) result.utilities[k] = result.values[k] == v ? beta.beta0 : beta.beta1;
}

nlohmann::json to_json(const Decision& d) {
  nlohmann::json j{{"decision", to_string(d)}, {"round", d.round}};
  if (d.outcome == Outcome::Value) j["value"] = d.value;
  return j;
}

nlohmann::json to_json(const Inconsistency& inc) {
  nlohmann::json j{{"category", std::string(to_string(inc.category))},
                   {"rule", std::string(to_string(inc.rule))},
                   {"round", inc.round},
                   {"detail", inc.detail}};
  j["link"] = inc.link.lo == 0 ? nlohmann::json(nullptr) : nlohmann::json{inc.link.lo, inc.link.hi};
  return j;
}

nlohmann::json to_json(const InvariantReport& rep) {
  return {{"agreement", rep.agreement},
          {"validity", rep.validity},
          {"termination", rep.termination},
          {"no_bottom", rep.no_bottom},
          {"message_bound", rep.message_bound},
          {"hs_agreement", rep.hs_agreement},
          {"clean_rounds", rep.clean_rounds},
          {"machinery_agreement", rep.machinery_agreement},
          {"convergence", rep.convergence},
          {"risk", rep.risk},
          {"sharp_bound_checked", rep.sharp_bound_checked},
          {"sharp_bound_misses", rep.sharp_bound_misses},
          {"newly_faulty", rep.newly_faulty},
          {"failures", rep.failures}};
}

Simulation::Simulation(RunConfig cfg)
    : cfg_(std::move(cfg)),
      proto_{cfg_.n, cfg_.t, domain_of(cfg_), PrimeField(cfg_.modulus)},
      deviation_rng_(derive_rng(cfg_.seed, kDeviationStream)) {
  validate(cfg_);
  pattern_ = cfg_.pattern ? *cfg_.pattern : sample_blind_pattern(cfg_.seed, cfg_.n, cfg_.t);
  const std::vector<int> values = initial_values(cfg_);
  agents_.reserve(static_cast<std::size_t>(cfg_.n));
  for (AgentId id = 1; id <= cfg_.n; ++id) {
    Behavior behavior;
    if (cfg_.deviation && cfg_.deviation->agent == id) behavior = behavior_for(*cfg_.deviation, cfg_.t);
    agents_.push_back(init_agent(proto_, id, values[static_cast<std::size_t>(id - 1)],
                                 derive_rng(cfg_.seed, kAgentStreamBase + static_cast<std::uint64_t>(id)), behavior));
  }
  if (cfg_.deviation && cfg_.deviation->type == 3) deviation_active_ = true;
  reported_.assign(agents_.size(), Decision{});
  snapshots_.resize(static_cast<std::size_t>(proto_.final_exchange() + 1));

  nlohmann::json config{{"n", cfg_.n},
                        {"t", cfg_.t},
                        {"seed", cfg_.seed},
                        {"domain_size", proto_.domain_size},
                        {"values", values},
                        {"modulus", cfg_.modulus},
                        {"pattern", to_json(pattern_)},
                        {"beta", {cfg_.beta.beta0, cfg_.beta.beta1, cfg_.beta.beta2}}};
  config["deviation"] = cfg_.deviation ? to_json(*cfg_.deviation) : nlohmann::json(nullptr);
  emit(0, "setup", 0, "config", std::move(config));
  for (const AgentState& s : agents_) {
    emit(0, "setup", s.id, "init", {{"value", s.value}, {"proposal", s.proposal.value}});
  }
}

void Simulation::emit(Round r, const std::string& phase, AgentId agent, const std::string& event,
                      nlohmann::json payload) {
  if (!cfg_.trace) return;
  trace_ += "{\"run_id\":" + nlohmann::json(cfg_.run_id).dump() + ",\"round\":" + std::to_string(r) +
            ",\"phase\":\"" + phase + "\",\"agent\":" + std::to_string(agent) + ",\"event\":\"" + event +
            "\",\"payload\":" + payload.dump() + "}\n";
}

void Simulation::note_decisions(const std::string& phase) {
  for (std::size_t k = 0; k < agents_.size(); ++k) {
    const AgentState& s = agents_[k];
    if (s.decision == reported_[k]) continue;
    reported_[k] = s.decision;
    if (s.inconsistency && s.decision.outcome == Outcome::Bottom) {
      emit(round_, phase, s.id, "inconsistency", to_json(*s.inconsistency));
    }
    emit(round_, phase, s.id, "decide", to_json(s.decision));
  }
}

Simulation::Mailboxes Simulation::send() {
  Mailboxes out(agents_.size());
  for (std::size_t k = 0; k < agents_.size(); ++k) {
    out[k] = send_phase(proto_, agents_[k], round_);
    if (cfg_.deviation && cfg_.deviation->agent == agents_[k].id) {
      if (tamper(proto_, *cfg_.deviation, agents_[k], round_, out[k], deviation_rng_)) {
        deviation_active_ = true;
        emit(round_, "send", agents_[k].id, "deviation", {{"type", cfg_.deviation->type}});
      }
    }
  }
  return out;
}

Simulation::Mailboxes Simulation::deliver(const Mailboxes& outboxes) {
  const std::size_t n = agents_.size();
  Mailboxes in(n);
  std::vector<std::vector<bool>> arrived(n, std::vector<bool>(n, false));
  for (const auto& box : outboxes) {
    for (const RoundMessage& msg : box) {
      if (pattern_.blocks(round_, msg.sender, msg.recipient)) continue;
      arrived[static_cast<std::size_t>(msg.sender - 1)][static_cast<std::size_t>(msg.recipient - 1)] = true;
      in[static_cast<std::size_t>(msg.recipient - 1)].push_back(msg);
    }
  }
  if (round_ <= proto_.final_exchange()) {
    for (AgentId a = 1; a <= cfg_.n; ++a) {
      for (AgentId b = 1; b <= cfg_.n; ++b) {
        if (a == b || arrived[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)]) continue;
        auto [it, inserted] = fault_round_.emplace(link_of(a, b), round_);
        if (!inserted) it->second = std::min(it->second, round_);
      }
    }
  }
  return in;
}

void Simulation::receive(Mailboxes inboxes) {
  for (std::size_t k = 0; k < agents_.size(); ++k) {
    AgentState& s = agents_[k];
    const bool was_running = s.running();
    receive_phase(proto_, s, round_, std::move(inboxes[k]));
    if (!was_running) continue;
    std::vector<AgentId> heard;
    for (const RoundMessage& msg : s.inbox) heard.push_back(msg.sender);
    emit(round_, "receive", s.id, "receive",
         {{"heard", heard}, {"lost", std::vector<AgentId>(s.lost.begin(), s.lost.end())}});
    if (cfg_.deviation && cfg_.deviation->agent == s.id) {
      const int type = cfg_.deviation->type;
      if (type == 5 && s.running() && static_cast<int>(s.lost.size()) > proto_.t) deviation_active_ = true;
      if (type == 10 && round_ >= effective_round(*cfg_.deviation, proto_.t)) deviation_active_ = true;
    }
  }
  note_decisions("receive");
}

void Simulation::snapshot() {
  const std::vector<LinkId> links = all_links(cfg_.n);
  auto& snap = snapshots_[static_cast<std::size_t>(round_)];
  snap.assign(agents_.size(), {});
  for (std::size_t k = 0; k < agents_.size(); ++k) {
    const AgentState& s = agents_[k];
    if (!s.running()) continue;
    snap[k].resize(static_cast<std::size_t>(round_ + 1));
    for (Round r = 1; r <= round_; ++r) {
      auto& row = snap[k][static_cast<std::size_t>(r)];
      row.reserve(links.size());
      for (const LinkId& l : links) row.push_back(known_classify(s.hs, s.ns, l, r));
    }
  }
}

void Simulation::compute() {
  for (AgentState& s : agents_) compute_phase(proto_, s, round_);
  if (round_ == proto_.final_exchange()) {
    for (const AgentState& s : agents_) {
      if (s.machinery) emit(round_, "compute", s.id, "machinery", to_json(*s.machinery));
    }
  }
  note_decisions("compute");
  if (round_ <= proto_.final_exchange()) snapshot();
  ++round_;
}

void Simulation::step() {
  Mailboxes out = send();
  receive(deliver(out));
  compute();
}

void Simulation::check_invariants(RunResult& result) const {
  InvariantReport& rep = result.invariants;
  const int n = cfg_.n;
  const int t = cfg_.t;
  const Round last = proto_.final_exchange();

  std::set<int> decided;
  for (std::size_t k = 0; k < result.decisions.size(); ++k) {
    const Decision& d = result.decisions[k];
    if (d.outcome == Outcome::Undecided) {
      rep.termination = false;
      rep.failures.push_back("agent " + std::to_string(k + 1) + " never decided");
    }
    if (d.outcome == Outcome::Bottom) {
      rep.no_bottom = false;
      std::string why = result.inconsistencies[k] ? std::string(to_string(result.inconsistencies[k]->rule)) : "?";
      rep.failures.push_back("agent " + std::to_string(k + 1) + " decided bottom (" + why + ")");
    }
    if (d.outcome == Outcome::Value) {
      decided.insert(d.value);
      if (std::find(result.values.begin(), result.values.end(), d.value) == result.values.end()) {
        rep.validity = false;
        rep.failures.push_back("agent " + std::to_string(k + 1) + " decided a value nobody proposed");
      }
    }
  }
  if (decided.size() > 1) {
    rep.agreement = false;
    rep.failures.push_back(std::to_string(decided.size()) + " distinct decided values");
  }

  HistoryStates truth;
  for (const auto& [link, r] : fault_round_) truth.mark_faulty_from(link, r);
  const StatusHistory status = status_history(truth, n, t, last);
  rep.newly_faulty = status.newly;
  const int pattern_agents = static_cast<int>(pattern_.faulty_agents().size());

  const auto nonfaulty = [&](Round x) {
    std::vector<std::size_t> out;
    const auto& snap = snapshots_[static_cast<std::size_t>(x)];
    for (std::size_t k = 0; k < snap.size(); ++k) {
      if (!snap[k].empty() && status.faulty[static_cast<std::size_t>(x)].count(static_cast<AgentId>(k + 1)) == 0) {
        out.push_back(k);
      }
    }
    return out;
  };
  const auto agree = [&](Round r, Round x) {
    const auto members = nonfaulty(x);
    const auto& snap = snapshots_[static_cast<std::size_t>(x)];
    for (std::size_t k : members) {
      if (snap[k][static_cast<std::size_t>(r)] != snap[members.front()][static_cast<std::size_t>(r)]) return false;
    }
    return true;
  };

  rep.convergence.assign(static_cast<std::size_t>(last + 1), 0);
  rep.risk.assign(static_cast<std::size_t>(last + 1), 0);
  for (Round r = 1; r <= last; ++r) {
    for (Round x = r; x <= last; ++x) {
      if (agree(r, x)) {
        rep.convergence[static_cast<std::size_t>(r)] = x;
        break;
      }
    }
    if (r + t + 1 <= last && !agree(r, r + t + 1)) {
      rep.message_bound = false;
      rep.failures.push_back("round " + std::to_string(r) + " link states not agreed by round " +
                             std::to_string(r + t + 1));
    }
    const int risk = std::max(0, pattern_agents - static_cast<int>(status.faulty[static_cast<std::size_t>(r)].size()));
    rep.risk[static_cast<std::size_t>(r)] = risk;
    if (r + risk + 1 <= last) {
      ++rep.sharp_bound_checked;
      if (!agree(r, r + risk + 1)) ++rep.sharp_bound_misses;
    }
  }

  if (!clean_round_density(status.newly, t)) {
    rep.clean_rounds = false;
    rep.failures.push_back("clean-round density violated");
  }

  const std::optional<Round> y = second_clean_round(status.newly);
  const std::vector<LinkId> links = all_links(n);
  std::optional<std::vector<bool>> reference;
  for (std::size_t k : nonfaulty(last)) {
    const AgentState& s = agents_[k];
    if (!s.machinery || s.decision.outcome == Outcome::Bottom) continue;
    if (!clean_round_density(s.machinery->newly_faulty, t)) {
      rep.clean_rounds = false;
      rep.failures.push_back("agent " + std::to_string(s.id) + " sees too few clean rounds");
    }
    if (!y) continue;
    std::vector<bool> view;
    for (Round r = 1; r <= *y; ++r) {
      for (const LinkId& l : links) view.push_back(s.hs.classify(l, r) == LinkClass::Faulty);
    }
    if (!reference) {
      reference = std::move(view);
    } else if (*reference != view) {
      rep.hs_agreement = false;
      rep.failures.push_back("agent " + std::to_string(s.id) + " history differs through round " +
                             std::to_string(*y));
    }
  }
  if (!y) {
    rep.hs_agreement = false;
    rep.failures.push_back("no second clean round");
  }

  const Machinery* first = nullptr;
  for (const AgentState& s : agents_) {
    if (!s.machinery) continue;
    if (first == nullptr) {
      first = &*s.machinery;
      continue;
    }
    const Machinery& m = *s.machinery;
    const bool same = m.m_star == first->m_star && m.decision_set == first->decision_set &&
                      (!m.elected || !first->elected || m.elected->value == first->elected->value);
    if (!same) {
      rep.machinery_agreement = false;
      rep.failures.push_back("agent " + std::to_string(s.id) + " computed a different decision round or set");
    }
  }
}

RunResult Simulation::finish() {
  while (!done()) step();
  RunResult result;
  result.pattern = pattern_;
  for (const AgentState& s : agents_) {
    result.values.push_back(s.value);
    result.decisions.push_back(s.decision);
    result.inconsistencies.push_back(s.inconsistency);
    if (!result.machinery && s.machinery) result.machinery = s.machinery;
    for (const Guess& g : s.guesses) {
      const auto& peer = agent(g.peer);
      auto it = peer.my_randoms.find(g.round);
      if (it == peer.my_randoms.end()) continue;
      result.guesses.push_back({g.peer, g.round, g.value, it->second});
    }
  }
  result.deviation_active = deviation_active_;
  assign_utilities(result, cfg_.beta);
  check_invariants(result);
  nlohmann::json summary = to_json(result.invariants);
  summary["outcome"] = to_string(result.outcome);
  summary["utilities"] = result.utilities;
  emit(proto_.last_round(), "end", 0, "invariants", std::move(summary));
  result.trace = std::move(trace_);
  trace_.clear();
  return result;
}

RunResult Simulation::run() { return finish(); }

RunResult run(const RunConfig& cfg) {
  Simulation sim(cfg);
  return sim.run();
}

}  // namespace rcons
