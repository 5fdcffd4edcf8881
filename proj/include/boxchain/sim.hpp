#pragma once

// Event-driven scenario simulator: agents issue transactions from seeded
// Poisson (or piecewise-affine intensity) arrival streams; the DAG ledger
// and the antichain boxchain advance together through a future-event list
// ordered by (time, sequence) for full determinism at any thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "boxchain/chain.hpp"
#include "boxchain/config.hpp"
#include "boxchain/ledger.hpp"
#include "boxchain/rng.hpp"
#include "boxchain/stochastics.hpp"

namespace boxchain {

// Reward conservation: every credit is minted, every fee is burned, so
// sum(balances) == minted - burned at all times.
class RewardLedger {
 public:
  void mint(AgentId a, double amount) {
    balance_[a] += amount;
    minted_ += amount;
  }
  void burn(AgentId a, double amount) {
    balance_[a] -= amount;
    burned_ += amount;
  }
  double balance(AgentId a) const {
    auto it = balance_.find(a);
    return it == balance_.end() ? 0.0 : it->second;
  }
  double minted() const { return minted_; }
  double burned() const { return burned_; }
  double net() const {
    double s = 0.0;
    for (const auto& [a, b] : balance_) s += b;
    return s;
  }
  const std::map<AgentId, double>& balances() const { return balance_; }

 private:
  std::map<AgentId, double> balance_;
  double minted_ = 0.0, burned_ = 0.0;
};

struct RunMetrics {
  std::uint64_t tx_issued = 0;         // accepted into ledger and box
  std::uint64_t tx_rejected_entry = 0; // refused placement (no fresh parent)
  std::uint64_t tx_skipped = 0;        // no candidate parents available
  std::uint64_t empty_issued = 0;
  std::uint64_t tx_confirmed = 0;
  std::uint64_t tx_rejected_conflict = 0;
  std::uint64_t tx_voided = 0;
  std::uint64_t boxes_closed = 0;
  std::uint64_t boxes_confirmed = 0;
  std::uint64_t guard_trips = 0;
  std::uint64_t disabled_agents = 0;
  bool integrity_alarm = false;
  bool attack_success = false;   // two consecutive all-malicious boxes
  bool attack_takeover = false;  // dominance plus both box-genesis draws
  std::string halt_reason;
  double mean_latency_sec = 0.0;
  double min_latency_sec = 0.0;
  double max_latency_sec = 0.0;
  std::uint64_t latency_count = 0;
  double minted = 0.0, burned = 0.0;
  std::size_t final_height = 0;
  std::size_t final_width = 0;
};

inline std::string metrics_csv_header() {
  return "seed,horizon_sec,tau_sec,tx_issued,tx_rejected_entry,tx_skipped,empty_issued,"
         "tx_confirmed,tx_rejected_conflict,tx_voided,boxes_closed,boxes_confirmed,"
         "guard_trips,disabled_agents,integrity_alarm,attack_success,attack_takeover,"
         "mean_latency_sec,latency_count,minted,burned,final_height,final_width";
}

inline std::string metrics_csv_row(const ScenarioConfig& cfg, const RunMetrics& m) {
  std::ostringstream out;
  out << cfg.seed << ',' << cfg.horizon_sec << ',' << cfg.tau_sec << ',' << m.tx_issued << ','
      << m.tx_rejected_entry << ',' << m.tx_skipped << ',' << m.empty_issued << ','
      << m.tx_confirmed << ',' << m.tx_rejected_conflict << ',' << m.tx_voided << ','
      << m.boxes_closed << ',' << m.boxes_confirmed << ',' << m.guard_trips << ','
      << m.disabled_agents << ',' << (m.integrity_alarm ? 1 : 0) << ','
      << (m.attack_success ? 1 : 0) << ',' << (m.attack_takeover ? 1 : 0) << ','
      << m.mean_latency_sec << ',' << m.latency_count << ','
      << m.minted << ',' << m.burned << ',' << m.final_height << ',' << m.final_width;
  return out.str();
}

class Simulator {
 public:
  explicit Simulator(ScenarioConfig cfg)
      : cfg_(std::move(cfg)),
        ledger_(0.0, kGenesisTx),
        chain_({cfg_.tau_sec, cfg_.capacity, cfg_.rate_guard_fraction}, kGenesisTx, 0.0),
        capacity_rng_(cfg_.seed, "capacity"),
        genesis_rng_(cfg_.seed, "genesis"),
        empty_rng_(cfg_.seed, "empty") {
    for (const auto& spec : cfg_.agents) {
      AgentState st;
      st.spec = spec;
      st.arrivals = RngStream(cfg_.seed, "arrival").derived(spec.id);
      st.selection = RngStream(cfg_.seed, "select").derived(spec.id);
      agents_.emplace(spec.id, std::move(st));
    }
  }

  void run() {
    for (auto& [id, st] : agents_) {
      if (st.spec.intensity) {
        // Inhomogeneous agents: pre-draw the whole arrival train. The
        // intensity is defined on [0, end_time); arrivals stop there.
        const double end = std::min(cfg_.horizon_sec, st.spec.intensity->end_time());
        auto times = st.spec.intensity->sample(0.0, end, st.arrivals);
        for (double t : times) schedule(t, EventKind::arrival, id, 0);
      } else {
        schedule_next_arrival(st, 0.0);
      }
    }
    while (!events_.empty() && !halted_) {
      const Event e = events_.top();
      events_.pop();
      if (e.time > cfg_.horizon_sec + 1e-9) break;
      now_ = e.time;
      switch (e.kind) {
        case EventKind::arrival: on_arrival(e.agent); break;
        case EventKind::box_timer: on_box_timer(e.box_index); break;
      }
    }
    collect_final_metrics();
  }

  const DagLedger& ledger() const { return ledger_; }
  const Boxchain& chain() const { return chain_; }
  const RewardLedger& rewards() const { return rewards_; }
  const RunMetrics& metrics() const { return metrics_; }
  const ScenarioConfig& config() const { return cfg_; }

  void report(std::ostream& out) const {
    out << "mode: " << cfg_.mode << "  seed: " << cfg_.seed << "  horizon: " << cfg_.horizon_sec
        << "s  tau: " << cfg_.tau_sec << "s  capacity: " << cfg_.capacity.to_string() << '\n';
    out << "agents:";
    for (const auto& spec : cfg_.agents) out << ' ' << spec.id << ':' << to_string(spec.behavior);
    out << '\n';
    const RunMetrics& m = metrics_;
    out << "transactions: issued " << m.tx_issued << " (empty " << m.empty_issued
        << "), confirmed " << m.tx_confirmed << ", conflict-rejected " << m.tx_rejected_conflict
        << ", voided " << m.tx_voided << ", refused-entry " << m.tx_rejected_entry
        << ", skipped " << m.tx_skipped << '\n';
    out << "boxes: closed " << m.boxes_closed << ", confirmed " << m.boxes_confirmed
        << ", guard trips " << m.guard_trips << '\n';
    if (m.latency_count > 0)
      out << "confirmation latency: mean " << m.mean_latency_sec << "s, min "
          << m.min_latency_sec << "s, max " << m.max_latency_sec << "s over " << m.latency_count
          << " transactions\n";
    out << "dag: height " << m.final_height << ", width " << m.final_width << '\n';
    out << "rewards: minted " << m.minted << ", burned " << m.burned << '\n';
    if (m.disabled_agents > 0) {
      out << "disabled agents:";
      for (const auto& [id, st] : agents_)
        if (st.disabled) out << ' ' << id;
      out << '\n';
    }
    if (m.attack_success) out << "ATTACK SUCCESS: two consecutive all-malicious boxes\n";
    if (m.attack_takeover)
      out << "ATTACK TAKEOVER: dominance plus both box-genesis draws\n";
    if (m.integrity_alarm) out << "INTEGRITY ALARM: " << m.halt_reason << '\n';
    else if (!m.halt_reason.empty()) out << "halted: " << m.halt_reason << '\n';
  }

  static constexpr TxId kGenesisTx = 1;

 private:
  enum class EventKind { arrival, box_timer };
  struct Event {
    double time;
    std::uint64_t seq;
    EventKind kind;
    AgentId agent;
    std::uint32_t box_index;
    bool operator>(const Event& o) const {
      if (time != o.time) return time > o.time;
      return seq > o.seq;
    }
  };

  struct AgentState {
    AgentSpec spec;
    RngStream arrivals{0, "x"};
    RngStream selection{0, "x"};
    bool disabled = false;
    TxId last_tx = 0;                    // honest linked-list parent
    std::uint64_t next_nonce = 1;        // 0 is reserved for empty txs
    std::optional<std::array<TxId, 2>> lazy_parents;
    bool malicious_twin_next = false;    // next arrival duplicates last nonce
    std::uint64_t last_nonce = 0;
  };

  void schedule(double time, EventKind kind, AgentId agent, std::uint32_t box_index) {
    events_.push({time, seq_++, kind, agent, box_index});
  }

  void schedule_next_arrival(AgentState& st, double from) {
    const double rate = st.spec.rate_per_min / 60.0;
    const double t = from + st.arrivals.exponential(rate);
    if (t <= cfg_.horizon_sec) schedule(t, EventKind::arrival, st.spec.id, 0);
  }

  void on_arrival(AgentId id) {
    AgentState& st = agents_.at(id);
    if (!st.spec.intensity) schedule_next_arrival(st, now_);
    if (st.disabled) return;
    switch (st.spec.behavior) {
      case Behavior::honest: issue_honest(st); break;
      case Behavior::lazy: issue_lazy(st); break;
      case Behavior::malicious: issue_malicious(st); break;
    }
  }

  void issue_honest(AgentState& st) {
    auto sel = select_tips(ledger_, chain_.tip_context(), st.selection);
    if (!sel) {
      ++metrics_.tx_skipped;
      return;
    }
    std::array<TxId, 2> parents = sel->parents;
    // Linked-list rule: approve your own previous transaction while it is
    // still a childless pending member of a selectable box.
    const TxId prev = st.last_tx;
    if (prev != 0 && ledger_.state(prev) == TxState::pending &&
        ledger_.children(prev).empty()) {
      const auto pb = chain_.box_of(prev);
      const std::uint32_t open = chain_.open_index();
      if (pb && (*pb + 1 == open || *pb + 2 == open) && chain_.selectable(*pb) &&
          prev != parents[0] && prev != parents[1]) {
        const auto fresh = [&](TxId t) { return chain_.box_of(t) == open - 1; };
        if (fresh(parents[0])) parents[1] = prev;
        else parents[0] = prev;
      }
    }
    const TxId id = issue_tx(st, parents, false, st.next_nonce);
    if (id != 0) {
      st.last_tx = id;
      st.last_nonce = st.next_nonce;
      ++st.next_nonce;
    }
  }

  void issue_lazy(AgentState& st) {
    if (!st.lazy_parents) {
      auto sel = select_tips(ledger_, chain_.tip_context(), st.selection);
      if (!sel) {
        ++metrics_.tx_skipped;
        return;
      }
      st.lazy_parents = sel->parents;
    }
    // Reuses its first-ever parent pair forever; once the chain moves on
    // the placement rule refuses these transactions at the door.
    if (issue_tx(st, *st.lazy_parents, false, st.next_nonce) != 0) ++st.next_nonce;
  }

  void issue_malicious(AgentState& st) {
    if (st.malicious_twin_next && st.last_nonce != 0) {
      // Double spend: reuse the previous nonce with freshly drawn parents.
      auto sel = select_tips(ledger_, chain_.tip_context(), st.selection);
      if (!sel) {
        ++metrics_.tx_skipped;
        return;
      }
      issue_tx(st, sel->parents, false, st.last_nonce);
      st.malicious_twin_next = false;
      return;
    }
    auto sel = select_tips(ledger_, chain_.tip_context(), st.selection);
    if (!sel) {
      ++metrics_.tx_skipped;
      return;
    }
    const TxId id = issue_tx(st, sel->parents, false, st.next_nonce);
    if (id != 0) {
      st.last_nonce = st.next_nonce;
      ++st.next_nonce;
      st.malicious_twin_next = true;
    }
  }

  // Shared issue path. Returns the new id, or 0 when the placement rule
  // refused entry (no parent in the preceding box).
  TxId issue_tx(AgentState& st, std::array<TxId, 2> parents, bool is_empty,
                std::uint64_t nonce) {
    if (!chain_.placement_for(parents)) {
      ++metrics_.tx_rejected_entry;
      return 0;
    }
    const TxId id = next_tx_id_++;
    const double fee = is_empty ? cfg_.min_fee : cfg_.fee;
    ledger_.add_transaction(id, st.spec.id, parents, fee, now_, is_empty, nonce);
    rewards_.burn(st.spec.id, fee);
    const bool was_open = chain_.has_open_box();
    chain_.append(id, parents, now_, capacity_rng_);
    if (!was_open)
      schedule(chain_.close_deadline(), EventKind::box_timer, 0, chain_.boxes().back().index);
    issue_closings_[id] = closings_;
    ++metrics_.tx_issued;
    if (is_empty) ++metrics_.empty_issued;
    rewards_.mint(st.spec.id, cfg_.rewards.primal);

    adjudicate_conflicts(st.spec.id, nonce, is_empty);

    chain_.two_plus_two_check(ledger_, id);
    rewards_.mint(st.spec.id, cfg_.rewards.dual);

    if (!in_cascade_)
      while (close_cascade()) {}
    return id;
  }

  // When a spend group gains a second member, keep exactly one survivor:
  // earlier box wins; within a box the heavier subtree wins; ties go to
  // the smallest id.
  void adjudicate_conflicts(AgentId issuer, std::uint64_t nonce, bool is_empty) {
    if (is_empty) return;
    const auto group = ledger_.spend_group(issuer, nonce);
    if (group.size() < 2) return;
    const auto box_of = [this](TxId t) {
      const auto b = chain_.box_of(t);
      return b ? *b : 0xffffffffu;
    };
    std::optional<TxId> survivor;
    for (TxId t : group) {
      if (ledger_.state(t) == TxState::rejected) continue;
      if (!survivor) {
        survivor = t;
        continue;
      }
      const auto verdict = detect_conflict(ledger_, box_of, *survivor, t);
      if (ledger_.state(verdict.rejected) == TxState::pending) {
        ledger_.mark_rejected(verdict.rejected);
        ++metrics_.tx_rejected_conflict;
      }
      survivor = verdict.survivor;
    }
  }

  void on_box_timer(std::uint32_t box_index) {
    if (!chain_.has_open_box() || chain_.boxes().back().index != box_index) return;
    while (close_cascade()) {}
  }

  // Close the open box if a criterion is met, then run the full cascade:
  // boxer reward, genesis draw, fault injection, empty-transaction rescue,
  // predecessor confirmation, rewards and disabling. Returns whether a box
  // closed (follow-on same-instant closes are handled by the caller loop).
  bool close_cascade() {
    in_cascade_ = true;
    const auto boxer = chain_.maybe_close_box(now_, seq_++);
    if (!boxer) {
      in_cascade_ = false;
      return false;
    }
    const std::uint32_t i = chain_.boxes().back().index;
    ++metrics_.boxes_closed;
    ++closings_;
    if (chain_.box(i).guard_tripped) ++metrics_.guard_trips;
    rewards_.mint(ledger_.tx(*boxer).issuer, cfg_.rewards.boxer);

    std::vector<AgentStanding> standings;
    for (const auto& [id, st] : agents_)
      standings.push_back({id, !st.disabled && rewards_.balance(id) >= cfg_.standing_threshold});
    AgentId genesis_agent = 0;
    try {
      genesis_agent = chain_.select_box_genesis(i, ledger_, standings, genesis_rng_, seq_++);
    } catch (const NoEligibleAgent&) {
      halt("no eligible agent for box genesis of box " + std::to_string(i));
      in_cascade_ = false;
      return true;
    }

    if (cfg_.tamper_validation_box && *cfg_.tamper_validation_box == i &&
        !chain_.box(i).checks.empty())
      chain_.tamper_check_record(i, 0);

    rescue_stuck_tips();

    const auto outcome = chain_.finalize_box(ledger_, i, now_);
    if (outcome.alarm) {
      metrics_.integrity_alarm = true;
      halt("countersign mismatch while confirming box " + std::to_string(outcome.box_index));
      in_cascade_ = false;
      return true;
    }
    rewards_.mint(genesis_agent, cfg_.rewards.genesis);
    if (!outcome.vacuous) {
      ++metrics_.boxes_confirmed;
      grant_report_rewards(i, outcome);
      for (TxId m : chain_.box(outcome.box_index).members) {
        if (ledger_.state(m) != TxState::confirmed) continue;
        const auto ct = ledger_.confirm_time(m);
        if (!ct || *ct != now_) continue;
        ++metrics_.tx_confirmed;
        // Latency statistics cover user transactions; empty rescue
        // transactions sit at exactly two box durations by construction.
        if (ledger_.tx(m).is_empty) continue;
        const double latency = now_ - ledger_.tx(m).issue_time;
        latency_sum_ += latency;
        metrics_.min_latency_sec =
            metrics_.latency_count == 0 ? latency : std::min(metrics_.min_latency_sec, latency);
        metrics_.max_latency_sec = std::max(metrics_.max_latency_sec, latency);
        ++metrics_.latency_count;
      }
      for (AgentId a : outcome.disabled_agents) disable_agent(a);
    }
    update_attack_streak(i);
    in_cascade_ = false;
    return true;
  }

  void grant_report_rewards(std::uint32_t closer, const ConfirmationOutcome& outcome) {
    if (outcome.illegal_members.empty()) return;
    std::vector<std::pair<TxId, TxId>> granted;
    for (std::uint32_t b : {outcome.box_index, closer})
      for (const auto& r : chain_.box(b).checks) {
        if (r.legitimate) continue;
        if (!std::binary_search(outcome.illegal_members.begin(), outcome.illegal_members.end(),
                                r.subject))
          continue;
        const auto key = std::make_pair(r.checker, r.subject);
        if (std::find(granted.begin(), granted.end(), key) != granted.end()) continue;
        granted.push_back(key);
        rewards_.mint(ledger_.tx(r.checker).issuer, cfg_.rewards.report);
      }
  }

  void disable_agent(AgentId a) {
    auto it = agents_.find(a);
    if (it == agents_.end() || it->second.disabled) return;
    it->second.disabled = true;
    ++metrics_.disabled_agents;
    for (TxId t : ledger_.order()) {
      if (t == kGenesisTx) continue;
      if (ledger_.tx(t).issuer == a && ledger_.state(t) == TxState::pending) {
        ledger_.mark_voided(t);
        ++metrics_.tx_voided;
      }
    }
  }

  // Empty-transaction rescue: a pending tip childless for two closings is
  // approved by an empty transaction from its own issuer, paired with a
  // pending member of the just-closed box. Runs at close instants, before
  // the predecessor box confirms.
  void rescue_stuck_tips() {
    if (!cfg_.empty_tx) return;
    const std::uint32_t fresh_box = chain_.open_index() - 1;
    std::vector<TxId> stuck;
    for (TxId t : ledger_.tips()) {
      if (ledger_.state(t) != TxState::pending) continue;
      const auto it = issue_closings_.find(t);
      if (it == issue_closings_.end() || closings_ - it->second < 2) continue;
      stuck.push_back(t);
    }
    std::sort(stuck.begin(), stuck.end());
    for (TxId t : stuck) {
      auto ag = agents_.find(ledger_.tx(t).issuer);
      if (ag == agents_.end() || ag->second.disabled) continue;
      std::vector<TxId> candidates;
      for (TxId m : chain_.members(fresh_box))
        if (ledger_.state(m) == TxState::pending && m != t) candidates.push_back(m);
      if (candidates.empty()) continue;
      const TxId partner = candidates[empty_rng_.uniform_int(candidates.size())];
      issue_tx(ag->second, {partner, t}, true, 0);
    }
  }

  void update_attack_streak(std::uint32_t i) {
    bool all_malicious = !chain_.box(i).members.empty();
    for (TxId m : chain_.box(i).members) {
      const auto it = agents_.find(ledger_.tx(m).issuer);
      if (it == agents_.end() || it->second.spec.behavior != Behavior::malicious) {
        all_malicious = false;
        break;
      }
    }
    malicious_streak_ = all_malicious ? malicious_streak_ + 1 : 0;
    if (malicious_streak_ >= 2) metrics_.attack_success = true;

    // Full takeover also needs the random genesis draw to land on the
    // attacker for both boxes of the streak.
    const auto git = agents_.find(chain_.box(i).box_genesis);
    const bool genesis_malicious =
        git != agents_.end() && git->second.spec.behavior == Behavior::malicious;
    takeover_streak_ = all_malicious && genesis_malicious ? takeover_streak_ + 1 : 0;
    if (takeover_streak_ >= 2) metrics_.attack_takeover = true;
  }

  void halt(std::string reason) {
    halted_ = true;
    metrics_.halt_reason = std::move(reason);
  }

  void collect_final_metrics() {
    metrics_.mean_latency_sec =
        metrics_.latency_count ? latency_sum_ / static_cast<double>(metrics_.latency_count) : 0.0;
    metrics_.minted = rewards_.minted();
    metrics_.burned = rewards_.burned();
    const Poset poset = make_poset(ledger_);
    metrics_.final_height = poset.height();
    metrics_.final_width = poset.width().value;
  }

  ScenarioConfig cfg_;
  DagLedger ledger_;
  Boxchain chain_;
  RngStream capacity_rng_, genesis_rng_, empty_rng_;
  std::map<AgentId, AgentState> agents_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  RewardLedger rewards_;
  RunMetrics metrics_;
  std::map<TxId, std::uint64_t> issue_closings_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  TxId next_tx_id_ = kGenesisTx + 1;
  std::uint64_t closings_ = 0;
  std::uint64_t malicious_streak_ = 0;
  std::uint64_t takeover_streak_ = 0;
  double latency_sum_ = 0.0;
  bool in_cascade_ = false;
  bool halted_ = false;
};

// Single withheld-structure attack trial: the adversary needs the honest
// flow silent for two box durations; any honest arrival inside 2*tau
// front-runs the takeover. Success is therefore {first arrival > 2*tau},
// which happens with probability exp(-2*lambda*tau).
//
// With genesis_capture > 0 the trial also models the random box-genesis
// draws: a full takeover needs box dominance plus winning both draws, so
// the takeover rate sits strictly below the closed-form dominance bound.
struct AttackEstimate {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  std::uint64_t takeovers = 0;  // successes that also won both genesis draws
  double p_hat = 0.0;
  double takeover_hat = 0.0;
  double ci99_lo = 0.0;
  double ci99_hi = 0.0;
  double analytic = 0.0;
};

inline AttackEstimate run_attack_trials(double lambda_per_sec, double tau_sec,
                                        std::uint64_t trials, std::uint64_t seed,
                                        unsigned threads = std::thread::hardware_concurrency(),
                                        double genesis_capture = 0.0) {
  if (tau_sec < 0) throw std::invalid_argument("attack: tau must be nonnegative");
  if (trials == 0) throw std::invalid_argument("attack: trials must be positive");
  if (genesis_capture < 0 || genesis_capture > 1)
    throw std::invalid_argument("attack: genesis capture probability must be in [0, 1]");
  if (threads == 0) threads = 1;
  const RngStream base(seed, "attack_trial");
  const double window = 2.0 * tau_sec;
  std::vector<std::uint64_t> partial(threads, 0);
  std::vector<std::uint64_t> partial_takeover(threads, 0);
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (trials + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      const std::uint64_t lo = static_cast<std::uint64_t>(w) * chunk;
      const std::uint64_t hi = std::min(trials, lo + chunk);
      std::uint64_t hits = 0, takeovers = 0;
      for (std::uint64_t t = lo; t < hi; ++t) {
        RngStream stream = base.derived(t);
        if (stream.exponential(lambda_per_sec) <= window) continue;
        ++hits;
        if (genesis_capture > 0 && stream.uniform01() < genesis_capture &&
            stream.uniform01() < genesis_capture)
          ++takeovers;
      }
      partial[w] = hits;
      partial_takeover[w] = takeovers;
    });
  }
  for (auto& th : pool) th.join();
  AttackEstimate est;
  est.trials = trials;
  for (std::uint64_t h : partial) est.successes += h;
  for (std::uint64_t h : partial_takeover) est.takeovers += h;
  est.p_hat = static_cast<double>(est.successes) / static_cast<double>(trials);
  est.takeover_hat = static_cast<double>(est.takeovers) / static_cast<double>(trials);
  const double z = 2.5758293035489004;  // 99% two-sided normal quantile
  const double se = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(trials));
  est.ci99_lo = est.p_hat - z * se;
  est.ci99_hi = est.p_hat + z * se;
  est.analytic = attack_success_prob(lambda_per_sec, tau_sec);
  return est;
}

}  // namespace boxchain
