// Command-line driver: scenario simulation with dump/replay, closed-form
// attack analysis with Monte Carlo cross-checks, the stochastic toolbox,
// the 20-transaction reference fixture, and antichain decomposition of
// edge-list files.
//
// Exit codes: 0 success, 1 usage or input error, 2 integrity alarm,
// 3 fixture self-check failure.

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "boxchain/boxchain.hpp"

namespace {

using namespace boxchain;

std::string num12(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

int do_replay(const std::string& prefix) {
  const std::string ledger_path = prefix + ".ledger.txt";
  const std::string boxes_path = prefix + ".boxes.txt";
  std::ifstream lin(ledger_path);
  if (!lin) {
    std::cerr << "replay: cannot open " << ledger_path << '\n';
    return 1;
  }
  std::stringstream original;
  original << lin.rdbuf();
  DagLedger ledger = [&] {
    std::istringstream in(original.str());
    return DagLedger::parse_dump(in);
  }();
  std::ostringstream redump;
  ledger.dump(redump);
  if (redump.str() != original.str()) {
    std::cerr << "replay: ledger dump does not round-trip byte-identically\n";
    return 1;
  }

  std::ifstream bin(boxes_path);
  if (!bin) {
    std::cerr << "replay: cannot open " << boxes_path << '\n';
    return 1;
  }
  const auto boxes = Boxchain::parse_dump(bin);
  if (boxes.empty() || boxes[0].index != 0) {
    std::cerr << "replay: box dump must start at box 0\n";
    return 1;
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    if (b.index != i) {
      std::cerr << "replay: box indexes not consecutive at " << b.index << '\n';
      return 1;
    }
    const Hash256 expect_prev = i == 0 ? Hash256{} : boxes[i - 1].header_hash;
    if (b.status != BoxStatus::open && b.prev_header_hash != expect_prev) {
      std::cerr << "replay: header chain broken at box " << b.index << '\n';
      return 1;
    }
    for (TxId m : b.members) {
      if (!ledger.contains(m)) {
        std::cerr << "replay: box " << b.index << " member " << m << " missing from ledger\n";
        return 1;
      }
    }
    if (b.status != BoxStatus::open &&
        std::find(b.members.begin(), b.members.end(), b.boxer) == b.members.end()) {
      std::cerr << "replay: box " << b.index << " boxer is not a member\n";
      return 1;
    }
  }
  std::cout << "replay OK: " << ledger.size() << " transactions, " << boxes.size()
            << " boxes\n";
  return 0;
}

void dump_pair(const DagLedger& ledger, const Boxchain& chain, const std::string& prefix) {
  std::ofstream lout(prefix + ".ledger.txt");
  ledger.dump(lout);
  std::ofstream bout(prefix + ".boxes.txt");
  chain.dump(bout);
}

void print_attack(const AttackEstimate& est, double lambda_per_sec, double tau_sec,
                  double genesis_capture = 0.0) {
  std::cout << "lambda_per_sec=" << num12(lambda_per_sec) << '\n'
            << "tau_sec=" << num12(tau_sec) << '\n'
            << "analytic=" << num12(est.analytic) << '\n'
            << "trials=" << est.trials << '\n'
            << "successes=" << est.successes << '\n'
            << "p_hat=" << num12(est.p_hat) << '\n'
            << "ci99_lo=" << num12(est.ci99_lo) << '\n'
            << "ci99_hi=" << num12(est.ci99_hi) << '\n';
  if (genesis_capture > 0)
    std::cout << "takeovers=" << est.takeovers << '\n'
              << "takeover_hat=" << num12(est.takeover_hat) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-ledger sandbox: DAG transaction ledger mirrored by a chain of antichain "
               "boxes, with stochastic workload and attack models"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run a configured scenario");
  std::string config_path, output_path, dump_prefix, replay_prefix;
  std::optional<std::uint64_t> seed_override;
  sim_cmd->add_option("--config", config_path, "scenario config file (key=value lines)");
  sim_cmd->add_option("--seed", seed_override, "override the config seed");
  sim_cmd->add_option("--output", output_path, "write a one-row metrics CSV");
  sim_cmd->add_option("--dump", dump_prefix, "write <prefix>.ledger.txt and <prefix>.boxes.txt");
  sim_cmd->add_option("--replay", replay_prefix, "verify dumps written earlier with --dump");

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "withheld-structure attack: analytic "
                                                  "probability plus Monte Carlo estimate");
  double atk_lambda_min = 30.0, atk_tau = 10.0, atk_capture = 0.0;
  std::uint64_t atk_trials = 100000, atk_seed = 1;
  unsigned atk_threads = 0;
  attack_cmd->add_option("--lambda-per-min", atk_lambda_min, "honest arrival rate per minute");
  attack_cmd->add_option("--tau", atk_tau, "box duration in seconds");
  attack_cmd->add_option("--trials", atk_trials, "Monte Carlo trials");
  attack_cmd->add_option("--seed", atk_seed, "base seed");
  attack_cmd->add_option("--threads,--parallel-trials", atk_threads,
                         "worker threads (0 = hardware); estimate is thread-count invariant");
  attack_cmd->add_option("--genesis-capture", atk_capture,
                         "also model the random box-genesis draws: probability of winning one "
                         "draw (0 = off)");

  // stoch group
  auto* stoch_cmd = app.add_subcommand("stoch", "stochastic model calculators");
  stoch_cmd->require_subcommand(1);

  auto* pmf_cmd = stoch_cmd->add_subcommand("pmf", "arrival-count probability under a "
                                                   "piecewise affine intensity");
  std::string pmf_intensity;
  double pmf_from = 0.0, pmf_to = 0.0;
  std::uint64_t pmf_count = 0;
  pmf_cmd->add_option("--intensity", pmf_intensity, "segments t0:t1:a:b,...")->required();
  pmf_cmd->add_option("--from", pmf_from, "window start")->required();
  pmf_cmd->add_option("--to", pmf_to, "window end")->required();
  pmf_cmd->add_option("--count", pmf_count, "arrival count")->required();

  auto* satk_cmd = stoch_cmd->add_subcommand("attack", "closed-form attack success probability");
  double satk_lambda_min = 30.0, satk_tau = 10.0;
  satk_cmd->add_option("--lambda-per-min", satk_lambda_min, "honest rate per minute")->required();
  satk_cmd->add_option("--tau,--tau-sec", satk_tau, "box duration in seconds")->required();

  auto* mintau_cmd = stoch_cmd->add_subcommand("mintau", "smallest box duration meeting an "
                                                         "attack probability bound");
  double mt_lambda_min = 100.0, mt_pmax = 1e-6;
  mintau_cmd->add_option("--lambda-per-min", mt_lambda_min, "honest rate per minute")->required();
  mintau_cmd->add_option("--p-max,--pmax", mt_pmax, "attack probability bound")->required();

  auto* panjer_cmd = stoch_cmd->add_subcommand("panjer", "compound Poisson aggregate pmf by "
                                                         "the Panjer recursion");
  double pj_lambda = 1.0;
  std::string pj_severity;
  std::uint64_t pj_kmax = 10;
  panjer_cmd->add_option("--lambda", pj_lambda, "Poisson frequency")->required();
  panjer_cmd->add_option("--severity,--sev", pj_severity, "severity pmf value:prob,...")
      ->required();
  panjer_cmd->add_option("--kmax", pj_kmax, "largest aggregate value");

  auto* fees_cmd = stoch_cmd->add_subcommand("fees", "expected discounted fee flow");
  double fee_lambda = 30.0, fee_beta = 0.1, fee_t = 1.0;
  fees_cmd->add_option("--lambda", fee_lambda, "fee arrival rate")->required();
  fees_cmd->add_option("--beta", fee_beta, "discount rate")->required();
  fees_cmd->add_option("--t", fee_t, "horizon")->required();

  auto* val_cmd = stoch_cmd->add_subcommand("valuation", "deterministic balance growth under "
                                                         "reward rate r and leakage delta");
  double val_m0 = 100.0, val_r = 0.06, val_delta = 0.01, val_t = 1.0;
  val_cmd->add_option("--m0", val_m0, "initial balance")->required();
  val_cmd->add_option("--r", val_r, "reward rate")->required();
  val_cmd->add_option("--delta", val_delta, "leakage rate")->required();
  val_cmd->add_option("--t", val_t, "horizon")->required();

  // fixture
  auto* fixture_cmd = app.add_subcommand("fixture", "replay the 20-transaction reference "
                                                    "ledger and print its structure");
  bool fixture_redundant = false;
  std::string fixture_dump;
  fixture_cmd->add_flag("--show-redundant", fixture_redundant,
                        "print only the redundant approval edges");
  fixture_cmd->add_option("--dump", fixture_dump,
                          "write <prefix>.ledger.txt and <prefix>.boxes.txt");

  // decompose
  auto* dec_cmd = app.add_subcommand("decompose", "antichain layer decomposition of an "
                                                  "edge-list file");
  std::string dec_path;
  dec_cmd->add_option("file", dec_path, "edge-list file: 'edge <child> <parent>' lines")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim_cmd->parsed()) {
      if (!replay_prefix.empty()) return do_replay(replay_prefix);
      if (config_path.empty()) {
        std::cerr << "simulate: --config is required (or --replay)\n";
        return 1;
      }
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "simulate: cannot open " << config_path << '\n';
        return 1;
      }
      ScenarioConfig cfg = parse_config(in);
      if (seed_override) cfg.seed = *seed_override;
      if (cfg.mode == "attack") {
        const double lps = cfg.lambda_per_min / 60.0;
        print_attack(run_attack_trials(lps, cfg.tau_sec, cfg.trials, cfg.seed), lps,
                     cfg.tau_sec);
        return 0;
      }
      Simulator sim(cfg);
      sim.run();
      sim.report(std::cout);
      if (!output_path.empty()) {
        std::ofstream out(output_path);
        out << metrics_csv_header() << '\n' << metrics_csv_row(cfg, sim.metrics()) << '\n';
      }
      if (!dump_prefix.empty()) dump_pair(sim.ledger(), sim.chain(), dump_prefix);
      return sim.metrics().integrity_alarm ? 2 : 0;
    }

    if (attack_cmd->parsed()) {
      const double lps = atk_lambda_min / 60.0;
      print_attack(
          run_attack_trials(lps, atk_tau, atk_trials, atk_seed, atk_threads, atk_capture), lps,
          atk_tau, atk_capture);
      return 0;
    }

    if (pmf_cmd->parsed()) {
      const PiecewiseIntensity intensity = PiecewiseIntensity::parse(pmf_intensity);
      const double integral = intensity.integral(pmf_from, pmf_to);
      std::cout << "lambda_integral=" << num12(integral) << '\n'
                << "prob=" << num12(poisson_pmf(integral, pmf_count)) << '\n';
      return 0;
    }
    if (satk_cmd->parsed()) {
      std::cout << "attack_success_prob="
                << num12(attack_success_prob(satk_lambda_min / 60.0, satk_tau)) << '\n';
      return 0;
    }
    if (mintau_cmd->parsed()) {
      std::cout << "min_tau=" << num12(min_tau_for_bound(mt_lambda_min / 60.0, mt_pmax))
                << '\n';
      return 0;
    }
    if (panjer_cmd->parsed()) {
      const SeverityPmf severity = SeverityPmf::parse(pj_severity);
      const auto pmf = panjer_compound_pmf(pj_lambda, severity, pj_kmax);
      for (std::size_t k = 0; k < pmf.size(); ++k)
        std::cout << "f[" << k << "]=" << num12(pmf[k]) << '\n';
      std::cout << "mean=" << num12(compound_mean(pj_lambda, 1.0, severity)) << '\n'
                << "variance=" << num12(compound_variance(pj_lambda, 1.0, severity)) << '\n';
      return 0;
    }
    if (fees_cmd->parsed()) {
      std::cout << "expected_fees=" << num12(expected_discounted_fees(fee_lambda, fee_beta, fee_t))
                << '\n';
      return 0;
    }
    if (val_cmd->parsed()) {
      std::cout << "value=" << num12(boxdollar_value(val_m0, val_r, val_delta, val_t)) << '\n';
      return 0;
    }

    if (fixture_cmd->parsed()) {
      const FixtureReport rep = fixture_report();
      std::cout << fixture_text(rep, fixture_redundant);
      if (!fixture_dump.empty()) {
        const FixtureReplay replay = replay_fixture();
        dump_pair(replay.ledger, replay.chain, fixture_dump);
      }
      const auto problems = verify_fixture(rep);
      if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << "fixture self-check failed: " << p << '\n';
        return 3;
      }
      return 0;
    }

    if (dec_cmd->parsed()) {
      std::ifstream in(dec_path);
      if (!in) {
        std::cerr << "decompose: cannot open " << dec_path << '\n';
        return 1;
      }
      const auto [elements, edges] = parse_edge_list(in);
      const Poset poset(elements, edges);
      format_layers(poset.mirsky_decompose(), std::cout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
