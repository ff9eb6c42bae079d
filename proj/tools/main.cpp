#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chainplan/artobj.hpp"
#include "chainplan/dataset.hpp"
#include "chainplan/finetune.hpp"
#include "chainplan/neuroplanner.hpp"
#include "chainplan/pddl.hpp"
#include "chainplan/provider.hpp"
#include "chainplan/semantics.hpp"
#include "chainplan/solver.hpp"
#include "chainplan/spem.hpp"

namespace {

namespace fs = std::filesystem;
using namespace chainplan;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct ChainOpts {
  artobj::ChainConfig chain;
  bool no_macros = false;

  artobj::ChainConfig resolved() const {
    artobj::ChainConfig cfg = chain;
    cfg.use_macros = !no_macros;
    return cfg;
  }
};

void add_chain_opts(CLI::App* cmd, ChainOpts& o) {
  cmd->add_option("--joints", o.chain.n_joints, "Number of joints")
      ->capture_default_str();
  cmd->add_option("--angle-step", o.chain.angle_step_deg,
                  "Angle discretization in degrees")
      ->capture_default_str();
  cmd->add_option("--increments", o.chain.rotation_increments_deg,
                  "Rotation increments in degrees (comma separated)")
      ->delimiter(',');
  cmd->add_option("--central", o.chain.central_joint, "Central joint (1-based)")
      ->capture_default_str();
  cmd->add_option("--seed", o.chain.seed, "Generation seed")
      ->capture_default_str();
  cmd->add_flag("--no-macros", o.no_macros,
                "Atomic grasp/rotate/release operators instead of the "
                "compound macros");
}

struct ProviderOpts {
  std::string kind = "emulated";
  std::string endpoint;
  std::string auth_env = "CHAINPLAN_API_KEY";
  std::string replay_log;
  std::string record_log;
  int delay_ms = 0;
  bool no_replay_timings = false;

  provider::ProviderConfig resolved(const artobj::ChainConfig& chain) const {
    provider::ProviderConfig cfg;
    if (kind == "emulated")
      cfg.kind = provider::ProviderConfig::Kind::emulated;
    else if (kind == "replay")
      cfg.kind = provider::ProviderConfig::Kind::replay;
    else if (kind == "remote")
      cfg.kind = provider::ProviderConfig::Kind::remote;
    else
      throw std::invalid_argument("unknown provider kind: " + kind);
    cfg.endpoint = endpoint;
    cfg.auth_env = auth_env;
    cfg.replay_log = replay_log;
    cfg.record_log = record_log;
    cfg.replay_timings = !no_replay_timings;
    cfg.chunk_delay_ms = delay_ms;
    cfg.chain = chain;
    return cfg;
  }
};

void add_provider_opts(CLI::App* cmd, ProviderOpts& o) {
  cmd->add_option("--provider", o.kind, "emulated | replay | remote")
      ->check(CLI::IsMember({"emulated", "replay", "remote"}))
      ->capture_default_str();
  cmd->add_option("--endpoint", o.endpoint,
                  "Remote endpoint, e.g. http://127.0.0.1:8089");
  cmd->add_option("--auth-env", o.auth_env,
                  "Environment variable holding the API token")
      ->capture_default_str();
  cmd->add_option("--replay-log", o.replay_log, "Replay log to answer from");
  cmd->add_option("--record-log", o.record_log,
                  "Append remote responses to this replay log");
  cmd->add_option("--delay-ms", o.delay_ms,
                  "Emulated per-action chunk delay in milliseconds")
      ->capture_default_str();
  cmd->add_flag("--no-replay-timings", o.no_replay_timings,
                "Replay without reproducing the recorded cadence");
}

int cmd_generate(const ChainOpts& chain_opts, const std::string& out_dir,
                 std::size_t count, int walk_min, int walk_max) {
  const artobj::ChainConfig cfg = chain_opts.resolved();
  fs::create_directories(out_dir);
  artobj::Generator gen(cfg);
  spit(out_dir + "/domain.pddl", pddl::render_domain(gen.domain()));
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t seed = cfg.seed + i;
    std::mt19937_64 rng(seed);
    const int walk =
        std::uniform_int_distribution<int>(walk_min, walk_max)(rng);
    artobj::GeneratedProblem gp = gen.generate(seed, walk);
    spit(out_dir + "/" + gp.problem.name + ".pddl",
         pddl::render_problem(gp.problem));
    spit(out_dir + "/" + gp.problem.name + ".plan",
         pddl::render_plan(gp.witness));
  }
  std::cerr << "wrote 1 domain and " << count << " problem(s) to " << out_dir
            << "\n";
  return 0;
}

int cmd_solve(const std::string& domain_file, const std::string& problem_file,
              bool optimal, const solver::SearchBudget& budget,
              const std::string& out_file) {
  const pddl::DomainDef domain = pddl::parse_domain(slurp(domain_file));
  const pddl::ProblemDef problem =
      pddl::parse_problem(slurp(problem_file), domain);
  const solver::SolveResult res =
      optimal ? solver::solve_optimal(domain, problem, budget)
              : solver::solve_satisficing(domain, problem, budget);
  std::cerr << solver::outcome_name(res.outcome) << " after " << res.expanded
            << " expansions in " << res.wall_secs << "s\n";
  if (!res.solved()) return 1;
  const std::string text = pddl::render_plan(res.plan);
  if (out_file.empty())
    std::cout << text;
  else
    spit(out_file, text);
  return 0;
}

int cmd_validate(const std::string& domain_file,
                 const std::string& problem_file,
                 const std::string& plan_file) {
  const pddl::DomainDef domain = pddl::parse_domain(slurp(domain_file));
  const pddl::ProblemDef problem =
      pddl::parse_problem(slurp(problem_file), domain);
  const pddl::PlanParse pp = pddl::parse_plan(slurp(plan_file));
  const sem::ValidationReport report =
      sem::validate_plan(domain, problem, pp.plan);
  std::cout << report.to_json().dump(2) << "\n";
  return report.valid() ? 0 : 2;
}

int cmd_build_dataset(const ChainOpts& chain_opts, dataset::BuildConfig cfg,
                      const std::string& out_dir) {
  cfg.chain = chain_opts.resolved();
  fs::create_directories(out_dir);
  const dataset::BuildResult result = dataset::build_splits(cfg);
  dataset::write_jsonl(result.splits.train, out_dir + "/train.jsonl");
  dataset::write_jsonl(result.splits.validation,
                       out_dir + "/validation.jsonl");
  dataset::write_jsonl(result.splits.test, out_dir + "/test.jsonl");
  for (const auto& [size, prefix] :
       dataset::staged_prefixes(result.splits.train, cfg.staged_sizes))
    dataset::write_jsonl(prefix, out_dir + "/train_" + std::to_string(size) +
                                     ".jsonl");
  spit(out_dir + "/report.json", result.report.to_json().dump(2) + "\n");
  std::cout << result.report.to_json().dump(2) << "\n";
  return 0;
}

int cmd_audit_dataset(const ChainOpts& chain_opts, const std::string& dir,
                      std::size_t token_budget) {
  const artobj::ChainConfig cfg = chain_opts.resolved();
  dataset::DatasetSplits splits;
  splits.train = dataset::read_jsonl(dir + "/train.jsonl");
  splits.validation = dataset::read_jsonl(dir + "/validation.jsonl");
  splits.test = dataset::read_jsonl(dir + "/test.jsonl");
  const pddl::DomainDef domain = artobj::make_domain(cfg);
  const dataset::AuditReport report = dataset::audit_dataset(
      splits, domain, cfg, /*expect_tag=*/!cfg.use_macros, token_budget);
  spit(dir + "/audit.json", report.to_json().dump(2) + "\n");
  std::cout << report.to_json().dump(2) << "\n";
  return report.clean() ? 0 : 2;
}

int cmd_plan(const ChainOpts& chain_opts, const ProviderOpts& provider_opts,
             const std::string& domain_file, const std::string& problem_file,
             neuro::PlannerConfig planner_cfg, bool stream) {
  const pddl::DomainDef domain = pddl::parse_domain(slurp(domain_file));
  const pddl::ProblemDef problem =
      pddl::parse_problem(slurp(problem_file), domain);
  auto prov = provider::make_provider(
      provider_opts.resolved(chain_opts.resolved()));

  neuro::PlanningOutcome outcome;
  if (stream) {
    auto actions = neuro::plan_streaming(domain, problem, *prov, planner_cfg);
    while (auto step = actions->next())
      std::cerr << pddl::render_step(*step) << "\n";
    outcome = actions->outcome();
  } else {
    outcome = neuro::plan_end_to_end(domain, problem, *prov, planner_cfg);
  }
  std::cout << outcome.to_json().dump(2) << "\n";
  return outcome.status == neuro::PlanStatus::valid ? 0 : 2;
}

int cmd_run_episode(const ChainOpts& chain_opts,
                    const ProviderOpts& provider_opts,
                    const std::string& domain_file,
                    const std::string& problem_file,
                    const std::string& schedule_file,
                    neuro::PlannerConfig planner_cfg,
                    const spem::ExecConfig& exec) {
  const pddl::DomainDef domain = pddl::parse_domain(slurp(domain_file));
  const pddl::ProblemDef problem =
      pddl::parse_problem(slurp(problem_file), domain);
  spem::DisturbanceSchedule schedule;
  if (!schedule_file.empty())
    schedule =
        spem::schedule_from_json(nlohmann::json::parse(slurp(schedule_file)));
  auto prov = provider::make_provider(
      provider_opts.resolved(chain_opts.resolved()));
  const spem::EpisodeResult result =
      spem::run_episode(domain, problem, *prov, planner_cfg, schedule, exec);
  std::cout << result.to_json().dump(2) << "\n";
  return result.goal_reached ? 0 : 3;
}

int cmd_eval(const std::string& records_file) {
  std::ifstream in(records_file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + records_file);
  std::vector<spem::EpisodeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(records_file + ":" + std::to_string(line_no) +
                               ": " + e.what());
    }
    spem::EpisodeRecord r;
    r.condition = j.value("condition", "default");
    r.valid = j.value("valid", false);
    r.has_plan = j.value("has_plan", false);
    r.plan_length = j.value("plan_length", std::size_t{0});
    r.total_time = j.value("total_time", 0.0);
    r.time_to_first_action = j.value("time_to_first_action", 0.0);
    r.replans = j.value("replans", 0);
    records.push_back(std::move(r));
  }
  std::cout << spem::summary_to_json(spem::summarize(records)).dump(2) << "\n";
  return 0;
}

int cmd_submit_finetune(const ProviderOpts& provider_opts,
                        const finetune::FinetuneSpec& spec,
                        const std::string& audit_file,
                        const std::string& dry_run_dir) {
  const dataset::AuditReport audit =
      dataset::AuditReport::from_json(nlohmann::json::parse(slurp(audit_file)));
  if (!dry_run_dir.empty()) fs::create_directories(dry_run_dir);
  const finetune::SubmitResult result = finetune::submit_finetune(
      provider_opts.resolved({}), spec, audit, dry_run_dir);
  nlohmann::json j;
  j["job_ids"] = result.job_ids;
  j["payload_files"] = result.payload_files;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Articulated-chain planning toolkit"};
  app.require_subcommand(1);

  // generate
  auto* c_gen = app.add_subcommand(
      "generate", "Emit a chain domain with problems and witness plans");
  ChainOpts gen_chain;
  std::string gen_out = "out";
  std::size_t gen_count = 1;
  int gen_walk_min = 1, gen_walk_max = 5;
  add_chain_opts(c_gen, gen_chain);
  c_gen->add_option("--out-dir", gen_out, "Output directory")
      ->capture_default_str();
  c_gen->add_option("--count", gen_count, "Number of problems")
      ->capture_default_str();
  c_gen->add_option("--walk-min", gen_walk_min, "Shortest random walk")
      ->capture_default_str();
  c_gen->add_option("--walk-max", gen_walk_max, "Longest random walk")
      ->capture_default_str();

  // solve
  auto* c_solve =
      app.add_subcommand("solve", "Search for a plan for a problem file");
  std::string solve_domain, solve_problem, solve_out;
  bool solve_optimal = false;
  solver::SearchBudget solve_budget;
  c_solve->add_option("--domain", solve_domain, "Domain file")->required();
  c_solve->add_option("--problem", solve_problem, "Problem file")->required();
  c_solve->add_option("--out", solve_out, "Plan output file (default stdout)");
  c_solve->add_flag("--optimal", solve_optimal,
                    "Breadth-first optimal search instead of greedy");
  c_solve->add_option("--max-states", solve_budget.max_expanded_states,
                      "Expansion budget")
      ->capture_default_str();
  c_solve->add_option("--timeout", solve_budget.max_wall_secs,
                      "Wall-clock budget in seconds")
      ->capture_default_str();

  // validate
  auto* c_val = app.add_subcommand("validate", "Check a plan against a problem");
  std::string val_domain, val_problem, val_plan;
  c_val->add_option("--domain", val_domain, "Domain file")->required();
  c_val->add_option("--problem", val_problem, "Problem file")->required();
  c_val->add_option("--plan", val_plan, "Plan file")->required();

  // build-dataset
  auto* c_build = app.add_subcommand(
      "build-dataset", "Generate, solve, and serialize fine-tuning splits");
  ChainOpts build_chain;
  dataset::BuildConfig build_cfg;
  std::string build_out = "dataset";
  add_chain_opts(c_build, build_chain);
  c_build->add_option("--n", build_cfg.n_total, "Total problem count")
      ->capture_default_str();
  c_build->add_option("--train-ratio", build_cfg.train_ratio, "")
      ->capture_default_str();
  c_build->add_option("--validation-ratio", build_cfg.validation_ratio, "")
      ->capture_default_str();
  c_build->add_option("--test-ratio", build_cfg.test_ratio, "")
      ->capture_default_str();
  c_build->add_option("--dataset-seed", build_cfg.seed, "Split/build seed")
      ->capture_default_str();
  c_build->add_option("--walk-min", build_cfg.walk_min, "")
      ->capture_default_str();
  c_build->add_option("--walk-max", build_cfg.walk_max, "")
      ->capture_default_str();
  c_build->add_option("--token-budget", build_cfg.token_budget, "")
      ->capture_default_str();
  c_build->add_option("--staged", build_cfg.staged_sizes,
                      "Nested train prefix sizes (comma separated)")
      ->delimiter(',');
  c_build->add_option("--out-dir", build_out, "Output directory")
      ->capture_default_str();

  // audit-dataset
  auto* c_audit = app.add_subcommand(
      "audit-dataset", "Re-validate a dataset directory; fails on violations");
  ChainOpts audit_chain;
  std::string audit_dir = "dataset";
  std::size_t audit_budget = dataset::kDefaultTokenBudget;
  add_chain_opts(c_audit, audit_chain);
  c_audit->add_option("--dir", audit_dir, "Dataset directory")
      ->capture_default_str();
  c_audit->add_option("--token-budget", audit_budget, "")
      ->capture_default_str();

  // plan
  auto* c_plan = app.add_subcommand(
      "plan", "Ask a completion provider for a plan and validate it");
  ChainOpts plan_chain;
  ProviderOpts plan_provider;
  std::string plan_domain, plan_problem;
  neuro::PlannerConfig plan_cfg;
  bool plan_stream = false;
  add_chain_opts(c_plan, plan_chain);
  add_provider_opts(c_plan, plan_provider);
  c_plan->add_option("--domain", plan_domain, "Domain file")->required();
  c_plan->add_option("--problem", plan_problem, "Problem file")->required();
  c_plan->add_option("--model", plan_cfg.request.model, "Model name")
      ->capture_default_str();
  c_plan->add_option("--max-tokens", plan_cfg.request.max_tokens, "")
      ->capture_default_str();
  c_plan->add_flag("--no-macro-tag", plan_cfg.no_macro_tag,
                   "Prefix the prompt with the atomic-domain tag");
  c_plan->add_flag("--stream", plan_stream,
                   "Stream actions as they are generated");

  // run-episode
  auto* c_ep = app.add_subcommand(
      "run-episode", "Execute a planning episode under a disturbance schedule");
  ChainOpts ep_chain;
  ProviderOpts ep_provider;
  std::string ep_domain, ep_problem, ep_schedule;
  neuro::PlannerConfig ep_cfg;
  spem::ExecConfig ep_exec;
  add_chain_opts(c_ep, ep_chain);
  add_provider_opts(c_ep, ep_provider);
  c_ep->add_option("--domain", ep_domain, "Domain file")->required();
  c_ep->add_option("--problem", ep_problem, "Problem file")->required();
  c_ep->add_option("--schedule", ep_schedule, "Disturbance schedule (JSON)");
  c_ep->add_option("--model", ep_cfg.request.model, "Model name")
      ->capture_default_str();
  c_ep->add_flag("--no-macro-tag", ep_cfg.no_macro_tag,
                 "Prefix prompts with the atomic-domain tag");
  c_ep->add_option("--action-ms", ep_exec.action_ms,
                   "Simulated action duration")
      ->capture_default_str();
  c_ep->add_option("--replan-limit", ep_exec.replan_limit, "")
      ->capture_default_str();

  // eval
  auto* c_eval = app.add_subcommand(
      "eval", "Summarize episode records (JSONL) per condition");
  std::string eval_records;
  c_eval->add_option("--records", eval_records, "Episode records file")
      ->required();

  // submit-finetune
  auto* c_ft = app.add_subcommand(
      "submit-finetune", "Upload staged training files and chain tuning jobs");
  ProviderOpts ft_provider;
  finetune::FinetuneSpec ft_spec;
  std::string ft_audit, ft_dry_run;
  add_provider_opts(c_ft, ft_provider);
  c_ft->add_option("--files", ft_spec.training_files,
                   "Training files, one per stage, in order")
      ->required();
  c_ft->add_option("--base-model", ft_spec.base_model, "")
      ->capture_default_str();
  c_ft->add_option("--epochs", ft_spec.epochs, "")->capture_default_str();
  c_ft->add_option("--staged", ft_spec.staged_sizes,
                   "Stage sizes (comma separated)")
      ->delimiter(',');
  c_ft->add_option("--audit", ft_audit, "audit.json from audit-dataset")
      ->required();
  c_ft->add_option("--dry-run-dir", ft_dry_run,
                   "Write request payloads here instead of submitting");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_gen)
      return cmd_generate(gen_chain, gen_out, gen_count, gen_walk_min,
                          gen_walk_max);
    if (*c_solve)
      return cmd_solve(solve_domain, solve_problem, solve_optimal,
                       solve_budget, solve_out);
    if (*c_val) return cmd_validate(val_domain, val_problem, val_plan);
    if (*c_build) return cmd_build_dataset(build_chain, build_cfg, build_out);
    if (*c_audit)
      return cmd_audit_dataset(audit_chain, audit_dir, audit_budget);
    if (*c_plan)
      return cmd_plan(plan_chain, plan_provider, plan_domain, plan_problem,
                      plan_cfg, plan_stream);
    if (*c_ep)
      return cmd_run_episode(ep_chain, ep_provider, ep_domain, ep_problem,
                             ep_schedule, ep_cfg, ep_exec);
    if (*c_eval) return cmd_eval(eval_records);
    if (*c_ft)
      return cmd_submit_finetune(ft_provider, ft_spec, ft_audit, ft_dry_run);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
