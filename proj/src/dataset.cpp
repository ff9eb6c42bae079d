#include "chainplan/dataset.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "chainplan/semantics.hpp"

namespace chainplan::dataset {

std::size_t estimate_tokens(std::string_view text) {
  return (text.size() + 3) / 4;
}

TrainingSample build_sample(const artobj::GeneratedProblem& gp,
                            const pddl::Plan& plan, const SampleSpec& spec) {
  TrainingSample sample;
  sample.problem_id = gp.problem.name;
  if (spec.domain_tag) sample.prompt = *spec.domain_tag + "\n";
  sample.prompt += gp.compact_prompt;
  sample.prompt += kPromptTerminator;

  const pddl::Plan stamped = pddl::restamped(plan);
  std::string body;
  for (std::size_t i = 0; i < stamped.steps.size(); ++i) {
    if (i) body += '\n';
    body += pddl::render_step(stamped.steps[i]);
  }
  sample.completion = " " + body + kCompletionEnd;

  const std::size_t tokens =
      estimate_tokens(sample.prompt) + estimate_tokens(sample.completion);
  if (tokens > spec.token_budget)
    throw SampleOverBudget(gp.problem.name + ": " + std::to_string(tokens) +
                           " tokens exceeds budget of " +
                           std::to_string(spec.token_budget));
  return sample;
}

nlohmann::json BuildReport::to_json() const {
  nlohmann::json j;
  j["requested"] = requested;
  j["kept"] = kept;
  j["failures"] = failures;
  j["drops"] = nlohmann::json::array();
  for (const auto& d : drops)
    j["drops"].push_back({{"problem_id", d.problem_id},
                          {"split", d.split},
                          {"reason", d.reason}});
  return j;
}

BuildResult build_splits(const BuildConfig& cfg, SolveFn solve) {
  if (std::abs(cfg.train_ratio + cfg.validation_ratio + cfg.test_ratio - 1.0) >
      1e-9)
    throw std::invalid_argument("split ratios must sum to 1");
  if (cfg.walk_min < 1 || cfg.walk_max < cfg.walk_min)
    throw std::invalid_argument("bad walk length range");
  if (!solve)
    solve = [](sem::GroundContext& ctx, const sem::State& init,
               const pddl::Condition& goal, const solver::SearchBudget& b) {
      return solver::solve_satisficing(ctx, init, goal, b);
    };

  std::size_t n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.n_total) * cfg.train_ratio));
  std::size_t n_val = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.n_total) * cfg.validation_ratio));
  if (n_train + n_val > cfg.n_total) n_val = cfg.n_total - n_train;

  artobj::Generator gen(cfg.chain);
  sem::GroundContext& ctx = gen.context();
  SampleSpec spec;
  if (!cfg.chain.use_macros) spec.domain_tag = artobj::kNoMacroTag;
  spec.token_budget = cfg.token_budget;

  BuildResult result;
  result.report.requested = cfg.n_total;
  std::unordered_map<std::string, std::string> seen_prompts;  // prompt -> id

  for (std::size_t i = 0; i < cfg.n_total; ++i) {
    const char* split_name =
        i < n_train ? "train" : i < n_train + n_val ? "validation" : "test";
    std::vector<TrainingSample>& split =
        i < n_train             ? result.splits.train
        : i < n_train + n_val   ? result.splits.validation
                                : result.splits.test;

    std::mt19937_64 wrng(cfg.seed ^ (i * 0x9E3779B97F4A7C15ULL) ^
                         0x2545F4914F6CDD1DULL);
    const int walk_len =
        std::uniform_int_distribution<int>(cfg.walk_min, cfg.walk_max)(wrng);
    artobj::GeneratedProblem gp = gen.generate(cfg.seed + i, walk_len);

    sem::State init = ctx.make_state(gp.problem.init);
    solver::SolveResult res = solve(ctx, init, gp.problem.goal, cfg.budget);
    if (!res.solved()) {
      result.report.drops.push_back(
          {gp.problem.name, split_name, "solver-failure"});
      ++result.report.failures;
      continue;
    }

    TrainingSample sample;
    try {
      sample = build_sample(gp, res.plan, spec);
    } catch (const SampleOverBudget&) {
      result.report.drops.push_back(
          {gp.problem.name, split_name, "over-budget"});
      continue;
    }

    auto [it, fresh] = seen_prompts.emplace(sample.prompt, sample.problem_id);
    if (!fresh) {
      result.report.drops.push_back(
          {gp.problem.name, split_name, "duplicate"});
      continue;
    }
    split.push_back(std::move(sample));
  }

  result.report.kept = result.splits.train.size() +
                       result.splits.validation.size() +
                       result.splits.test.size();
  return result;
}

void write_jsonl(const std::vector<TrainingSample>& split,
                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& s : split) {
    nlohmann::json j;
    j["prompt"] = s.prompt;
    j["completion"] = s.completion;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<TrainingSample> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<TrainingSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
    if (!j.is_object() || j.size() != 2 || !j.contains("prompt") ||
        !j.contains("completion") || !j["prompt"].is_string() ||
        !j["completion"].is_string())
      throw std::runtime_error(
          path + ":" + std::to_string(line_no) +
          ": expected an object with exactly the string keys "
          "\"prompt\" and \"completion\"");
    TrainingSample s;
    s.prompt = j["prompt"].get<std::string>();
    s.completion = j["completion"].get<std::string>();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::vector<TrainingSample>>>
staged_prefixes(const std::vector<TrainingSample>& train,
                const std::vector<std::size_t>& sizes) {
  std::vector<std::pair<std::size_t, std::vector<TrainingSample>>> out;
  for (std::size_t size : sizes) {
    if (size > train.size()) continue;
    out.emplace_back(size, std::vector<TrainingSample>(train.begin(),
                                                       train.begin() + size));
  }
  return out;
}

nlohmann::json AuditReport::to_json() const {
  nlohmann::json j;
  j["samples_checked"] = samples_checked;
  j["clean"] = clean();
  j["violations"] = nlohmann::json::array();
  for (const auto& v : violations)
    j["violations"].push_back(
        {{"sample_id", v.sample_id}, {"kind", v.kind}, {"detail", v.detail}});
  return j;
}

AuditReport AuditReport::from_json(const nlohmann::json& j) {
  AuditReport r;
  r.samples_checked = j.at("samples_checked").get<std::size_t>();
  for (const auto& v : j.at("violations")) {
    r.violations.push_back({v.at("sample_id").get<std::string>(),
                            v.at("kind").get<std::string>(),
                            v.at("detail").get<std::string>()});
  }
  return r;
}

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

AuditReport audit_dataset(const DatasetSplits& splits,
                          const pddl::DomainDef& domain,
                          const artobj::ChainConfig& cfg, bool expect_tag,
                          std::size_t token_budget) {
  AuditReport report;
  std::unordered_map<std::string, std::string> seen_prompts;
  std::optional<sem::GroundContext> ctx;  // grounded once, on first sample

  const std::string tag = artobj::kNoMacroTag;
  struct SplitRef {
    const char* name;
    const std::vector<TrainingSample>* samples;
  };
  const SplitRef refs[] = {{"train", &splits.train},
                           {"validation", &splits.validation},
                           {"test", &splits.test}};

  for (const auto& ref : refs) {
    for (std::size_t i = 0; i < ref.samples->size(); ++i) {
      const TrainingSample& s = (*ref.samples)[i];
      ++report.samples_checked;
      const std::string id =
          s.problem_id.empty()
              ? std::string(ref.name) + "[" + std::to_string(i) + "]"
              : s.problem_id;
      auto flag = [&](std::string kind, std::string detail) {
        report.violations.push_back({id, std::move(kind), std::move(detail)});
      };

      if (!ends_with(s.prompt, kPromptTerminator))
        flag("terminator", "prompt does not end with the prompt terminator");
      if (!ends_with(s.completion, kCompletionEnd))
        flag("terminator", "completion does not end with the END terminator");
      if (s.completion.empty() || s.completion[0] != ' ')
        flag("format", "completion does not start with a space");

      const bool has_tag = s.prompt.compare(0, tag.size(), tag) == 0;
      if (expect_tag && !has_tag)
        flag("tag", "expected the domain tag on every prompt");
      if (!expect_tag && has_tag)
        flag("tag", "unexpected domain tag");

      if (estimate_tokens(s.prompt) + estimate_tokens(s.completion) >
          token_budget)
        flag("token-budget", "sample exceeds the token budget");

      auto [it, fresh] = seen_prompts.emplace(s.prompt, id);
      if (!fresh) {
        flag("contamination", "prompt already present as " + it->second);
        continue;  // re-validating an exact duplicate adds nothing
      }

      try {
        artobj::PromptParse parsed = artobj::parse_prompt(s.prompt, cfg);
        pddl::PlanParse pp = pddl::parse_plan(s.completion);
        if (!ctx) ctx.emplace(domain, parsed.problem);
        sem::State init = ctx->make_state(parsed.problem.init);
        sem::ValidationReport vr =
            sem::validate_plan(*ctx, init, parsed.problem.goal, pp.plan);
        if (!vr.valid())
          flag("validation", vr.verdict_text() + ": " + vr.reason);
      } catch (const std::exception& e) {
        flag("validation", std::string("reconstitution failed: ") + e.what());
      }
    }
  }
  return report;
}

}  // namespace chainplan::dataset
