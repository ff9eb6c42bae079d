// Fine-tune job submission: uploads staged dataset files and chains one
// training job per stage, each starting from the previous stage's snapshot.
// Purely a client — success means the remote service accepted the jobs.
// Refuses to submit datasets without a clean audit.

#pragma once

#include <string>
#include <vector>

#include "chainplan/dataset.hpp"
#include "chainplan/provider.hpp"

namespace chainplan::finetune {

struct FinetuneSpec {
  std::vector<std::string> training_files;  // one per stage, in order
  std::string base_model = "text-davinci-002";
  int epochs = 2;
  std::vector<std::size_t> staged_sizes = {500, 1000, 2000, 4000, 8000};
};

struct SubmitResult {
  std::vector<std::string> job_ids;        // remote ids, or dry-run labels
  std::vector<std::string> payload_files;  // written in dry-run mode
};

// With a nonempty dry_run_dir the exact request payloads are written to disk
// (job_000.json, ...) and nothing touches the network; payload i references
// the snapshot produced by payload i-1. Throws std::invalid_argument when the
// audit is not clean or the file/stage counts disagree; std::runtime_error on
// remote rejection.
SubmitResult submit_finetune(const provider::ProviderConfig& cfg,
                             const FinetuneSpec& spec,
                             const dataset::AuditReport& audit,
                             const std::string& dry_run_dir = "");

}  // namespace chainplan::finetune
