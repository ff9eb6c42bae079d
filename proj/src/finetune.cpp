#include "chainplan/finetune.hpp"

#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

namespace chainplan::finetune {

namespace {

nlohmann::json job_payload(const FinetuneSpec& spec, std::size_t stage,
                           const std::string& file_ref,
                           const std::string& from_model) {
  nlohmann::json j;
  j["training_file"] = file_ref;
  j["model"] = from_model;
  j["n_epochs"] = spec.epochs;
  j["suffix"] = "stage-" + std::to_string(stage);
  return j;
}

}  // namespace

SubmitResult submit_finetune(const provider::ProviderConfig& cfg,
                             const FinetuneSpec& spec,
                             const dataset::AuditReport& audit,
                             const std::string& dry_run_dir) {
  if (!audit.clean())
    throw std::invalid_argument(
        "refusing to submit: the dataset audit reported " +
        std::to_string(audit.violations.size()) + " violation(s)");
  if (spec.training_files.empty())
    throw std::invalid_argument("no training files");
  if (!spec.staged_sizes.empty() &&
      spec.training_files.size() != spec.staged_sizes.size())
    throw std::invalid_argument("stage count does not match file count");

  SubmitResult result;

  if (!dry_run_dir.empty()) {
    std::string from_model = spec.base_model;
    for (std::size_t i = 0; i < spec.training_files.size(); ++i) {
      nlohmann::json payload =
          job_payload(spec, i, spec.training_files[i], from_model);
      char name[32];
      std::snprintf(name, sizeof(name), "job_%03zu.json", i);
      const std::string path = dry_run_dir + "/" + name;
      std::ofstream out(path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open for writing: " + path);
      out << payload.dump(2) << '\n';
      if (!out) throw std::runtime_error("write failed: " + path);
      result.payload_files.push_back(path);
      const std::string job_id = "dry-run-" + std::to_string(i);
      result.job_ids.push_back(job_id);
      // later stages resume from this stage's (future) snapshot
      from_model = "snapshot-of-" + job_id;
    }
    return result;
  }

  if (cfg.endpoint.empty())
    throw std::invalid_argument("remote submission needs an endpoint");
  const char* token = std::getenv(cfg.auth_env.c_str());
  if (token == nullptr || *token == '\0')
    throw std::runtime_error("auth token environment variable " +
                             cfg.auth_env + " is not set");
  httplib::Client cli(cfg.endpoint);
  httplib::Headers headers = {
      {"Authorization", std::string("Bearer ") + token}};

  std::string from_model = spec.base_model;
  for (std::size_t i = 0; i < spec.training_files.size(); ++i) {
    std::ifstream in(spec.training_files[i], std::ios::binary);
    if (!in)
      throw std::runtime_error("cannot open: " + spec.training_files[i]);
    std::string contents((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());

    auto upload = cli.Post(cfg.files_path, headers, contents,
                           "application/jsonl");
    if (!upload || upload->status != 200)
      throw std::runtime_error(
          "file upload rejected: " +
          (upload ? "HTTP " + std::to_string(upload->status)
                  : httplib::to_string(upload.error())));
    const std::string file_id =
        nlohmann::json::parse(upload->body).at("id").get<std::string>();

    nlohmann::json payload = job_payload(spec, i, file_id, from_model);
    auto created = cli.Post(cfg.finetunes_path, headers, payload.dump(),
                            "application/json");
    if (!created || created->status != 200)
      throw std::runtime_error(
          "fine-tune creation rejected: " +
          (created ? "HTTP " + std::to_string(created->status)
                   : httplib::to_string(created.error())));
    nlohmann::json job = nlohmann::json::parse(created->body);
    result.job_ids.push_back(job.at("id").get<std::string>());
    from_model = job.value("fine_tuned_model",
                           "snapshot-of-" + result.job_ids.back());
  }
  return result;
}

}  // namespace chainplan::finetune
