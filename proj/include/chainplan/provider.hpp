// Provider-agnostic streaming completion clients.
//
// Every provider returns a ChunkStream: a bounded producer/consumer channel
// carrying text fragments plus a final status. Stop-string trimming and the
// max_tokens budget are enforced centrally in the stream, so all providers
// share identical termination semantics. Cancelling a stream aborts its
// producer promptly — replanning depends on that.
//
// Kinds:
//   remote   — POSTs to an HTTP completions endpoint, reads incremental
//              `data:` events; can record sessions to a replay log.
//   replay   — answers from a recorded log, keyed by prompt hash, optionally
//              reproducing the recorded chunk cadence.
//   emulated — parses the prompt back into a problem, runs the satisficing
//              solver, and emits the plan one action line at a time with a
//              configurable delay. The offline stand-in for a tuned model.

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "chainplan/artobj.hpp"
#include "chainplan/solver.hpp"

namespace chainplan::provider {

struct CompletionRequest {
  std::string model = "davinci";
  std::string prompt;
  double temperature = 0.0;
  double presence_penalty = 0.0;
  double frequency_penalty = 0.0;
  std::string stop = "END";
  std::size_t max_tokens = 1900;
  bool stream = true;

  void validate() const;  // throws std::invalid_argument on range violations
};

struct Chunk {
  std::string text;
  std::chrono::steady_clock::time_point at;
};

enum class StreamStatus { pending, stopped, truncated, error, cancelled };

const char* status_name(StreamStatus s);

class ChunkStream {
 public:
  ChunkStream(std::string stop, std::size_t max_tokens);
  ~ChunkStream();

  ChunkStream(const ChunkStream&) = delete;
  ChunkStream& operator=(const ChunkStream&) = delete;

  // -- consumer side --------------------------------------------------------
  std::optional<Chunk> next();  // blocks; nullopt once the stream has ended
  void cancel();                // aborts the producer promptly
  StreamStatus status() const;  // pending until the stream has ended
  std::string error_detail() const;
  std::string collect();        // drain to the end, return all delivered text

  // -- producer side --------------------------------------------------------
  // Feeds raw text. Handles stop detection across fragment boundaries and the
  // token budget; returns false once the producer should stop (stop string
  // seen, budget exhausted, or consumer cancelled).
  bool push(std::string_view raw);
  // Ends the stream; flushes any held-back partial stop match first. No-op if
  // the stream already ended.
  void close(StreamStatus final_status, const std::string& detail = "");
  bool cancelled() const;
  // Producer threads are owned by the stream and joined on destruction.
  void attach_producer(std::thread t);

 private:
  bool deliver_locked(std::string text);
  void close_locked(StreamStatus final_status, const std::string& detail);

  const std::string stop_;
  const std::size_t char_budget_;  // 4 chars/token

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Chunk> queue_;
  std::string held_;  // partial stop-string match held back from delivery
  std::size_t delivered_chars_ = 0;
  StreamStatus status_ = StreamStatus::pending;
  std::string detail_;
  bool cancel_requested_ = false;
  std::thread producer_;
};

using StreamPtr = std::shared_ptr<ChunkStream>;

struct ProviderConfig {
  enum class Kind { remote, replay, emulated };

  Kind kind = Kind::emulated;

  // remote — the auth token is read from the environment variable named in
  // auth_env, never from configuration on disk
  std::string endpoint;  // e.g. "http://127.0.0.1:8089"
  std::string completions_path = "/v1/completions";
  std::string files_path = "/v1/files";
  std::string finetunes_path = "/v1/fine-tunes";
  std::string auth_env = "CHAINPLAN_API_KEY";
  std::string record_log;  // optional: append a replayable record per request

  // replay
  std::string replay_log;
  bool replay_timings = true;

  // emulated
  int chunk_delay_ms = 0;
  artobj::ChainConfig chain;
  solver::SearchBudget budget;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual StreamPtr complete(const CompletionRequest& request) = 0;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg);

ProviderConfig make_replay(const std::string& log_file);

// FNV-1a 64-bit, lowercase hex; the replay log key.
std::string prompt_hash(std::string_view prompt);

struct ReplayRecord {
  std::string prompt_hash;
  std::string completion;  // raw completion text, before stop trimming
  // (offset since request start in ms, fragment); empty means "one chunk"
  std::vector<std::pair<double, std::string>> chunks;
};

void append_replay_record(const std::string& path, const ReplayRecord& rec);
std::vector<ReplayRecord> load_replay_log(const std::string& path);

}  // namespace chainplan::provider
