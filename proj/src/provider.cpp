#include "chainplan/provider.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "chainplan/semantics.hpp"

namespace chainplan::provider {

void CompletionRequest::validate() const {
  if (model.empty()) throw std::invalid_argument("model must not be empty");
  if (prompt.empty()) throw std::invalid_argument("prompt must not be empty");
  if (temperature < 0.0 || temperature > 2.0)
    throw std::invalid_argument("temperature must be in [0, 2]");
  if (presence_penalty < -2.0 || presence_penalty > 2.0)
    throw std::invalid_argument("presence_penalty must be in [-2, 2]");
  if (frequency_penalty < -2.0 || frequency_penalty > 2.0)
    throw std::invalid_argument("frequency_penalty must be in [-2, 2]");
  if (max_tokens == 0) throw std::invalid_argument("max_tokens must be >= 1");
}

const char* status_name(StreamStatus s) {
  switch (s) {
    case StreamStatus::pending:
      return "pending";
    case StreamStatus::stopped:
      return "stopped";
    case StreamStatus::truncated:
      return "truncated";
    case StreamStatus::error:
      return "error";
    case StreamStatus::cancelled:
      return "cancelled";
  }
  return "unknown";
}

ChunkStream::ChunkStream(std::string stop, std::size_t max_tokens)
    : stop_(std::move(stop)), char_budget_(max_tokens * 4) {}

ChunkStream::~ChunkStream() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    cancel_requested_ = true;
  }
  cv_.notify_all();
  if (producer_.joinable()) producer_.join();
}

std::optional<Chunk> ChunkStream::next() {
  std::unique_lock<std::mutex> lk(mu_);
  cv_.wait(lk, [&] { return !queue_.empty() || status_ != StreamStatus::pending; });
  if (queue_.empty()) return std::nullopt;
  Chunk c = std::move(queue_.front());
  queue_.pop_front();
  return c;
}

void ChunkStream::cancel() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    cancel_requested_ = true;
    queue_.clear();
    if (status_ == StreamStatus::pending) {
      status_ = StreamStatus::cancelled;
      detail_ = "cancelled";
    }
  }
  cv_.notify_all();
}

StreamStatus ChunkStream::status() const {
  std::lock_guard<std::mutex> lk(mu_);
  return status_;
}

std::string ChunkStream::error_detail() const {
  std::lock_guard<std::mutex> lk(mu_);
  return detail_;
}

std::string ChunkStream::collect() {
  std::string all;
  while (auto chunk = next()) all += chunk->text;
  return all;
}

bool ChunkStream::deliver_locked(std::string text) {
  bool keep_going = true;
  const std::size_t room = char_budget_ - delivered_chars_;
  if (text.size() >= room) {
    text.resize(room);
    keep_going = false;  // budget exhausted with this fragment
  }
  if (!text.empty()) {
    delivered_chars_ += text.size();
    queue_.push_back({std::move(text), std::chrono::steady_clock::now()});
    cv_.notify_all();
  }
  return keep_going;
}

bool ChunkStream::push(std::string_view raw) {
  std::lock_guard<std::mutex> lk(mu_);
  if (status_ != StreamStatus::pending || cancel_requested_) return false;

  std::string text = std::move(held_);
  held_.clear();
  text.append(raw);

  if (!stop_.empty()) {
    const std::size_t stop_at = text.find(stop_);
    if (stop_at != std::string::npos) {
      const bool within_budget = deliver_locked(text.substr(0, stop_at));
      close_locked(within_budget ? StreamStatus::stopped
                                 : StreamStatus::truncated,
                   "");
      return false;
    }
    // hold back the longest tail that could still grow into the stop string
    const std::size_t max_hold = std::min(stop_.size() - 1, text.size());
    for (std::size_t n = max_hold; n > 0; --n) {
      if (text.compare(text.size() - n, n, stop_, 0, n) == 0) {
        held_ = text.substr(text.size() - n);
        text.resize(text.size() - n);
        break;
      }
    }
  }

  if (!deliver_locked(std::move(text))) {
    close_locked(StreamStatus::truncated, "");
    return false;
  }
  return true;
}

void ChunkStream::close(StreamStatus final_status, const std::string& detail) {
  std::lock_guard<std::mutex> lk(mu_);
  close_locked(final_status, detail);
}

void ChunkStream::close_locked(StreamStatus final_status,
                               const std::string& detail) {
  if (status_ != StreamStatus::pending) return;
  if (!held_.empty() && final_status != StreamStatus::cancelled &&
      final_status != StreamStatus::error) {
    // a partial stop match that never completed is ordinary text
    if (!deliver_locked(std::move(held_)))
      final_status = StreamStatus::truncated;
    held_.clear();
  }
  status_ = final_status;
  detail_ = detail;
  cv_.notify_all();
}

bool ChunkStream::cancelled() const {
  std::lock_guard<std::mutex> lk(mu_);
  return cancel_requested_;
}

void ChunkStream::attach_producer(std::thread t) {
  if (producer_.joinable())
    throw std::logic_error("stream already has a producer");
  producer_ = std::move(t);
}

std::string prompt_hash(std::string_view prompt) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : prompt) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

void append_replay_record(const std::string& path, const ReplayRecord& rec) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  nlohmann::json j;
  j["prompt_hash"] = rec.prompt_hash;
  j["completion"] = rec.completion;
  j["chunks"] = nlohmann::json::array();
  for (const auto& [offset, text] : rec.chunks)
    j["chunks"].push_back({offset, text});
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ReplayRecord> load_replay_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<ReplayRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      ReplayRecord rec;
      rec.prompt_hash = j.at("prompt_hash").get<std::string>();
      rec.completion = j.at("completion").get<std::string>();
      if (j.contains("chunks"))
        for (const auto& c : j["chunks"])
          rec.chunks.emplace_back(c.at(0).get<double>(),
                                  c.at(1).get<std::string>());
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return out;
}

namespace {

// Sleeps in small slices so cancellation is observed promptly.
bool interruptible_sleep(ChunkStream& stream, std::chrono::milliseconds total) {
  auto remaining = total;
  while (remaining.count() > 0) {
    if (stream.cancelled()) return false;
    auto slice = std::min(remaining, std::chrono::milliseconds(10));
    std::this_thread::sleep_for(slice);
    remaining -= slice;
  }
  return !stream.cancelled();
}

class EmulatedProvider : public Provider {
 public:
  explicit EmulatedProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {}

  StreamPtr complete(const CompletionRequest& request) override {
    request.validate();
    auto stream = std::make_shared<ChunkStream>(request.stop,
                                                request.max_tokens);
    ChunkStream* s = stream.get();
    std::string prompt = request.prompt;
    const bool streaming = request.stream;
    stream->attach_producer(std::thread([this, s, prompt, streaming] {
      run(s, prompt, streaming);
    }));
    return stream;
  }

 private:
  void run(ChunkStream* s, const std::string& prompt, bool streaming) {
    std::string raw;
    try {
      raw = completion_for(prompt);
    } catch (const std::exception& e) {
      s->close(StreamStatus::error, e.what());
      return;
    }

    const auto delay = std::chrono::milliseconds(cfg_.chunk_delay_ms);
    if (!streaming) {
      // one response after the whole emulated generation time
      std::size_t lines = 1;
      for (char c : raw)
        if (c == '\n') ++lines;
      if (!interruptible_sleep(*s, delay * static_cast<int>(lines - 1))) return;
      s->push(raw);
      s->close(StreamStatus::stopped);
      return;
    }

    // one chunk per line: each action line costs one delay and arrives
    // newline-terminated, so the consumer can act on it immediately; the END
    // line follows the last action with no extra delay
    std::size_t pos = 0;
    while (pos < raw.size()) {
      std::size_t eol = raw.find('\n', pos);
      std::string line = raw.substr(pos, eol == std::string::npos
                                             ? std::string::npos
                                             : eol - pos);
      pos = eol == std::string::npos ? raw.size() : eol + 1;
      const bool is_end = line == "END";
      if (!is_end && !interruptible_sleep(*s, delay)) return;
      if (!s->push(is_end ? line : line + "\n")) return;
    }
    s->close(StreamStatus::stopped);
  }

  std::string completion_for(const std::string& prompt) {
    artobj::PromptParse parsed = artobj::parse_prompt(prompt, cfg_.chain);
    // the tag selects the atomic variant; untagged prompts get the macros
    artobj::Generator& gen = generator(!parsed.no_macro_tag);
    sem::GroundContext& ctx = gen.context();
    sem::State init = ctx.make_state(parsed.problem.init);
    solver::SolveResult res =
        solver::solve_satisficing(ctx, init, parsed.problem.goal, cfg_.budget);

    std::string body;
    if (res.solved()) {
      for (std::size_t i = 0; i < res.plan.steps.size(); ++i) {
        if (i) body += '\n';
        body += pddl::render_step(res.plan.steps[i]);
      }
    }
    return " " + body + "\nEND";
  }

  artobj::Generator& generator(bool use_macros) {
    std::lock_guard<std::mutex> lk(mu_);
    auto& slot = use_macros ? macro_gen_ : atomic_gen_;
    if (!slot) {
      artobj::ChainConfig variant = cfg_.chain;
      variant.use_macros = use_macros;
      slot = std::make_unique<artobj::Generator>(variant);
    }
    return *slot;
  }

  ProviderConfig cfg_;
  std::mutex mu_;
  std::unique_ptr<artobj::Generator> macro_gen_;
  std::unique_ptr<artobj::Generator> atomic_gen_;
};

class ReplayProvider : public Provider {
 public:
  explicit ReplayProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    for (auto& rec : load_replay_log(cfg_.replay_log))
      records_[rec.prompt_hash] = std::move(rec);
  }

  StreamPtr complete(const CompletionRequest& request) override {
    request.validate();
    auto stream = std::make_shared<ChunkStream>(request.stop,
                                                request.max_tokens);
    auto it = records_.find(prompt_hash(request.prompt));
    if (it == records_.end()) {
      stream->close(StreamStatus::error,
                    "no replay record for prompt hash " +
                        prompt_hash(request.prompt));
      return stream;
    }
    ReplayRecord rec = it->second;  // copied: the stream may outlive us
    const bool timed = cfg_.replay_timings && request.stream;
    ChunkStream* s = stream.get();
    stream->attach_producer(std::thread([s, rec = std::move(rec), timed] {
      if (rec.chunks.empty() || !timed) {
        s->push(rec.completion);
      } else {
        const auto t0 = std::chrono::steady_clock::now();
        for (const auto& [offset_ms, text] : rec.chunks) {
          const auto due =
              t0 + std::chrono::milliseconds(static_cast<long>(offset_ms));
          while (std::chrono::steady_clock::now() < due) {
            if (s->cancelled()) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
          }
          if (!s->push(text)) return;
        }
      }
      s->close(StreamStatus::stopped);
    }));
    return stream;
  }

 private:
  ProviderConfig cfg_;
  std::unordered_map<std::string, ReplayRecord> records_;
};

class RemoteProvider : public Provider {
 public:
  explicit RemoteProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty())
      throw std::invalid_argument("remote provider needs an endpoint");
  }

  StreamPtr complete(const CompletionRequest& request) override {
    request.validate();
    auto stream = std::make_shared<ChunkStream>(request.stop,
                                                request.max_tokens);
    const char* token = std::getenv(cfg_.auth_env.c_str());
    if (token == nullptr || *token == '\0') {
      stream->close(StreamStatus::error,
                    "auth token environment variable " + cfg_.auth_env +
                        " is not set");
      return stream;
    }
    ChunkStream* s = stream.get();
    CompletionRequest req = request;
    std::string auth = std::string("Bearer ") + token;
    stream->attach_producer(std::thread([this, s, req, auth] {
      try {
        run(s, req, auth);
      } catch (const std::exception& e) {
        s->close(StreamStatus::error, e.what());
      }
    }));
    return stream;
  }

 private:
  void run(ChunkStream* s, const CompletionRequest& req,
           const std::string& auth) {
    nlohmann::json body;
    body["model"] = req.model;
    body["prompt"] = req.prompt;
    body["temperature"] = req.temperature;
    body["presence_penalty"] = req.presence_penalty;
    body["frequency_penalty"] = req.frequency_penalty;
    body["stop"] = req.stop;
    body["max_tokens"] = req.max_tokens;
    body["stream"] = req.stream;

    httplib::Client cli(cfg_.endpoint);
    cli.set_read_timeout(60, 0);
    httplib::Headers headers = {{"Authorization", auth}};

    ReplayRecord rec;
    rec.prompt_hash = prompt_hash(req.prompt);
    const auto t0 = std::chrono::steady_clock::now();
    auto note_chunk = [&](const std::string& text) {
      if (cfg_.record_log.empty()) return;
      const double offset_ms =
          std::chrono::duration<double, std::milli>(
              std::chrono::steady_clock::now() - t0)
              .count();
      rec.chunks.emplace_back(offset_ms, text);
      rec.completion += text;
    };

    bool done_marker = false;
    std::string sse_buffer;
    auto handle_event = [&](const std::string& payload) -> bool {
      if (payload == "[DONE]") {
        done_marker = true;
        return false;
      }
      nlohmann::json j = nlohmann::json::parse(payload);
      std::string text;
      if (j.contains("text"))
        text = j["text"].get<std::string>();
      else if (j.contains("choices") && !j["choices"].empty())
        text = j["choices"][0].value("text", "");
      note_chunk(text);
      return s->push(text);
    };

    if (req.stream) {
      httplib::Request hreq;
      hreq.method = "POST";
      hreq.path = cfg_.completions_path;
      hreq.headers = headers;
      hreq.set_header("Content-Type", "application/json");
      hreq.body = body.dump();
      hreq.content_receiver = [&](const char* data, size_t len, uint64_t,
                                  uint64_t) {
        if (s->cancelled()) return false;
        sse_buffer.append(data, len);
        std::size_t eol;
        while ((eol = sse_buffer.find('\n')) != std::string::npos) {
          std::string line = sse_buffer.substr(0, eol);
          sse_buffer.erase(0, eol + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.compare(0, 5, "data:") != 0) continue;
          std::string payload = line.substr(5);
          if (!payload.empty() && payload.front() == ' ') payload.erase(0, 1);
          if (!handle_event(payload)) return false;
        }
        return true;
      };
      auto res = cli.send(hreq);
      if (s->status() != StreamStatus::pending) {
        // stop/budget/cancel already decided the outcome
      } else if (!res && !done_marker) {
        s->close(StreamStatus::error,
                 "HTTP request failed: " + httplib::to_string(res.error()));
      } else if (res && res->status != 200 && !done_marker) {
        s->close(StreamStatus::error,
                 "HTTP status " + std::to_string(res->status));
      } else {
        s->close(StreamStatus::stopped);
      }
    } else {
      auto res = cli.Post(cfg_.completions_path, headers, body.dump(),
                          "application/json");
      if (!res) {
        s->close(StreamStatus::error,
                 "HTTP request failed: " + httplib::to_string(res.error()));
        return;
      }
      if (res->status != 200) {
        s->close(StreamStatus::error,
                 "HTTP status " + std::to_string(res->status));
        return;
      }
      nlohmann::json j = nlohmann::json::parse(res->body);
      std::string text;
      if (j.contains("text"))
        text = j["text"].get<std::string>();
      else if (j.contains("choices") && !j["choices"].empty())
        text = j["choices"][0].value("text", "");
      note_chunk(text);
      s->push(text);
      s->close(StreamStatus::stopped);
    }

    if (!cfg_.record_log.empty() &&
        (s->status() == StreamStatus::stopped ||
         s->status() == StreamStatus::truncated))
      append_replay_record(cfg_.record_log, rec);
  }

  ProviderConfig cfg_;
};

}  // namespace

std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg) {
  switch (cfg.kind) {
    case ProviderConfig::Kind::remote:
      return std::make_unique<RemoteProvider>(cfg);
    case ProviderConfig::Kind::replay:
      return std::make_unique<ReplayProvider>(cfg);
    case ProviderConfig::Kind::emulated:
      return std::make_unique<EmulatedProvider>(cfg);
  }
  throw std::invalid_argument("unknown provider kind");
}

ProviderConfig make_replay(const std::string& log_file) {
  ProviderConfig cfg;
  cfg.kind = ProviderConfig::Kind::replay;
  cfg.replay_log = log_file;
  return cfg;
}

}  // namespace chainplan::provider
