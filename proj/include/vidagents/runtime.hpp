#pragma once

// Actor-style runtime. Agents own their state and only communicate through
// typed messages. Two scheduling modes:
//   deterministic - one global FIFO queue, single-threaded, reproducible traces
//   concurrent    - per-agent mailboxes drained in rounds, one thread per
//                   busy agent; delivery to a given agent stays serialized
//
// The runtime is parameterised on a Traits type providing:
//   Kind                       message-kind enumeration
//   Payload                    payload type (usually a std::variant)
//   AgentKind                  agent-kind enumeration
//   kind_name(Kind)            -> std::string_view
//   payload_matches(Kind, const Payload&) -> bool

#include <atomic>
#include <compare>
#include <cstdint>
#include <deque>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "vidagents/error.hpp"

namespace vidagents {

class AgentId {
 public:
  explicit AgentId(std::string name) : name_(std::move(name)) {
    if (name_.empty()) throw Error(Errc::InvalidArgument, "agent id must be non-empty");
  }
  AgentId(const char* name) : AgentId(std::string(name)) {}

  const std::string& name() const noexcept { return name_; }
  auto operator<=>(const AgentId&) const = default;

 private:
  std::string name_;
};

struct RuntimeConfig {
  std::uint64_t seed = 0;
  std::size_t max_steps = 1'000'000;
  bool deterministic = true;
};

struct Ack {
  std::uint64_t seq = 0;
};

struct TraceEntry {
  std::uint64_t seq = 0;
  std::string from;
  std::string to;
  std::string kind;
};

template <typename Traits>
struct Message {
  AgentId from;
  AgentId to;
  typename Traits::Kind kind;
  typename Traits::Payload payload;
  std::uint64_t seq = 0;
};

template <typename Traits>
class Runtime {
 public:
  using Kind = typename Traits::Kind;
  using Payload = typename Traits::Payload;
  using AgentKind = typename Traits::AgentKind;
  using Envelope = Message<Traits>;

  class Context {
   public:
    const AgentId& self() const noexcept { return self_; }
    std::uint64_t seed() const noexcept { return runtime_.seed_; }

    Ack send(const AgentId& to, Kind kind, Payload payload) {
      return runtime_.send(Envelope{self_, to, kind, std::move(payload)});
    }

   private:
    friend class Runtime;
    Context(Runtime& runtime, AgentId self) : runtime_(runtime), self_(std::move(self)) {}
    Runtime& runtime_;
    AgentId self_;
  };

  class Agent {
   public:
    virtual ~Agent() = default;
    virtual void receive(const Envelope& message, Context& context) = 0;
  };

  Runtime() = default;
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  AgentId spawn(AgentKind kind, const std::string& name, std::unique_ptr<Agent> agent) {
    AgentId id(name);
    if (!agent) throw Error(Errc::InvalidArgument, "spawn requires an agent instance");
    std::lock_guard lock(mu_);
    if (slots_.contains(name)) throw Error(Errc::DuplicateAgent, "agent already registered: " + name);
    auto slot = std::make_unique<Slot>();
    slot->kind = kind;
    slot->agent = std::move(agent);
    slots_.emplace(name, std::move(slot));
    return id;
  }

  Ack send(Envelope message) {
    if (!Traits::payload_matches(message.kind, message.payload)) {
      throw Error(Errc::InvalidPayload, "payload does not match message kind " +
                                            std::string(Traits::kind_name(message.kind)));
    }
    std::lock_guard lock(mu_);
    if (!slots_.contains(message.to.name())) {
      throw Error(Errc::UnknownRecipient, "no agent named " + message.to.name());
    }
    message.seq = next_seq_++;
    ++sent_;
    const std::uint64_t seq = message.seq;
    queue_.push_back(std::move(message));
    return Ack{seq};
  }

  /// Delivers messages until every mailbox is empty. Throws
  /// StepBudgetExceeded when max_steps deliveries happened and mail remains.
  /// Exceptions thrown by an agent's receive() propagate to the caller.
  std::size_t run_until_idle(const RuntimeConfig& config) {
    if (config.max_steps == 0) throw Error(Errc::InvalidArgument, "max_steps must be positive");
    seed_ = config.seed;
    return config.deterministic ? run_fifo(config) : run_rounds(config);
  }

  bool contains(const AgentId& id) const {
    std::lock_guard lock(mu_);
    return slots_.contains(id.name());
  }

  std::size_t pending() const {
    std::lock_guard lock(mu_);
    return queue_.size();
  }

  std::uint64_t sent_count() const {
    std::lock_guard lock(mu_);
    return sent_;
  }

  std::uint64_t delivered_count() const {
    std::lock_guard lock(mu_);
    return delivered_;
  }

  std::optional<AgentKind> kind_of(const AgentId& id) const {
    std::lock_guard lock(mu_);
    auto it = slots_.find(id.name());
    if (it == slots_.end()) return std::nullopt;
    return it->second->kind;
  }

  template <typename A>
  A& agent(const AgentId& id) {
    return const_cast<A&>(std::as_const(*this).template agent<A>(id));
  }

  template <typename A>
  const A& agent(const AgentId& id) const {
    std::lock_guard lock(mu_);
    auto it = slots_.find(id.name());
    if (it == slots_.end()) throw Error(Errc::UnknownRecipient, "no agent named " + id.name());
    auto* typed = dynamic_cast<const A*>(it->second->agent.get());
    if (typed == nullptr) throw Error(Errc::InvalidArgument, "agent " + id.name() + " has another type");
    return *typed;
  }

  std::vector<TraceEntry> trace() const {
    std::lock_guard lock(mu_);
    return trace_;
  }

  /// One line per delivery: seq<TAB>from<TAB>to<TAB>kind
  std::string trace_log() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& e : trace_) {
      out += std::to_string(e.seq) + '\t' + e.from + '\t' + e.to + '\t' + e.kind + '\n';
    }
    return out;
  }

  void clear_trace() {
    std::lock_guard lock(mu_);
    trace_.clear();
  }

 private:
  struct Slot {
    AgentKind kind{};
    std::unique_ptr<Agent> agent;
    std::mutex serial;
  };

  void record(const Envelope& message) {
    trace_.push_back(TraceEntry{message.seq, message.from.name(), message.to.name(),
                                std::string(Traits::kind_name(message.kind))});
    ++delivered_;
  }

  std::size_t run_fifo(const RuntimeConfig& config) {
    std::size_t steps = 0;
    for (;;) {
      std::optional<Envelope> message = [&]() -> std::optional<Envelope> {
        std::lock_guard lock(mu_);
        if (queue_.empty()) return std::nullopt;
        if (steps >= config.max_steps) {
          throw Error(Errc::StepBudgetExceeded,
                      "step budget of " + std::to_string(config.max_steps) + " exhausted with " +
                          std::to_string(queue_.size()) + " pending messages");
        }
        Envelope front = std::move(queue_.front());
        queue_.pop_front();
        return front;
      }();
      if (!message) return steps;
      Slot* slot = nullptr;
      {
        std::lock_guard lock(mu_);
        slot = slots_.at(message->to.name()).get();
        record(*message);
      }
      ++steps;
      Context context(*this, message->to);
      slot->agent->receive(*message, context);
    }
  }

  std::size_t run_rounds(const RuntimeConfig& config) {
    std::atomic<std::size_t> steps{0};
    for (;;) {
      std::map<Slot*, std::vector<Envelope>> batches;
      {
        std::lock_guard lock(mu_);
        if (queue_.empty()) return steps.load();
        if (steps.load() >= config.max_steps) {
          throw Error(Errc::StepBudgetExceeded,
                      "step budget of " + std::to_string(config.max_steps) + " exhausted with " +
                          std::to_string(queue_.size()) + " pending messages");
        }
        while (!queue_.empty()) {
          Slot* slot = slots_.at(queue_.front().to.name()).get();
          batches[slot].push_back(std::move(queue_.front()));
          queue_.pop_front();
        }
      }

      std::mutex error_mu;
      std::exception_ptr error;
      std::vector<Envelope> unprocessed;
      {
        std::vector<std::jthread> workers;
        workers.reserve(batches.size());
        for (auto& [slot, batch] : batches) {
          workers.emplace_back([&, slot = slot, &batch = batch] {
            std::lock_guard serial(slot->serial);
            for (std::size_t i = 0; i < batch.size(); ++i) {
              if (steps.fetch_add(1) >= config.max_steps) {
                steps.fetch_sub(1);
                std::lock_guard lock(error_mu);
                for (std::size_t j = i; j < batch.size(); ++j) unprocessed.push_back(std::move(batch[j]));
                return;
              }
              {
                std::lock_guard lock(mu_);
                record(batch[i]);
              }
              try {
                Context context(*this, batch[i].to);
                slot->agent->receive(batch[i], context);
              } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
                for (std::size_t j = i + 1; j < batch.size(); ++j) unprocessed.push_back(std::move(batch[j]));
                return;
              }
            }
          });
        }
      }
      if (!unprocessed.empty()) {
        std::lock_guard lock(mu_);
        for (auto it = unprocessed.rbegin(); it != unprocessed.rend(); ++it) {
          queue_.push_front(std::move(*it));
        }
      }
      if (error) std::rethrow_exception(error);
    }
  }

  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::deque<Envelope> queue_;
  std::vector<TraceEntry> trace_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t sent_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t seed_ = 0;
};

}  // namespace vidagents
