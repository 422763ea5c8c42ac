#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "argbot/domain.hpp"
#include "argbot/llm_gateway.hpp"
#include "argbot/rng.hpp"

namespace argbot::bot {

struct InjectionSchedule {
  std::vector<Seconds> times{120.0, 300.0, 480.0};
  std::vector<bool> fired;

  explicit InjectionSchedule(std::vector<Seconds> t = {120.0, 300.0, 480.0});
  std::size_t size() const { return times.size(); }
  // Throws IllegalTransition if the slot already fired.
  void mark_fired(std::size_t slot);
};

// Names are catalog spellings, in catalog order.
struct CoverageResult {
  std::vector<std::string> mentioned;
  std::vector<std::string> not_mentioned;
  std::string raw_response;
  std::size_t unknown_names = 0;
};

// "Display: text" per comment, newlines folded to spaces. Bot comments are
// included under their display label.
std::string preprocess_log(const DiscussionRoom& room);
std::string preprocess_log(const DiscussionRoom& room, const std::vector<Comment>& window);

// "name: explanation" entries joined with ", ".
std::string format_argument_list(const ArgumentCatalog& catalog);

std::string build_detection_prompt(std::string_view preprocessed_log, const ArgumentCatalog& catalog, int start_min,
                                   int end_min);

// Throws Error(ParseError) if the <arguments_not> block is missing.
CoverageResult parse_coverage(std::string_view response, const ArgumentCatalog& catalog);

// Uniform draw; nullopt when `candidates` is empty.
std::optional<std::string> select_missing(const std::vector<std::string>& candidates, Rng& rng);

std::string format_injection(const Argument& argument);

// Detection call plus parse, with one retry on any gateway or parse error.
// nullopt after the second failure. Touches no bot state, so it can run off
// the room's event loop.
std::optional<CoverageResult> fetch_coverage(llm::Gateway& gateway, const std::string& prompt,
                                             const ArgumentCatalog& catalog, const llm::GatewayPolicy& policy);

struct InjectionOutcome {
  std::size_t slot = 0;
  std::optional<Argument> argument;  // none: nothing left to inject
  std::string message;
  bool fallback = false;
  std::optional<CoverageResult> coverage;
};

// Per-room bot state: schedule, seeded selection stream and the memory of
// arguments already seen or injected.
class ArgumentBot {
 public:
  ArgumentBot(const ArgumentCatalog& catalog, GroupId group, std::uint64_t seed,
              std::vector<Seconds> injection_times = {120.0, 300.0, 480.0});

  const InjectionSchedule& schedule() const { return schedule_; }
  const std::set<std::string>& memory() const { return memory_; }

  // Detection prompt over the whole transcript so far; `elapsed` is seconds
  // since discussion start and sets the end minute.
  std::string prompt_for(const DiscussionRoom& room, Seconds elapsed) const;

  // Marks the slot fired and picks the argument. With no coverage (gateway
  // or parse failure) selection falls back to catalog minus memory.
  InjectionOutcome resolve(std::size_t slot, std::optional<CoverageResult> coverage);

  // Synchronous convenience: prompt, fetch, resolve.
  InjectionOutcome run_injection(std::size_t slot, const DiscussionRoom& room, Seconds elapsed, llm::Gateway& gateway,
                                 const llm::GatewayPolicy& policy);

 private:
  const ArgumentCatalog* catalog_;
  InjectionSchedule schedule_;
  Rng rng_;
  std::set<std::string> memory_;  // lower-cased names
};

}  // namespace argbot::bot
