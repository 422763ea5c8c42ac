#include "argbot/argument_bot.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "argbot/error.hpp"
#include "argbot/prompt_templates.hpp"
#include "argbot/text.hpp"

namespace argbot::bot {

InjectionSchedule::InjectionSchedule(std::vector<Seconds> t) : times(std::move(t)), fired(times.size(), false) {}

void InjectionSchedule::mark_fired(std::size_t slot) {
  if (slot >= times.size()) throw Error(Errc::InvalidArgument, "no injection slot " + std::to_string(slot));
  if (fired[slot]) throw Error(Errc::IllegalTransition, "injection slot " + std::to_string(slot) + " already fired");
  fired[slot] = true;
}

std::string preprocess_log(const DiscussionRoom& room, const std::vector<Comment>& window) {
  std::string out;
  for (const auto& c : window) {
    std::string line = c.text;
    for (auto& ch : line) {
      if (ch == '\n' || ch == '\r') ch = ' ';
    }
    if (!out.empty()) out += '\n';
    out += room.display_name(c.sender);
    out += ": ";
    out += line;
  }
  return out;
}

std::string preprocess_log(const DiscussionRoom& room) { return preprocess_log(room, room.comments); }

std::string format_argument_list(const ArgumentCatalog& catalog) {
  std::vector<std::string> items;
  items.reserve(catalog.size());
  for (const auto& a : catalog.arguments()) items.push_back(a.name + ": " + a.explanation);
  return text::join(items, ", ");
}

std::string build_detection_prompt(std::string_view preprocessed_log, const ArgumentCatalog& catalog, int start_min,
                                   int end_min) {
  if (catalog.size() == 0) throw Error(Errc::InvalidCatalog, "detection prompt needs a non-empty catalog");
  return prompts::render_detection(start_min, end_min, preprocessed_log, format_argument_list(catalog));
}

namespace {

std::optional<std::string> tag_body(std::string_view s, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const std::string lower = text::to_lower(s);
  const auto a = lower.find(open);
  if (a == std::string::npos) return std::nullopt;
  const auto b = lower.find(close, a + open.size());
  if (b == std::string::npos) return std::nullopt;
  return std::string(s.substr(a + open.size(), b - a - open.size()));
}

// Catalog spellings for the comma-separated names in `body`.
std::vector<std::string> resolve_names(const std::string& body, const ArgumentCatalog& catalog, std::size_t& unknown) {
  std::vector<std::string> out;
  for (const auto& part : text::split(body, ',')) {
    std::string name = text::trim(part);
    if (name.empty() || text::iequals(name, "none")) continue;
    const Argument* arg = catalog.find(name);
    if (!arg) {
      // Replies sometimes echo "name: explanation".
      const auto colon = name.find(':');
      if (colon != std::string::npos) arg = catalog.find(name.substr(0, colon));
    }
    if (!arg) {
      ++unknown;
      continue;
    }
    if (std::find(out.begin(), out.end(), arg->name) == out.end()) out.push_back(arg->name);
  }
  return out;
}

std::vector<std::string> in_catalog_order(const ArgumentCatalog& catalog, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& a : catalog.arguments()) {
    if (std::find(names.begin(), names.end(), a.name) != names.end()) out.push_back(a.name);
  }
  return out;
}

}  // namespace

CoverageResult parse_coverage(std::string_view response, const ArgumentCatalog& catalog) {
  const auto not_body = tag_body(response, "arguments_not");
  if (!not_body) throw Error(Errc::ParseError, "coverage reply lacks an <arguments_not> block");
  CoverageResult r;
  r.raw_response = std::string(response);
  const auto mentioned_body = tag_body(response, "arguments_mentioned");
  auto mentioned = mentioned_body ? resolve_names(*mentioned_body, catalog, r.unknown_names) : std::vector<std::string>{};
  auto missing = resolve_names(*not_body, catalog, r.unknown_names);
  // A name listed in both blocks counts as mentioned.
  std::erase_if(missing, [&](const std::string& n) {
    return std::find(mentioned.begin(), mentioned.end(), n) != mentioned.end();
  });
  r.mentioned = in_catalog_order(catalog, mentioned);
  r.not_mentioned = in_catalog_order(catalog, missing);
  if (r.unknown_names > 0) spdlog::warn("coverage reply named {} unknown argument(s)", r.unknown_names);
  return r;
}

std::optional<std::string> select_missing(const std::vector<std::string>& candidates, Rng& rng) {
  if (candidates.empty()) return std::nullopt;
  return candidates[rng.uniform_index(candidates.size())];
}

std::string format_injection(const Argument& argument) {
  return "Have you considered " + argument.name + "? " + argument.explanation;
}

std::optional<CoverageResult> fetch_coverage(llm::Gateway& gateway, const std::string& prompt,
                                             const ArgumentCatalog& catalog, const llm::GatewayPolicy& policy) {
  llm::CompletionRequest req;
  req.user_prompt = prompt;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return parse_coverage(gateway.complete(req, policy), catalog);
    } catch (const Error& e) {
      spdlog::warn("detection attempt {} failed: {}", attempt + 1, e.what());
    }
  }
  return std::nullopt;
}

ArgumentBot::ArgumentBot(const ArgumentCatalog& catalog, GroupId group, std::uint64_t seed,
                         std::vector<Seconds> injection_times)
    : catalog_(&catalog), schedule_(std::move(injection_times)), rng_(Rng::stream(seed, "bot", group)) {}

std::string ArgumentBot::prompt_for(const DiscussionRoom& room, Seconds elapsed) const {
  const int end_min = static_cast<int>(std::floor(std::max(0.0, elapsed) / 60.0));
  return build_detection_prompt(preprocess_log(room), *catalog_, 0, end_min);
}

InjectionOutcome ArgumentBot::resolve(std::size_t slot, std::optional<CoverageResult> coverage) {
  schedule_.mark_fired(slot);
  InjectionOutcome out;
  out.slot = slot;
  std::vector<std::string> candidates;
  if (coverage) {
    for (const auto& n : coverage->mentioned) memory_.insert(text::to_lower(n));
    for (const auto& n : coverage->not_mentioned) {
      if (!memory_.contains(text::to_lower(n))) candidates.push_back(n);
    }
  } else {
    out.fallback = true;
    for (const auto& a : catalog_->arguments()) {
      if (!memory_.contains(text::to_lower(a.name))) candidates.push_back(a.name);
    }
  }
  if (auto pick = select_missing(candidates, rng_)) {
    const Argument* arg = catalog_->find(*pick);
    out.argument = *arg;
    out.message = format_injection(*arg);
    memory_.insert(text::to_lower(arg->name));
  }
  out.coverage = std::move(coverage);
  return out;
}

InjectionOutcome ArgumentBot::run_injection(std::size_t slot, const DiscussionRoom& room, Seconds elapsed,
                                            llm::Gateway& gateway, const llm::GatewayPolicy& policy) {
  if (room.condition == Condition::Control) throw Error(Errc::ControlRoom, "control rooms have no bot");
  return resolve(slot, fetch_coverage(gateway, prompt_for(room, elapsed), *catalog_, policy));
}

}  // namespace argbot::bot
