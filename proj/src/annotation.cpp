#include "argbot/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "argbot/error.hpp"
#include "argbot/prompt_templates.hpp"
#include "argbot/text.hpp"

namespace argbot::annotation {

nlohmann::json to_json(const CommentAnnotation& a) {
  nlohmann::json j;
  j["group_id"] = a.group_id;
  j["comment_id"] = a.comment_id;
  j["sender"] = a.sender;
  j["arguments"] = a.arguments;
  j["sentinel_hit"] = a.sentinel_hit;
  j["error"] = a.error;
  j["unknown_names"] = a.unknown_names;
  j["raw"] = a.raw;
  return j;
}

CommentAnnotation annotation_from_json(const nlohmann::json& j) {
  try {
    CommentAnnotation a;
    a.group_id = j.at("group_id").get<GroupId>();
    a.comment_id = j.at("comment_id").get<std::uint64_t>();
    a.sender = j.at("sender").get<std::string>();
    a.arguments = j.at("arguments").get<std::vector<std::string>>();
    a.sentinel_hit = j.at("sentinel_hit").get<bool>();
    a.error = j.at("error").get<bool>();
    a.unknown_names = j.value("unknown_names", std::size_t{0});
    a.raw = j.value("raw", "");
    return a;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::ParseError, std::string("annotation record: ") + ex.what());
  }
}

std::vector<Comment> strip_bot_comments(const std::vector<Comment>& transcript) {
  std::vector<Comment> out;
  std::copy_if(transcript.begin(), transcript.end(), std::back_inserter(out),
               [](const Comment& c) { return !c.bot_generated; });
  return out;
}

std::string format_loa(const ArgumentCatalog& catalog) {
  std::string out;
  for (const auto& a : catalog.arguments()) {
    if (!out.empty()) out += '\n';
    out += a.name + ": " + a.explanation;
  }
  return out;
}

namespace {

std::string_view strip_fence(std::string_view s) {
  std::string_view t = s;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.remove_prefix(1);
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.remove_suffix(1);
  if (t.substr(0, 3) != "```") return s;
  const auto first_nl = t.find('\n');
  if (first_nl == std::string_view::npos) return s;
  t.remove_prefix(first_nl + 1);
  if (t.size() >= 3 && t.substr(t.size() - 3) == "```") t.remove_suffix(3);
  return t;
}

}  // namespace

ParsedReply parse_annotation_reply(std::string_view reply, const ArgumentCatalog& catalog) {
  const auto j = nlohmann::json::parse(strip_fence(reply), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("arguments") || !j["arguments"].is_array()) {
    throw Error(Errc::ParseError, "annotation reply is not a JSON object with an arguments array");
  }
  ParsedReply out;
  std::vector<std::string> found;
  bool sentinel = false;
  for (const auto& rec : j["arguments"]) {
    if (!rec.is_object() || !rec.contains("name") || !rec["name"].is_string()) {
      throw Error(Errc::ParseError, "annotation record without a name");
    }
    const std::string name = text::trim(rec["name"].get<std::string>());
    if (text::iequals(name, llm::kNoArgumentSentinel)) {
      sentinel = true;
      continue;
    }
    const Argument* arg = catalog.find(name);
    if (!arg) {
      ++out.unknown_names;
      continue;
    }
    found.push_back(arg->name);
  }
  for (const auto& a : catalog.arguments()) {
    if (std::find(found.begin(), found.end(), a.name) != found.end()) out.arguments.push_back(a.name);
  }
  out.sentinel_hit = sentinel && out.arguments.empty();
  return out;
}

Annotator::Annotator(const ArgumentCatalog& catalog, llm::Gateway& gateway, llm::GatewayPolicy policy)
    : catalog_(&catalog),
      gateway_(&gateway),
      policy_(policy),
      system_prompt_(prompts::render_annotation_system(format_loa(catalog))) {}

CommentAnnotation Annotator::annotate(const Comment& comment, GroupId group) const {
  CommentAnnotation out;
  out.group_id = group;
  out.comment_id = comment.id;
  out.sender = comment.sender;
  llm::CompletionRequest req;
  req.system_prompt = system_prompt_;
  req.user_prompt = prompts::render_annotation_user(comment.text);
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) req.user_prompt += kJsonReminder;
    try {
      out.raw = gateway_->complete(req, policy_);
      auto parsed = parse_annotation_reply(out.raw, *catalog_);
      out.arguments = std::move(parsed.arguments);
      out.sentinel_hit = parsed.sentinel_hit;
      out.unknown_names = parsed.unknown_names;
      return out;
    } catch (const Error& e) {
      spdlog::debug("annotation of comment {}/{} attempt {} failed: {}", group, comment.id, attempt + 1, e.what());
    }
  }
  out.error = true;
  out.arguments.clear();
  return out;
}

CommentAnnotation annotate_comment(const Comment& comment, const ArgumentCatalog& catalog, llm::Gateway& gateway,
                                   GroupId group) {
  return Annotator(catalog, gateway).annotate(comment, group);
}

ParticipantArgumentProfile unique_arguments(const ParticipantId& participant,
                                            const std::vector<CommentAnnotation>& annotations) {
  ParticipantArgumentProfile p{participant, 0, {}};
  for (const auto& a : annotations) {
    if (a.sender == participant) p.arguments.insert(a.arguments.begin(), a.arguments.end());
  }
  p.unique_argument_count = p.arguments.size();
  return p;
}

std::size_t group_unique_arguments(const std::vector<CommentAnnotation>& annotations) {
  std::set<std::string> all;
  for (const auto& a : annotations) all.insert(a.arguments.begin(), a.arguments.end());
  return all.size();
}

std::vector<SampledComment> draw_validation_sample(const std::vector<SampledComment>& pool, std::size_t n, Rng& rng) {
  if (n > pool.size()) {
    throw Error(Errc::SampleTooLarge,
                "sample of " + std::to_string(n) + " from " + std::to_string(pool.size()) + " comments");
  }
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.uniform_index(idx.size() - i)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<SampledComment> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

namespace {

std::string tsv_cell(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

std::string validation_review_tsv(const std::vector<SampledComment>& sample,
                                  const std::vector<CommentAnnotation>& annotations) {
  std::map<std::pair<GroupId, std::uint64_t>, const CommentAnnotation*> by_key;
  for (const auto& a : annotations) by_key[{a.group_id, a.comment_id}] = &a;
  std::string out = "comment\tmachine_annotation\n";
  for (const auto& s : sample) {
    auto it = by_key.find({s.group_id, s.comment_id});
    if (it == by_key.end()) {
      throw Error(Errc::MissingAnnotation,
                  "no annotation for comment " + std::to_string(s.comment_id) + " in room " + std::to_string(s.group_id));
    }
    const auto* a = it->second;
    const std::string machine = a->error ? "ERROR" : text::join(a->arguments, "; ");
    out += tsv_cell(s.text) + "\t" + tsv_cell(machine) + "\n";
  }
  return out;
}

std::string validation_ids_tsv(const std::vector<SampledComment>& sample) {
  std::string out = "group_id\tcomment_id\tsender\n";
  for (const auto& s : sample) {
    out += std::to_string(s.group_id) + "\t" + std::to_string(s.comment_id) + "\t" + tsv_cell(s.sender) + "\n";
  }
  return out;
}

namespace {

using Key = std::pair<GroupId, std::uint64_t>;

std::map<Key, std::set<std::string>> index(const std::vector<LabeledSet>& sets) {
  std::map<Key, std::set<std::string>> out;
  for (const auto& s : sets) {
    std::set<std::string> lowered;
    for (const auto& a : s.arguments) lowered.insert(text::to_lower(text::trim(a)));
    if (!out.emplace(Key{s.group_id, s.comment_id}, std::move(lowered)).second) {
      throw Error(Errc::IdMismatch, "duplicate comment " + std::to_string(s.comment_id) + " in room " +
                                        std::to_string(s.group_id));
    }
  }
  return out;
}

template <typename F>
double mean_over_pairs(const std::vector<LabeledSet>& machine, const std::vector<LabeledSet>& human, F score) {
  const auto m = index(machine);
  const auto h = index(human);
  if (m.size() != h.size()) throw Error(Errc::IdMismatch, "machine and human annotations cover different comments");
  if (m.empty()) throw Error(Errc::TooFewObservations, "no comments to compare");
  double total = 0.0;
  for (const auto& [key, ms] : m) {
    auto it = h.find(key);
    if (it == h.end()) {
      throw Error(Errc::IdMismatch, "comment " + std::to_string(key.second) + " in room " + std::to_string(key.first) +
                                        " has no human annotation");
    }
    total += score(ms, it->second);
  }
  return total / static_cast<double>(m.size());
}

}  // namespace

double agreement_rate(const std::vector<LabeledSet>& machine, const std::vector<LabeledSet>& human) {
  return mean_over_pairs(machine, human, [](const auto& a, const auto& b) { return a == b ? 1.0 : 0.0; });
}

double jaccard_agreement(const std::vector<LabeledSet>& machine, const std::vector<LabeledSet>& human) {
  return mean_over_pairs(machine, human, [](const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.contains(x);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
  });
}

std::vector<LabeledSet> to_labeled(const std::vector<CommentAnnotation>& annotations) {
  std::vector<LabeledSet> out;
  out.reserve(annotations.size());
  for (const auto& a : annotations) {
    out.push_back({a.group_id, a.comment_id, std::set<std::string>(a.arguments.begin(), a.arguments.end())});
  }
  return out;
}

}  // namespace argbot::annotation
