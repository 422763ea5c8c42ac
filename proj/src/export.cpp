#include "argbot/export.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "argbot/error.hpp"
#include "argbot/text.hpp"

namespace argbot::exporting {

using analytics::OutcomeRow;

ParticipantTable build_participant_table(const std::map<GroupId, DiscussionRoom>& rooms,
                                         const orchestrator::ParticipantRegistry& participants,
                                         const std::vector<annotation::CommentAnnotation>& annotations,
                                         const ExperimentConfig& config) {
  orchestrator::Dataset data;
  data.participants = participants.list();
  for (const auto& [id, room] : rooms) data.room_sizes[id] = room.members.size();
  auto [kept, report] = orchestrator::apply_exclusions(data, config);

  std::map<std::pair<GroupId, std::uint64_t>, const annotation::CommentAnnotation*> by_key;
  for (const auto& a : annotations) by_key[{a.group_id, a.comment_id}] = &a;

  // Per-room shares over all members.
  std::map<ParticipantId, std::pair<std::optional<double>, std::optional<double>>> shares;
  for (const auto& [id, room] : rooms) {
    std::vector<double> counts;
    std::vector<std::vector<std::string>> texts;
    for (const auto& m : room.members) {
      double n = 0.0;
      std::vector<std::string> mine;
      for (const auto& c : room.comments) {
        if (!c.bot_generated && c.sender == m) {
          n += 1.0;
          mine.push_back(c.text);
        }
      }
      counts.push_back(n);
      texts.push_back(std::move(mine));
    }
    std::optional<std::vector<double>> by_comments, by_tokens;
    try {
      by_comments = analytics::share_of_comments(counts);
    } catch (const Error& e) {
      if (e.code() != Errc::UndefinedRatio) throw;
    }
    try {
      by_tokens = analytics::share_of_tokens(texts);
    } catch (const Error& e) {
      if (e.code() != Errc::UndefinedRatio) throw;
    }
    for (std::size_t i = 0; i < room.members.size(); ++i) {
      auto& s = shares[room.members[i]];
      if (by_comments) s.first = (*by_comments)[i];
      if (by_tokens) s.second = (*by_tokens)[i];
    }
  }

  ParticipantTable table;
  table.exclusions = std::move(report);
  for (const auto& p : kept.participants) {
    const auto& room = rooms.at(*p.group_id);
    std::set<std::string> args;
    for (const auto& c : room.comments) {
      if (c.bot_generated || c.sender != p.id) continue;
      auto it = by_key.find({room.group_id, c.id});
      if (it == by_key.end()) {
        throw Error(Errc::MissingAnnotation, "comment " + std::to_string(c.id) + " of " + p.id + " in room " +
                                                 std::to_string(room.group_id) + " is not annotated");
      }
      args.insert(it->second->arguments.begin(), it->second->arguments.end());
    }
    OutcomeRow row;
    row.participant_id = p.id;
    row.group_id = room.group_id;
    row.condition = room.condition;
    row.unique_arguments = static_cast<double>(args.size());
    row.share_comments = shares[p.id].first;
    row.share_tokens = shares[p.id].second;
    if (p.post) {
      row.representativeness =
          analytics::representativeness(p.post->repr_own, p.post->repr_express, p.post->repr_marginalized);
      row.viewpoints_range = p.post->viewpoints_range;
      row.new_arguments = p.post->new_arguments;
      row.different_backgrounds = p.post->different_backgrounds;
      row.opportunity = p.post->opportunity;
    }
    row.controls.group_size = static_cast<double>(room.members.size());
    if (p.pre) {
      row.controls.age = p.pre->age;
      if (p.pre->sex != Sex::Other) row.controls.male = p.pre->sex == Sex::Male ? 1.0 : 0.0;
      row.controls.education = p.pre->education;
      row.controls.exp_political = p.pre->exp_political;
      row.controls.exp_online = p.pre->exp_online;
    }
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const OutcomeRow& a, const OutcomeRow& b) {
    return std::tie(a.group_id, a.participant_id) < std::tie(b.group_id, b.participant_id);
  });
  return table;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::optional<double> parse_cell(const std::string& s, std::size_t line_no) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string to_csv(const std::vector<OutcomeRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    const auto& c = r.controls;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.participant_id),
                       r.group_id, to_string(r.condition), cell(r.unique_arguments), cell(r.share_comments),
                       cell(r.share_tokens), cell(r.representativeness), cell(r.viewpoints_range),
                       cell(r.new_arguments), cell(r.different_backgrounds), cell(r.opportunity), cell(c.group_size),
                       cell(c.age), cell(c.male), cell(c.education), cell(c.exp_political), cell(c.exp_online));
  }
  return out;
}

std::vector<OutcomeRow> parse_csv(std::string_view csv) {
  auto lines = text::split(csv, '\n');
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  if (lines.empty() || lines[0] != kCsvHeader) throw Error(Errc::ParseError, "participant table header mismatch");
  std::vector<OutcomeRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 17) {
      throw Error(Errc::ParseError, "line " + std::to_string(i + 1) + ": expected 17 fields, got " +
                                        std::to_string(f.size()));
    }
    OutcomeRow r;
    r.participant_id = f[0];
    const auto gid = parse_cell(f[1], i + 1);
    if (!gid) throw Error(Errc::ParseError, "line " + std::to_string(i + 1) + ": missing group_id");
    r.group_id = static_cast<GroupId>(*gid);
    try {
      r.condition = parse_condition(f[2]);
    } catch (const Error& e) {
      throw Error(Errc::ParseError, "line " + std::to_string(i + 1) + ": " + e.what());
    }
    r.unique_arguments = parse_cell(f[3], i + 1);
    r.share_comments = parse_cell(f[4], i + 1);
    r.share_tokens = parse_cell(f[5], i + 1);
    r.representativeness = parse_cell(f[6], i + 1);
    r.viewpoints_range = parse_cell(f[7], i + 1);
    r.new_arguments = parse_cell(f[8], i + 1);
    r.different_backgrounds = parse_cell(f[9], i + 1);
    r.opportunity = parse_cell(f[10], i + 1);
    r.controls.group_size = parse_cell(f[11], i + 1);
    r.controls.age = parse_cell(f[12], i + 1);
    r.controls.male = parse_cell(f[13], i + 1);
    r.controls.education = parse_cell(f[14], i + 1);
    r.controls.exp_political = parse_cell(f[15], i + 1);
    r.controls.exp_online = parse_cell(f[16], i + 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string exclusions_tsv(const orchestrator::ExclusionReport& report) {
  std::string out = "participant_id\treasons\n";
  for (const auto& e : report.excluded) {
    std::vector<std::string> reasons;
    for (auto r : e.reasons) reasons.emplace_back(orchestrator::to_string(r));
    out += e.participant + "\t" + text::join(reasons, ",") + "\n";
  }
  return out;
}

}  // namespace argbot::exporting
