#include "argbot/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "argbot/error.hpp"
#include "argbot/text.hpp"

namespace argbot::store {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> out;
  for (auto& line : text::split(read_file(path), '\n')) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(std::move(line));
  }
  return out;
}

namespace {

void write_fresh(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw Error(Errc::Io, "write failed: " + path.string());
}

std::FILE* open_append(const fs::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "ab");
  if (!f) throw Error(Errc::Io, "cannot open " + path.string() + " for append");
  return f;
}

}  // namespace

void write_output(const fs::path& path, std::string_view content, bool force) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (fs::exists(path)) {
    if (read_file(path) == content) return;
    if (!force) {
      throw Error(Errc::OutputExists, path.string() + " exists with different content (use --force to replace)");
    }
  }
  fs::path tmp = path;
  tmp += ".tmp";
  write_fresh(tmp, content);
  fs::rename(tmp, path);
}

bool same_tree(const fs::path& a, const fs::path& b) {
  auto listing = [](const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
    }
    std::sort(files.begin(), files.end());
    return files;
  };
  const auto fa = listing(a);
  if (fa != listing(b)) return false;
  for (const auto& rel : fa) {
    if (read_file(a / rel) != read_file(b / rel)) return false;
  }
  return true;
}

void publish_directory(const fs::path& staged, const fs::path& target, bool force) {
  if (fs::exists(target) && !fs::is_empty(target)) {
    if (same_tree(staged, target)) {
      fs::remove_all(staged);
      return;
    }
    if (!force) {
      fs::remove_all(staged);
      throw Error(Errc::OutputExists, target.string() + " exists with different content (use --force to replace)");
    }
  }
  fs::remove_all(target);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::rename(staged, target);
}

// ---------------------------------------------------------------------------

SessionStore::SessionStore(fs::path root, nlohmann::json manifest, Options options)
    : root_(std::move(root)), manifest_(std::move(manifest)), options_(options) {}

SessionStore::~SessionStore() {
  for (auto& [id, f] : room_files_) std::fclose(f);
  if (participants_) std::fclose(participants_);
}

std::unique_ptr<SessionStore> SessionStore::create(const fs::path& root, const nlohmann::json& manifest,
                                                   Options options) {
  if (fs::exists(root / "manifest.json")) {
    throw Error(Errc::OutputExists, "store already initialized: " + root.string());
  }
  fs::create_directories(root / "rooms");
  write_fresh(root / "manifest.json", manifest.dump(2) + "\n");
  return std::unique_ptr<SessionStore>(new SessionStore(root, manifest, options));
}

std::unique_ptr<SessionStore> SessionStore::open(const fs::path& root) {
  const auto path = root / "manifest.json";
  if (!fs::exists(path)) throw Error(Errc::Io, "no store at " + root.string() + " (manifest.json missing)");
  auto manifest = nlohmann::json::parse(read_file(path), nullptr, false);
  if (manifest.is_discarded()) throw Error(Errc::ParseError, "corrupt manifest: " + path.string());
  return std::unique_ptr<SessionStore>(new SessionStore(root, std::move(manifest), Options{}));
}

fs::path SessionStore::room_path(GroupId group) const {
  return root_ / "rooms" / ("room_" + std::to_string(group) + ".jsonl");
}

void SessionStore::append_line(std::FILE* f, const std::string& line, const fs::path& path) {
  if (std::fwrite(line.data(), 1, line.size(), f) != line.size() || std::fputc('\n', f) == EOF ||
      std::fflush(f) != 0) {
    throw Error(Errc::Io, "append failed: " + path.string());
  }
  if (options_.fsync && ::fsync(fileno(f)) != 0) throw Error(Errc::Io, "fsync failed: " + path.string());
}

void SessionStore::append_event(GroupId group, const chat::RoomEvent& event) {
  std::lock_guard lock(mutex_);
  auto it = room_files_.find(group);
  if (it == room_files_.end()) it = room_files_.emplace(group, open_append(room_path(group))).first;
  append_line(it->second, chat::to_json_line(event), room_path(group));
}

chat::EventSink SessionStore::room_sink(GroupId group) {
  return [this, group](const chat::RoomEvent& e) { append_event(group, e); };
}

void SessionStore::close_room(GroupId group) {
  std::lock_guard lock(mutex_);
  auto it = room_files_.find(group);
  if (it == room_files_.end()) return;
  std::fclose(it->second);
  room_files_.erase(it);
}

void SessionStore::append_participant_event(const nlohmann::json& event) {
  std::lock_guard lock(mutex_);
  if (!participants_) participants_ = open_append(participants_path());
  append_line(participants_, event.dump(), participants_path());
}

void SessionStore::flush() {
  std::lock_guard lock(mutex_);
  for (auto& [id, f] : room_files_) std::fflush(f);
  if (participants_) std::fflush(participants_);
}

std::vector<GroupId> SessionStore::room_ids() const {
  std::vector<GroupId> ids;
  const auto dir = root_ / "rooms";
  if (!fs::exists(dir)) return ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("room_", 0) != 0 || e.path().extension() != ".jsonl") continue;
    ids.push_back(std::stoull(name.substr(5, name.size() - 5 - 6)));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<chat::RoomEvent> SessionStore::load_room_log(GroupId group) const {
  std::vector<chat::RoomEvent> events;
  for (const auto& line : read_lines(room_path(group))) events.push_back(chat::parse_event_line(line));
  return events;
}

std::map<GroupId, std::vector<chat::RoomEvent>> SessionStore::load_room_logs() const {
  std::map<GroupId, std::vector<chat::RoomEvent>> out;
  for (auto id : room_ids()) out.emplace(id, load_room_log(id));
  return out;
}

orchestrator::ParticipantRegistry fold_participant_events(const std::vector<nlohmann::json>& events) {
  orchestrator::ParticipantRegistry reg;
  try {
    for (const auto& e : events) {
      const auto kind = e.at("event").get<std::string>();
      auto& rec = reg.add(e.at("participant").get<std::string>());
      if (kind == "assigned") {
        rec.group_id = e.at("group").get<GroupId>();
      } else if (kind == "survey") {
        const auto phase = orchestrator::parse_survey_phase(e.at("phase").get<std::string>());
        const bool passed = e.at("attention").get<bool>();
        if (phase == orchestrator::SurveyPhase::Pre) {
          rec.pre = parse_pre_survey(e.at("answers"));
          rec.attention_pre = passed;
        } else {
          rec.post = parse_post_survey(e.at("answers"));
          rec.attention_post = passed;
        }
      } else if (kind == "technical_failure") {
        rec.technical_failure = true;
      } else if (kind != "enqueued" && kind != "dismissed") {
        throw Error(Errc::ParseError, "unknown participant event: " + kind);
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::ParseError, std::string("participant event: ") + ex.what());
  }
  return reg;
}

orchestrator::ParticipantRegistry SessionStore::load_participants() const {
  std::vector<nlohmann::json> events;
  if (fs::exists(participants_path())) {
    for (const auto& line : read_lines(participants_path())) {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) throw Error(Errc::ParseError, "corrupt line in " + participants_path().string());
      events.push_back(std::move(j));
    }
  }
  return fold_participant_events(events);
}

}  // namespace argbot::store
