#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "argbot/chat.hpp"
#include "argbot/domain.hpp"
#include "argbot/orchestrator.hpp"

namespace argbot::store {

namespace fs = std::filesystem;

// Layout under the root:
//   manifest.json            config, config hash, seed, catalog hash
//   rooms/room_<id>.jsonl    one RoomEvent per line
//   participants.jsonl       participant events (enqueued, assigned, survey, ...)
class SessionStore {
 public:
  struct Options {
    bool fsync = false;  // fsync after every appended line
  };

  // Creates the directory tree and writes the manifest. Fails with
  // OutputExists if the root already holds a manifest.
  static std::unique_ptr<SessionStore> create(const fs::path& root, const nlohmann::json& manifest, Options options);
  static std::unique_ptr<SessionStore> create(const fs::path& root, const nlohmann::json& manifest) {
    return create(root, manifest, Options{});
  }
  // Existing store; throws Io if there is no manifest.
  static std::unique_ptr<SessionStore> open(const fs::path& root);

  ~SessionStore();
  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  const fs::path& root() const { return root_; }
  const nlohmann::json& manifest() const { return manifest_; }

  fs::path room_path(GroupId group) const;
  fs::path participants_path() const { return root_ / "participants.jsonl"; }

  // Throws Io on write failure.
  void append_event(GroupId group, const chat::RoomEvent& event);
  chat::EventSink room_sink(GroupId group);
  void close_room(GroupId group);
  void append_participant_event(const nlohmann::json& event);
  void flush();

  std::vector<GroupId> room_ids() const;
  std::vector<chat::RoomEvent> load_room_log(GroupId group) const;
  std::map<GroupId, std::vector<chat::RoomEvent>> load_room_logs() const;
  orchestrator::ParticipantRegistry load_participants() const;

 private:
  SessionStore(fs::path root, nlohmann::json manifest, Options options);
  void append_line(std::FILE* f, const std::string& line, const fs::path& path);

  fs::path root_;
  nlohmann::json manifest_;
  Options options_;
  mutable std::mutex mutex_;
  std::map<GroupId, std::FILE*> room_files_;
  std::FILE* participants_ = nullptr;
};

// Folds participant event lines into records.
orchestrator::ParticipantRegistry fold_participant_events(const std::vector<nlohmann::json>& events);

std::vector<std::string> read_lines(const fs::path& path);
std::string read_file(const fs::path& path);

// Writes `content` to `path` via a temporary file. An existing file with the
// same bytes is left alone; different bytes fail with OutputExists unless
// `force` is set.
void write_output(const fs::path& path, std::string_view content, bool force);

// Moves a freshly written directory into place under the same rule, comparing
// whole trees.
void publish_directory(const fs::path& staged, const fs::path& target, bool force);
bool same_tree(const fs::path& a, const fs::path& b);

}  // namespace argbot::store
