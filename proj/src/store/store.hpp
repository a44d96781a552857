#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "store/diff.hpp"
#include "tutorial/tutorial.hpp"

namespace pb::store {

using Millis = std::int64_t;  // milliseconds since the Unix epoch, UTC

Millis now_ms();
// "2026-10-19T08:15:30.123Z"
std::string format_timestamp(Millis ts);

// Everything kept about a person.
struct UserProfile {
  std::string user_id;
  std::string username;
  std::string issuer;
  bool admin = false;
  Millis created_at = 0;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

// One stream per (user, tutorial, block); the course is recorded alongside.
struct StreamKey {
  std::string user_id;
  std::string tutorial_id;
  std::string block_id;

  auto operator<=>(const StreamKey&) const = default;
};

struct SubmissionDiff {
  std::string user_id;
  std::string course_id;
  std::string tutorial_id;
  std::string block_id;
  std::uint64_t seq = 0;  // dense per stream, from 1
  Millis ts = 0;
  EditScript ops;

  StreamKey key() const { return {user_id, tutorial_id, block_id}; }
  friend bool operator==(const SubmissionDiff&, const SubmissionDiff&) = default;
};

struct Course {
  std::string id;
  std::map<std::string, std::string> title;  // by locale
  std::set<std::string> locales{"en", "de"};
  std::string profile;  // empty: each tutorial uses its own profile
  std::vector<std::string> tutorials;
  std::set<std::string> roster;  // user ids
  std::string owner;             // user id of the creating teacher

  friend bool operator==(const Course&, const Course&) = default;
};

// Course invariants: non-empty id and locale set, unique tutorial ids.
// Throws pb::Error(invariant_violation).
void validate_course(const Course& course);

// Time range is [from, to).
struct ExportFilter {
  std::optional<std::string> course_id;
  std::optional<std::string> tutorial_id;
  std::optional<Millis> from;
  std::optional<Millis> to;

  bool accepts(const SubmissionDiff& diff) const;
};

// Storage backend. Implementations are internally synchronized.
class Store {
 public:
  virtual ~Store() = default;

  virtual void put_profile(const UserProfile& profile) = 0;
  virtual std::optional<UserProfile> profile(std::string_view user_id) const = 0;
  virtual std::optional<UserProfile> find_profile(std::string_view issuer,
                                                  std::string_view username) const = 0;
  virtual std::vector<UserProfile> profiles() const = 0;
  // Returns false when no such profile exists.
  virtual bool remove_profile(std::string_view user_id) = 0;

  // Throws pb::Error(invariant_violation) unless diff.seq is the stream's
  // next sequence number.
  virtual void append_diff(const SubmissionDiff& diff) = 0;
  virtual std::vector<SubmissionDiff> stream(const StreamKey& key) const = 0;
  // Insertion order.
  virtual std::vector<SubmissionDiff> diffs(const ExportFilter& filter) const = 0;

  virtual void put_state(const tutorial::TutorialState& state) = 0;
  virtual std::optional<tutorial::TutorialState> state(std::string_view user_id,
                                                       std::string_view tutorial_id) const = 0;

  virtual void put_course(const Course& course) = 0;
  virtual std::optional<Course> course(std::string_view id) const = 0;
  virtual std::vector<Course> courses() const = 0;

  virtual void put_tutorial_source(std::string_view id, std::string_view source) = 0;
  virtual std::optional<std::string> tutorial_source(std::string_view id) const = 0;
  virtual std::vector<std::string> tutorial_ids() const = 0;
};

class MemoryStore : public Store {
 public:
  void put_profile(const UserProfile& profile) override;
  std::optional<UserProfile> profile(std::string_view user_id) const override;
  std::optional<UserProfile> find_profile(std::string_view issuer,
                                          std::string_view username) const override;
  std::vector<UserProfile> profiles() const override;
  bool remove_profile(std::string_view user_id) override;

  void append_diff(const SubmissionDiff& diff) override;
  std::vector<SubmissionDiff> stream(const StreamKey& key) const override;
  std::vector<SubmissionDiff> diffs(const ExportFilter& filter) const override;

  void put_state(const tutorial::TutorialState& state) override;
  std::optional<tutorial::TutorialState> state(std::string_view user_id,
                                               std::string_view tutorial_id) const override;

  void put_course(const Course& course) override;
  std::optional<Course> course(std::string_view id) const override;
  std::vector<Course> courses() const override;

  void put_tutorial_source(std::string_view id, std::string_view source) override;
  std::optional<std::string> tutorial_source(std::string_view id) const override;
  std::vector<std::string> tutorial_ids() const override;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, UserProfile, std::less<>> profiles_;
  std::vector<SubmissionDiff> diffs_;
  std::map<StreamKey, std::vector<std::size_t>> streams_;  // indices into diffs_
  std::map<std::pair<std::string, std::string>, tutorial::TutorialState> states_;
  std::map<std::string, Course, std::less<>> courses_;
  std::map<std::string, std::string, std::less<>> tutorials_;
};

// SQLite database file; created with its schema when missing.
class SqliteStore : public Store {
 public:
  // Throws pb::Error(storage_failure).
  explicit SqliteStore(const std::string& path);
  ~SqliteStore() override;
  SqliteStore(const SqliteStore&) = delete;
  SqliteStore& operator=(const SqliteStore&) = delete;

  void put_profile(const UserProfile& profile) override;
  std::optional<UserProfile> profile(std::string_view user_id) const override;
  std::optional<UserProfile> find_profile(std::string_view issuer,
                                          std::string_view username) const override;
  std::vector<UserProfile> profiles() const override;
  bool remove_profile(std::string_view user_id) override;

  void append_diff(const SubmissionDiff& diff) override;
  std::vector<SubmissionDiff> stream(const StreamKey& key) const override;
  std::vector<SubmissionDiff> diffs(const ExportFilter& filter) const override;

  void put_state(const tutorial::TutorialState& state) override;
  std::optional<tutorial::TutorialState> state(std::string_view user_id,
                                               std::string_view tutorial_id) const override;

  void put_course(const Course& course) override;
  std::optional<Course> course(std::string_view id) const override;
  std::vector<Course> courses() const override;

  void put_tutorial_source(std::string_view id, std::string_view source) override;
  std::optional<std::string> tutorial_source(std::string_view id) const override;
  std::vector<std::string> tutorial_ids() const override;

 private:
  struct Db;
  std::unique_ptr<Db> db_;
};

// JSON forms shared by the persistent store, the export and the API.
std::string ops_to_json(const EditScript& ops);
EditScript ops_from_json(std::string_view json_text);
std::string course_to_json(const Course& course);
Course course_from_json(std::string_view json_text);
std::string state_to_json(const tutorial::TutorialState& state);
tutorial::TutorialState state_from_json(std::string_view json_text);

// One export line (without the trailing newline).
std::string export_record(const SubmissionDiff& diff);

}  // namespace pb::store
