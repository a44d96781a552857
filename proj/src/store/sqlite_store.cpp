#include <sqlite3.h>

#include <mutex>

#include "common/error.hpp"
#include "store/store.hpp"

namespace pb::store {
namespace {

constexpr const char* kSchema = R"sql(
PRAGMA journal_mode = WAL;
PRAGMA foreign_keys = OFF;
CREATE TABLE IF NOT EXISTS profiles (
  user_id TEXT PRIMARY KEY,
  username TEXT NOT NULL,
  issuer TEXT NOT NULL,
  admin INTEGER NOT NULL,
  created_at INTEGER NOT NULL
);
CREATE UNIQUE INDEX IF NOT EXISTS profiles_identity ON profiles(issuer, username);
CREATE TABLE IF NOT EXISTS diffs (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  user_id TEXT NOT NULL,
  course_id TEXT NOT NULL,
  tutorial_id TEXT NOT NULL,
  block_id TEXT NOT NULL,
  seq INTEGER NOT NULL,
  ts INTEGER NOT NULL,
  ops TEXT NOT NULL,
  UNIQUE (user_id, tutorial_id, block_id, seq)
);
CREATE TABLE IF NOT EXISTS states (
  user_id TEXT NOT NULL,
  tutorial_id TEXT NOT NULL,
  data TEXT NOT NULL,
  PRIMARY KEY (user_id, tutorial_id)
);
CREATE TABLE IF NOT EXISTS courses (id TEXT PRIMARY KEY, data TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS tutorials (id TEXT PRIMARY KEY, source TEXT NOT NULL);
)sql";

[[noreturn]] void fail(sqlite3* db, const std::string& what) {
  throw Error(Errc::storage_failure,
              what + ": " + (db != nullptr ? sqlite3_errmsg(db) : "out of memory"));
}

// Prepared statement with positional binding; finalized on scope exit.
class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      fail(db, "prepare");
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(std::string_view text) {
    check(sqlite3_bind_text(stmt_, ++index_, text.data(), static_cast<int>(text.size()),
                            SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(std::int64_t value) {
    check(sqlite3_bind_int64(stmt_, ++index_, value));
    return *this;
  }

  // True while rows remain.
  bool step() {
    int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(db_, "step");
  }
  void run() {
    while (step()) {
    }
  }

  std::string text(int column) const {
    const unsigned char* p = sqlite3_column_text(stmt_, column);
    int n = sqlite3_column_bytes(stmt_, column);
    return p == nullptr ? std::string() : std::string(reinterpret_cast<const char*>(p),
                                                      static_cast<std::size_t>(n));
  }
  std::int64_t integer(int column) const { return sqlite3_column_int64(stmt_, column); }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) fail(db_, "bind");
  }
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
  int index_ = 0;
};

UserProfile read_profile(const Statement& s) {
  return UserProfile{s.text(0), s.text(1), s.text(2), s.integer(3) != 0, s.integer(4)};
}

SubmissionDiff read_diff(const Statement& s) {
  SubmissionDiff d;
  d.user_id = s.text(0);
  d.course_id = s.text(1);
  d.tutorial_id = s.text(2);
  d.block_id = s.text(3);
  d.seq = static_cast<std::uint64_t>(s.integer(4));
  d.ts = s.integer(5);
  d.ops = ops_from_json(s.text(6));
  return d;
}

constexpr const char* kProfileColumns =
    "SELECT user_id, username, issuer, admin, created_at FROM profiles";
constexpr const char* kDiffColumns =
    "SELECT user_id, course_id, tutorial_id, block_id, seq, ts, ops FROM diffs";

}  // namespace

struct SqliteStore::Db {
  sqlite3* handle = nullptr;
  std::mutex mutex;
};

SqliteStore::SqliteStore(const std::string& path) : db_(std::make_unique<Db>()) {
  if (sqlite3_open_v2(path.c_str(), &db_->handle,
                      SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_->handle ? sqlite3_errmsg(db_->handle) : "out of memory";
    sqlite3_close(db_->handle);
    throw Error(Errc::storage_failure, "cannot open database " + path + ": " + msg);
  }
  sqlite3_busy_timeout(db_->handle, 5000);
  char* err = nullptr;
  if (sqlite3_exec(db_->handle, kSchema, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    sqlite3_close(db_->handle);
    throw Error(Errc::storage_failure, "cannot create schema: " + msg);
  }
}

SqliteStore::~SqliteStore() {
  if (db_) sqlite3_close(db_->handle);
}

void SqliteStore::put_profile(const UserProfile& p) {
  std::lock_guard lock(db_->mutex);
  Statement(db_->handle,
            "INSERT INTO profiles (user_id, username, issuer, admin, created_at) "
            "VALUES (?, ?, ?, ?, ?) ON CONFLICT(user_id) DO UPDATE SET "
            "username = excluded.username, issuer = excluded.issuer, "
            "admin = excluded.admin")
      .bind(p.user_id)
      .bind(p.username)
      .bind(p.issuer)
      .bind(std::int64_t{p.admin ? 1 : 0})
      .bind(p.created_at)
      .run();
}

std::optional<UserProfile> SqliteStore::profile(std::string_view user_id) const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle, (std::string(kProfileColumns) + " WHERE user_id = ?").c_str());
  s.bind(user_id);
  if (!s.step()) return std::nullopt;
  return read_profile(s);
}

std::optional<UserProfile> SqliteStore::find_profile(std::string_view issuer,
                                                     std::string_view username) const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle,
              (std::string(kProfileColumns) + " WHERE issuer = ? AND username = ?").c_str());
  s.bind(issuer).bind(username);
  if (!s.step()) return std::nullopt;
  return read_profile(s);
}

std::vector<UserProfile> SqliteStore::profiles() const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle, (std::string(kProfileColumns) + " ORDER BY user_id").c_str());
  std::vector<UserProfile> out;
  while (s.step()) out.push_back(read_profile(s));
  return out;
}

bool SqliteStore::remove_profile(std::string_view user_id) {
  std::lock_guard lock(db_->mutex);
  Statement(db_->handle, "DELETE FROM profiles WHERE user_id = ?").bind(user_id).run();
  return sqlite3_changes(db_->handle) > 0;
}

void SqliteStore::append_diff(const SubmissionDiff& d) {
  std::lock_guard lock(db_->mutex);
  Statement last(db_->handle,
                 "SELECT COALESCE(MAX(seq), 0) FROM diffs WHERE user_id = ? AND "
                 "tutorial_id = ? AND block_id = ?");
  last.bind(d.user_id).bind(d.tutorial_id).bind(d.block_id);
  last.step();
  std::int64_t latest = last.integer(0);
  if (static_cast<std::int64_t>(d.seq) != latest + 1) {
    throw Error(Errc::invariant_violation, "sequence " + std::to_string(d.seq) +
                                               " does not follow " + std::to_string(latest));
  }
  Statement(db_->handle,
            "INSERT INTO diffs (user_id, course_id, tutorial_id, block_id, seq, ts, ops) "
            "VALUES (?, ?, ?, ?, ?, ?, ?)")
      .bind(d.user_id)
      .bind(d.course_id)
      .bind(d.tutorial_id)
      .bind(d.block_id)
      .bind(static_cast<std::int64_t>(d.seq))
      .bind(d.ts)
      .bind(ops_to_json(d.ops))
      .run();
}

std::vector<SubmissionDiff> SqliteStore::stream(const StreamKey& key) const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle,
              (std::string(kDiffColumns) +
               " WHERE user_id = ? AND tutorial_id = ? AND block_id = ? ORDER BY seq")
                  .c_str());
  s.bind(key.user_id).bind(key.tutorial_id).bind(key.block_id);
  std::vector<SubmissionDiff> out;
  while (s.step()) out.push_back(read_diff(s));
  return out;
}

std::vector<SubmissionDiff> SqliteStore::diffs(const ExportFilter& filter) const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle, (std::string(kDiffColumns) + " ORDER BY id").c_str());
  std::vector<SubmissionDiff> out;
  while (s.step()) {
    SubmissionDiff d = read_diff(s);
    if (filter.accepts(d)) out.push_back(std::move(d));
  }
  return out;
}

void SqliteStore::put_state(const tutorial::TutorialState& state) {
  std::lock_guard lock(db_->mutex);
  Statement(db_->handle,
            "INSERT OR REPLACE INTO states (user_id, tutorial_id, data) VALUES (?, ?, ?)")
      .bind(state.user_id)
      .bind(state.tutorial_id)
      .bind(state_to_json(state))
      .run();
}

std::optional<tutorial::TutorialState> SqliteStore::state(
    std::string_view user_id, std::string_view tutorial_id) const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle, "SELECT data FROM states WHERE user_id = ? AND tutorial_id = ?");
  s.bind(user_id).bind(tutorial_id);
  if (!s.step()) return std::nullopt;
  return state_from_json(s.text(0));
}

void SqliteStore::put_course(const Course& course) {
  validate_course(course);
  std::lock_guard lock(db_->mutex);
  Statement(db_->handle, "INSERT OR REPLACE INTO courses (id, data) VALUES (?, ?)")
      .bind(course.id)
      .bind(course_to_json(course))
      .run();
}

std::optional<Course> SqliteStore::course(std::string_view id) const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle, "SELECT data FROM courses WHERE id = ?");
  s.bind(id);
  if (!s.step()) return std::nullopt;
  return course_from_json(s.text(0));
}

std::vector<Course> SqliteStore::courses() const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle, "SELECT data FROM courses ORDER BY id");
  std::vector<Course> out;
  while (s.step()) out.push_back(course_from_json(s.text(0)));
  return out;
}

void SqliteStore::put_tutorial_source(std::string_view id, std::string_view source) {
  std::lock_guard lock(db_->mutex);
  Statement(db_->handle, "INSERT OR REPLACE INTO tutorials (id, source) VALUES (?, ?)")
      .bind(id)
      .bind(source)
      .run();
}

std::optional<std::string> SqliteStore::tutorial_source(std::string_view id) const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle, "SELECT source FROM tutorials WHERE id = ?");
  s.bind(id);
  if (!s.step()) return std::nullopt;
  return s.text(0);
}

std::vector<std::string> SqliteStore::tutorial_ids() const {
  std::lock_guard lock(db_->mutex);
  Statement s(db_->handle, "SELECT id FROM tutorials ORDER BY id");
  std::vector<std::string> out;
  while (s.step()) out.push_back(s.text(0));
  return out;
}

}  // namespace pb::store
