#include <chrono>
#include <ctime>

#include "common/error.hpp"
#include "json.hpp"
#include "store/store.hpp"

namespace pb::store {

using nlohmann::json;

Millis now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string format_timestamp(Millis ts) {
  std::time_t seconds = static_cast<std::time_t>(ts / 1000);
  long millis = static_cast<long>(ts % 1000);
  if (millis < 0) {
    millis += 1000;
    --seconds;
  }
  std::tm tm{};
  gmtime_r(&seconds, &tm);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03ldZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min,
                tm.tm_sec, millis);
  return buf;
}

void validate_course(const Course& course) {
  if (course.id.empty()) throw Error(Errc::invariant_violation, "course id is empty");
  if (course.locales.empty()) {
    throw Error(Errc::invariant_violation, "course '" + course.id + "' has no locales");
  }
  std::set<std::string> seen;
  for (const std::string& t : course.tutorials) {
    if (!seen.insert(t).second) {
      throw Error(Errc::invariant_violation,
                  "tutorial '" + t + "' listed twice in course '" + course.id + "'");
    }
  }
}

bool ExportFilter::accepts(const SubmissionDiff& diff) const {
  if (course_id && diff.course_id != *course_id) return false;
  if (tutorial_id && diff.tutorial_id != *tutorial_id) return false;
  if (from && diff.ts < *from) return false;
  if (to && diff.ts >= *to) return false;
  return true;
}

namespace {

json ops_json(const EditScript& ops) {
  json arr = json::array();
  for (const EditOp& op : ops) {
    switch (op.kind) {
      case OpKind::retain: arr.push_back({{"retain", op.count}}); break;
      case OpKind::insert: arr.push_back({{"insert", op.text}}); break;
      case OpKind::remove: arr.push_back({{"delete", op.count}}); break;
    }
  }
  return arr;
}

[[noreturn]] void bad_json(const std::string& what) {
  throw Error(Errc::format_error, "malformed stored record: " + what);
}

json parse(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) bad_json("not JSON");
  return j;
}

}  // namespace

std::string ops_to_json(const EditScript& ops) { return ops_json(ops).dump(); }

EditScript ops_from_json(std::string_view json_text) {
  json arr = parse(json_text);
  if (!arr.is_array()) bad_json("ops must be an array");
  EditScript ops;
  for (const json& op : arr) {
    if (!op.is_object() || op.size() != 1) bad_json("op must have exactly one key");
    if (auto r = op.find("retain"); r != op.end() && r->is_number_unsigned()) {
      ops.push_back(EditOp::retain(r->get<std::size_t>()));
    } else if (auto d = op.find("delete"); d != op.end() && d->is_number_unsigned()) {
      ops.push_back(EditOp::remove(d->get<std::size_t>()));
    } else if (auto i = op.find("insert"); i != op.end() && i->is_string()) {
      ops.push_back(EditOp::insert(i->get<std::string>()));
    } else {
      bad_json("unknown op");
    }
  }
  return ops;
}

std::string course_to_json(const Course& c) {
  return json{{"id", c.id},
              {"title", c.title},
              {"locales", c.locales},
              {"profile", c.profile},
              {"tutorials", c.tutorials},
              {"roster", c.roster},
              {"owner", c.owner}}
      .dump();
}

Course course_from_json(std::string_view json_text) {
  json j = parse(json_text);
  try {
    Course c;
    c.id = j.at("id").get<std::string>();
    c.title = j.at("title").get<std::map<std::string, std::string>>();
    c.locales = j.at("locales").get<std::set<std::string>>();
    c.profile = j.at("profile").get<std::string>();
    c.tutorials = j.at("tutorials").get<std::vector<std::string>>();
    c.roster = j.at("roster").get<std::set<std::string>>();
    c.owner = j.value("owner", "");
    return c;
  } catch (const json::exception& e) {
    bad_json(e.what());
  }
}

std::string state_to_json(const tutorial::TutorialState& s) {
  json outcomes = json::object();
  for (const auto& [block, outcome] : s.outcomes) {
    outcomes[block] = std::string(tutorial::to_string(outcome));
  }
  return json{{"user_id", s.user_id},
              {"tutorial_id", s.tutorial_id},
              {"contents", s.contents},
              {"outcomes", outcomes}}
      .dump();
}

tutorial::TutorialState state_from_json(std::string_view json_text) {
  json j = parse(json_text);
  try {
    tutorial::TutorialState s;
    s.user_id = j.at("user_id").get<std::string>();
    s.tutorial_id = j.at("tutorial_id").get<std::string>();
    s.contents = j.at("contents").get<std::map<std::string, std::string>>();
    for (const auto& [block, outcome] : j.at("outcomes").items()) {
      s.outcomes[block] = tutorial::outcome_from_string(outcome.get<std::string>());
    }
    return s;
  } catch (const json::exception& e) {
    bad_json(e.what());
  }
}

std::string export_record(const SubmissionDiff& d) {
  // fixed key order; see docs/export-format.md
  std::string out = "{";
  out += "\"user_id\":" + json(d.user_id).dump();
  out += ",\"course_id\":" + json(d.course_id).dump();
  out += ",\"tutorial_id\":" + json(d.tutorial_id).dump();
  out += ",\"block_id\":" + json(d.block_id).dump();
  out += ",\"seq\":" + std::to_string(d.seq);
  out += ",\"ts\":" + json(format_timestamp(d.ts)).dump();
  out += ",\"ops\":" + ops_json(d.ops).dump();
  out += "}";
  return out;
}

void MemoryStore::put_profile(const UserProfile& profile) {
  std::lock_guard lock(mutex_);
  profiles_[profile.user_id] = profile;
}

std::optional<UserProfile> MemoryStore::profile(std::string_view user_id) const {
  std::lock_guard lock(mutex_);
  auto it = profiles_.find(user_id);
  if (it == profiles_.end()) return std::nullopt;
  return it->second;
}

std::optional<UserProfile> MemoryStore::find_profile(std::string_view issuer,
                                                     std::string_view username) const {
  std::lock_guard lock(mutex_);
  for (const auto& [id, p] : profiles_) {
    if (p.issuer == issuer && p.username == username) return p;
  }
  return std::nullopt;
}

std::vector<UserProfile> MemoryStore::profiles() const {
  std::lock_guard lock(mutex_);
  std::vector<UserProfile> out;
  for (const auto& [id, p] : profiles_) out.push_back(p);
  return out;
}

bool MemoryStore::remove_profile(std::string_view user_id) {
  std::lock_guard lock(mutex_);
  auto it = profiles_.find(user_id);
  if (it == profiles_.end()) return false;
  profiles_.erase(it);
  return true;
}

void MemoryStore::append_diff(const SubmissionDiff& diff) {
  std::lock_guard lock(mutex_);
  auto& indices = streams_[diff.key()];
  if (diff.seq != indices.size() + 1) {
    throw Error(Errc::invariant_violation,
                "sequence " + std::to_string(diff.seq) + " does not follow " +
                    std::to_string(indices.size()));
  }
  indices.push_back(diffs_.size());
  diffs_.push_back(diff);
}

std::vector<SubmissionDiff> MemoryStore::stream(const StreamKey& key) const {
  std::lock_guard lock(mutex_);
  std::vector<SubmissionDiff> out;
  auto it = streams_.find(key);
  if (it == streams_.end()) return out;
  for (std::size_t i : it->second) out.push_back(diffs_[i]);
  return out;
}

std::vector<SubmissionDiff> MemoryStore::diffs(const ExportFilter& filter) const {
  std::lock_guard lock(mutex_);
  std::vector<SubmissionDiff> out;
  for (const SubmissionDiff& d : diffs_) {
    if (filter.accepts(d)) out.push_back(d);
  }
  return out;
}

void MemoryStore::put_state(const tutorial::TutorialState& state) {
  std::lock_guard lock(mutex_);
  states_[{state.user_id, state.tutorial_id}] = state;
}

std::optional<tutorial::TutorialState> MemoryStore::state(
    std::string_view user_id, std::string_view tutorial_id) const {
  std::lock_guard lock(mutex_);
  auto it = states_.find({std::string(user_id), std::string(tutorial_id)});
  if (it == states_.end()) return std::nullopt;
  return it->second;
}

void MemoryStore::put_course(const Course& course) {
  validate_course(course);
  std::lock_guard lock(mutex_);
  courses_[course.id] = course;
}

std::optional<Course> MemoryStore::course(std::string_view id) const {
  std::lock_guard lock(mutex_);
  auto it = courses_.find(id);
  if (it == courses_.end()) return std::nullopt;
  return it->second;
}

std::vector<Course> MemoryStore::courses() const {
  std::lock_guard lock(mutex_);
  std::vector<Course> out;
  for (const auto& [id, c] : courses_) out.push_back(c);
  return out;
}

void MemoryStore::put_tutorial_source(std::string_view id, std::string_view source) {
  std::lock_guard lock(mutex_);
  tutorials_[std::string(id)] = std::string(source);
}

std::optional<std::string> MemoryStore::tutorial_source(std::string_view id) const {
  std::lock_guard lock(mutex_);
  auto it = tutorials_.find(id);
  if (it == tutorials_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> MemoryStore::tutorial_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, src] : tutorials_) out.push_back(id);
  return out;
}

}  // namespace pb::store
