#include "store/history.hpp"

#include "common/error.hpp"
#include "common/utf8.hpp"

namespace pb::store {

History::History(std::shared_ptr<Store> store, HistoryOptions options)
    : store_(std::move(store)), options_(options) {
  if (!store_) throw Error(Errc::invalid_argument, "history needs a store");
}

std::shared_ptr<std::mutex> History::stream_lock(const StreamKey& key) {
  std::lock_guard lock(locks_mutex_);
  auto& slot = locks_[key];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

std::optional<SubmissionDiff> History::record_submission(
    const std::string& user_id, const std::string& course_id,
    const tutorial::Tutorial& tutorial, const std::string& block_id,
    std::string_view content, Millis at) {
  if (!store_->profile(user_id)) {
    throw Error(Errc::unknown_user, "unknown user '" + user_id + "'");
  }
  const tutorial::Block* block = tutorial.find_block(block_id);
  if (block == nullptr || block->kind != tutorial::BlockKind::task) {
    throw Error(Errc::not_found, "'" + block_id + "' is not a task block of tutorial '" +
                                     tutorial.id + "'");
  }
  if (!utf8::is_valid(content)) {
    throw Error(Errc::invalid_argument, "submitted content is not valid UTF-8");
  }
  StreamKey key{user_id, tutorial.id, block_id};
  auto lock_ptr = stream_lock(key);
  std::lock_guard lock(*lock_ptr);

  std::vector<SubmissionDiff> previous = store_->stream(key);
  std::string before;
  for (const SubmissionDiff& d : previous) before = apply_script(before, d.ops);
  if (before == content && !options_.record_noop) return std::nullopt;
  SubmissionDiff diff;
  diff.user_id = user_id;
  diff.course_id = course_id;
  diff.tutorial_id = tutorial.id;
  diff.block_id = block_id;
  diff.seq = previous.size() + 1;
  diff.ts = at;
  diff.ops = edit_script(before, content);
  store_->append_diff(diff);
  return diff;
}

std::string History::reconstruct(const StreamKey& key,
                                 std::optional<std::uint64_t> upto) const {
  if (upto && *upto == 0) return {};
  std::vector<SubmissionDiff> diffs = store_->stream(key);
  if (diffs.empty()) {
    throw Error(Errc::not_found, "no submissions for block '" + key.block_id + "'");
  }
  std::uint64_t last = upto.value_or(diffs.size());
  if (last > diffs.size()) {
    throw Error(Errc::out_of_range, "sequence " + std::to_string(last) +
                                        " is past the latest (" +
                                        std::to_string(diffs.size()) + ")");
  }
  std::string text;
  for (std::uint64_t i = 0; i < last; ++i) text = apply_script(text, diffs[i].ops);
  return text;
}

void History::delete_user(const std::string& user_id) {
  if (!store_->remove_profile(user_id)) {
    throw Error(Errc::unknown_user, "unknown user '" + user_id + "'");
  }
}

std::vector<SubmissionDiff> History::export_history(const ExportFilter& filter) const {
  return store_->diffs(filter);
}

std::string History::export_ndjson(const ExportFilter& filter) const {
  std::string out;
  for (const SubmissionDiff& d : export_history(filter)) {
    out += export_record(d);
    out += '\n';
  }
  return out;
}

}  // namespace pb::store
