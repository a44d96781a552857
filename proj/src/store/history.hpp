#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "store/store.hpp"
#include "tutorial/tutorial.hpp"

namespace pb::store {

struct HistoryOptions {
  // Record an empty diff when the content did not change.
  bool record_noop = false;
};

// Submission history on top of a Store. Writes to one stream are
// serialized; different streams proceed in parallel.
class History {
 public:
  explicit History(std::shared_ptr<Store> store, HistoryOptions options = {});

  // Diff against the reconstructed previous content. Returns nullopt when
  // identical content is skipped. Throws pb::Error(unknown_user) without a
  // profile, (not_found) unless `block_id` is a task block of the tutorial,
  // (invalid_argument) for content that is not valid UTF-8.
  std::optional<SubmissionDiff> record_submission(const std::string& user_id,
                                                  const std::string& course_id,
                                                  const tutorial::Tutorial& tutorial,
                                                  const std::string& block_id,
                                                  std::string_view content, Millis at);

  // Text after scripts 1..upto (default: all). upto = 0 is always "".
  // Throws pb::Error(not_found) for an unknown stream and (out_of_range)
  // past the latest sequence number.
  std::string reconstruct(const StreamKey& key,
                          std::optional<std::uint64_t> upto = std::nullopt) const;

  // Removes the profile; diffs stay grouped under the opaque id. Throws
  // pb::Error(unknown_user).
  void delete_user(const std::string& user_id);

  std::vector<SubmissionDiff> export_history(const ExportFilter& filter) const;
  // Newline-delimited JSON, one record per line.
  std::string export_ndjson(const ExportFilter& filter) const;

  Store& store() { return *store_; }
  const Store& store() const { return *store_; }

 private:
  std::shared_ptr<std::mutex> stream_lock(const StreamKey& key);

  std::shared_ptr<Store> store_;
  HistoryOptions options_;
  std::mutex locks_mutex_;
  std::map<StreamKey, std::shared_ptr<std::mutex>> locks_;
};

}  // namespace pb::store
