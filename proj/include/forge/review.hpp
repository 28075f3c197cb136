#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/manifest.hpp"
#include "forge/model.hpp"

namespace forge::review {

enum class TaskKind { CorruptionFix, BboxAdjust, TranslationScore };
enum class TaskStatus { Open, Fixed, Discarded };
enum class LabelScale { FourPoint, TenPoint };

std::string_view to_string(TaskKind k);
std::string_view to_string(TaskStatus s);
std::string_view to_string(LabelScale s);
std::optional<TaskKind> task_kind_from_string(std::string_view s);
std::optional<TaskStatus> task_status_from_string(std::string_view s);
std::optional<LabelScale> label_scale_from_string(std::string_view s);

struct HumanQualityLabel {
  LabelScale scale = LabelScale::FourPoint;
  int value = 0;
  std::string reviewer_id;
  std::optional<int> second_review;
};

struct TaskFix {
  std::optional<std::string> text;
  std::optional<BoundingBox> bbox;
  bool discard = false;  // the sample cannot be salvaged
};

struct ReviewTask {
  std::string task_id;
  TaskKind kind = TaskKind::CorruptionFix;
  std::string problem_id;
  std::string language;  // empty when the task is not tied to one translation
  Json payload;          // image ref/size, current text, bbox or translation pair
  TaskStatus status = TaskStatus::Open;
  int version = 0;       // bumped on every accepted change
  std::optional<TaskFix> fix;
  std::vector<HumanQualityLabel> labels;
};

Json to_json(const ReviewTask& t);

// A fixed sample that the corruption loop has to judge again.
struct RecheckItem {
  std::string task_id;
  std::string problem_id;
  TaskFix fix;
};

/// Task store whose only state changes are enqueue / fix / score / recheck
/// handoff. Each change is appended to an event log before it becomes visible,
/// and replaying the log rebuilds the store. Thread-safe.
///
/// fix and score take the version the caller last saw; a stale version or a
/// task that is no longer Open gives TaskNotOpen.
class ReviewStore {
 public:
  ReviewStore();  // in memory only
  explicit ReviewStore(const std::filesystem::path& dir);  // replays dir/events.jsonl if present

  ReviewTask enqueue(TaskKind kind, std::string problem_id, Json payload, std::string language = {});

  struct QueueFilter {
    std::optional<TaskKind> kind;
    std::optional<TaskStatus> status;
    std::size_t offset = 0;
    std::size_t limit = 100;
  };
  struct Page {
    std::vector<ReviewTask> tasks;
    std::size_t total = 0;  // matches before paging
  };
  Page queue(const QueueFilter& filter) const;
  ReviewTask get(std::string_view task_id) const;  // TaskNotFound

  /// CorruptionFix / BboxAdjust only. Bboxes must lie inside the image size
  /// recorded in the payload (image_width/image_height) when it is known.
  /// A discard fix ends the task Discarded; anything else ends it Fixed and
  /// queues the sample for a recheck.
  ReviewTask fix(std::string_view task_id, const TaskFix& fix, std::optional<int> expected_version = std::nullopt);

  /// TranslationScore only. FourPoint 3-4 keeps the sample (Fixed). FourPoint
  /// 1-2 needs a second review: without one the task stays Open, and the next
  /// score on it is taken as that second review. The final FourPoint value
  /// decides: 1-2 Discarded, 3-4 Fixed. TenPoint: < 5 Discarded, else Fixed.
  ReviewTask score(std::string_view task_id, const HumanQualityLabel& label,
                   std::optional<int> expected_version = std::nullopt);

  /// Hands over fixed samples of this kind that were not rechecked yet.
  std::vector<RecheckItem> take_recheck(TaskKind kind = TaskKind::CorruptionFix);

  /// Fix of the most recent Fixed task of this kind for the problem/language.
  std::optional<TaskFix> latest_fix(TaskKind kind, std::string_view problem_id, std::string_view language = {}) const;

  /// Problem ids whose review ended Discarded, for this language or for any
  /// language-independent task.
  std::set<std::string> discarded(std::string_view language) const;

  /// Open tasks of this kind for the problem (used to avoid duplicate enqueues).
  bool has_open(TaskKind kind, std::string_view problem_id, std::string_view language = {}) const;

  std::vector<ReviewTask> all() const;
  std::vector<Json> events() const;

  /// Rebuilds a store from an event list; throws MalformedRecord on bad events.
  static std::unique_ptr<ReviewStore> replay(const std::vector<Json>& events);

 private:
  void apply(const Json& event);  // caller holds mu_
  void commit(Json event);        // log, then apply
  ReviewTask& find(std::string_view id);
  const ReviewTask& find(std::string_view id) const;

  mutable std::mutex mu_;
  std::vector<ReviewTask> tasks_;  // enqueue order
  std::vector<Json> events_;
  std::vector<std::string> recheck_;  // task ids, FIFO
  std::uint64_t next_id_ = 1;
  std::optional<std::filesystem::path> log_path_;
  std::ofstream log_;
};

}  // namespace forge::review
