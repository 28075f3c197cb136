#include "forge/review.hpp"

#include <algorithm>
#include <cstdio>

#include "forge/error.hpp"

namespace forge::review {

namespace {

constexpr std::string_view kKinds[] = {"CorruptionFix", "BboxAdjust", "TranslationScore"};
constexpr std::string_view kStatuses[] = {"Open", "Fixed", "Discarded"};
constexpr std::string_view kScales[] = {"FourPoint", "TenPoint"};

template <class E, std::size_t N>
std::optional<E> lookup(const std::string_view (&names)[N], std::string_view s) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  return std::nullopt;
}

Json bbox_json(const BoundingBox& b) { return Json{{"x", b.x}, {"y", b.y}, {"w", b.width}, {"h", b.height}}; }

BoundingBox bbox_from(const Json& j) {
  BoundingBox b;
  b.x = j.at("x").get<int>();
  b.y = j.at("y").get<int>();
  b.width = j.at("w").get<int>();
  b.height = j.at("h").get<int>();
  return b;
}

Json fix_json(const TaskFix& f) {
  Json j = Json::object();
  if (f.text) j["text"] = *f.text;
  if (f.bbox) j["bbox"] = bbox_json(*f.bbox);
  if (f.discard) j["discard"] = true;
  return j;
}

TaskFix fix_from(const Json& j) {
  TaskFix f;
  if (j.contains("text")) f.text = j["text"].get<std::string>();
  if (j.contains("bbox")) f.bbox = bbox_from(j["bbox"]);
  f.discard = j.value("discard", false);
  return f;
}

Json label_json(const HumanQualityLabel& l) {
  Json j{{"scale", to_string(l.scale)}, {"value", l.value}, {"reviewer_id", l.reviewer_id}};
  if (l.second_review) j["second_review"] = *l.second_review;
  return j;
}

std::string format_id(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%06llu", static_cast<unsigned long long>(n));
  return buf;
}

bool low_four_point(int v) { return v <= 2; }

}  // namespace

std::string_view to_string(TaskKind k) { return kKinds[static_cast<int>(k)]; }
std::string_view to_string(TaskStatus s) { return kStatuses[static_cast<int>(s)]; }
std::string_view to_string(LabelScale s) { return kScales[static_cast<int>(s)]; }
std::optional<TaskKind> task_kind_from_string(std::string_view s) { return lookup<TaskKind>(kKinds, s); }
std::optional<TaskStatus> task_status_from_string(std::string_view s) { return lookup<TaskStatus>(kStatuses, s); }
std::optional<LabelScale> label_scale_from_string(std::string_view s) { return lookup<LabelScale>(kScales, s); }

Json to_json(const ReviewTask& t) {
  Json j{{"task_id", t.task_id},
         {"kind", to_string(t.kind)},
         {"problem_id", t.problem_id},
         {"language", t.language},
         {"payload", t.payload},
         {"status", to_string(t.status)},
         {"version", t.version}};
  if (t.fix) j["fix"] = fix_json(*t.fix);
  Json labels = Json::array();
  for (const auto& l : t.labels) labels.push_back(label_json(l));
  j["labels"] = labels;
  return j;
}

ReviewStore::ReviewStore() = default;

ReviewStore::ReviewStore(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  const auto path = dir / "events.jsonl";
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      Json e;
      try {
        e = Json::parse(line);
      } catch (const std::exception& ex) {
        throw Error(ErrorCode::MalformedRecord, path.string() + ":" + std::to_string(n) + ": " + ex.what());
      }
      apply(e);
      events_.push_back(std::move(e));
    }
  }
  log_.open(path, std::ios::app);
  if (!log_) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  log_path_ = path;
}

ReviewTask& ReviewStore::find(std::string_view id) {
  auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const ReviewTask& t) { return t.task_id == id; });
  if (it == tasks_.end()) throw Error(ErrorCode::TaskNotFound, std::string(id));
  return *it;
}

const ReviewTask& ReviewStore::find(std::string_view id) const {
  return const_cast<ReviewStore*>(this)->find(id);
}

void ReviewStore::commit(Json event) {
  if (log_path_) {
    log_ << event.dump() << '\n';
    log_.flush();
    if (!log_) throw Error(ErrorCode::IoFailure, "cannot append to " + log_path_->string());
  }
  apply(event);
  events_.push_back(std::move(event));
}

void ReviewStore::apply(const Json& e) {
  try {
    const std::string type = e.at("type").get<std::string>();
    if (type == "enqueue") {
      ReviewTask t;
      t.task_id = e.at("task_id").get<std::string>();
      const auto kind = task_kind_from_string(e.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorCode::MalformedRecord, "unknown task kind");
      t.kind = *kind;
      t.problem_id = e.at("problem_id").get<std::string>();
      t.language = e.value("language", "");
      t.payload = e.value("payload", Json::object());
      tasks_.push_back(std::move(t));
      ++next_id_;
    } else if (type == "fix") {
      auto& t = find(e.at("task_id").get<std::string>());
      t.fix = fix_from(e.at("fix"));
      t.status = t.fix->discard ? TaskStatus::Discarded : TaskStatus::Fixed;
      ++t.version;
      if (!t.fix->discard) recheck_.push_back(t.task_id);
    } else if (type == "score") {
      auto& t = find(e.at("task_id").get<std::string>());
      HumanQualityLabel l;
      const auto scale = label_scale_from_string(e.at("scale").get<std::string>());
      if (!scale) throw Error(ErrorCode::MalformedRecord, "unknown label scale");
      l.scale = *scale;
      l.value = e.at("value").get<int>();
      l.reviewer_id = e.value("reviewer_id", "");
      ++t.version;
      if (l.scale == LabelScale::TenPoint) {
        t.status = l.value < 5 ? TaskStatus::Discarded : TaskStatus::Fixed;
        t.labels.push_back(std::move(l));
      } else if (!t.labels.empty()) {
        // second review of an earlier 1-2 label; it decides
        t.labels.front().second_review = l.value;
        t.status = low_four_point(l.value) ? TaskStatus::Discarded : TaskStatus::Fixed;
        t.labels.push_back(std::move(l));
      } else {
        t.status = low_four_point(l.value) ? TaskStatus::Open : TaskStatus::Fixed;
        t.labels.push_back(std::move(l));
      }
    } else if (type == "recheck_taken") {
      for (const auto& id : e.at("task_ids")) {
        auto it = std::find(recheck_.begin(), recheck_.end(), id.get<std::string>());
        if (it != recheck_.end()) recheck_.erase(it);
      }
    } else {
      throw Error(ErrorCode::MalformedRecord, "unknown event type " + type);
    }
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::MalformedRecord, std::string("bad review event: ") + ex.what());
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::TaskNotFound) throw Error(ErrorCode::MalformedRecord, ex.what());
    throw;
  }
}

ReviewTask ReviewStore::enqueue(TaskKind kind, std::string problem_id, Json payload, std::string language) {
  if (problem_id.empty()) throw Error(ErrorCode::InvalidArgument, "task needs a problem id");
  std::lock_guard lock(mu_);
  const std::string id = format_id(next_id_);
  commit(Json{{"type", "enqueue"},
              {"task_id", id},
              {"kind", to_string(kind)},
              {"problem_id", std::move(problem_id)},
              {"language", std::move(language)},
              {"payload", payload.is_null() ? Json::object() : std::move(payload)}});
  return tasks_.back();
}

ReviewStore::Page ReviewStore::queue(const QueueFilter& filter) const {
  std::lock_guard lock(mu_);
  Page page;
  for (const auto& t : tasks_) {
    if (filter.kind && t.kind != *filter.kind) continue;
    if (filter.status && t.status != *filter.status) continue;
    if (page.total >= filter.offset && page.tasks.size() < filter.limit) page.tasks.push_back(t);
    ++page.total;
  }
  return page;
}

ReviewTask ReviewStore::get(std::string_view task_id) const {
  std::lock_guard lock(mu_);
  return find(task_id);
}

namespace {

void check_open(const ReviewTask& t, std::optional<int> expected_version) {
  if (t.status != TaskStatus::Open)
    throw Error(ErrorCode::TaskNotOpen, t.task_id + " is " + std::string(to_string(t.status)));
  if (expected_version && *expected_version != t.version)
    throw Error(ErrorCode::TaskNotOpen, t.task_id + " changed (version " + std::to_string(t.version) +
                                            ", expected " + std::to_string(*expected_version) + ")");
}

}  // namespace

ReviewTask ReviewStore::fix(std::string_view task_id, const TaskFix& fix, std::optional<int> expected_version) {
  std::lock_guard lock(mu_);
  const auto& t = find(task_id);
  if (t.kind == TaskKind::TranslationScore)
    throw Error(ErrorCode::WrongTaskKind, t.task_id + " takes a score, not a fix");
  check_open(t, expected_version);
  if (!fix.discard && !fix.text && !fix.bbox)
    throw Error(ErrorCode::InvalidArgument, "a fix needs text, a bbox or discard");
  if (fix.text && fix.text->empty()) throw Error(ErrorCode::InvalidArgument, "fixed text is empty");
  if (fix.bbox) {
    const auto& b = *fix.bbox;
    if (b.x < 0 || b.y < 0 || b.width <= 0 || b.height <= 0)
      throw Error(ErrorCode::InvalidBbox, "bbox needs x,y >= 0 and w,h > 0");
    const auto& p = t.payload;
    if (p.contains("image_width") && p.contains("image_height") &&
        !b.fits_within(p["image_width"].get<int>(), p["image_height"].get<int>()))
      throw Error(ErrorCode::InvalidBbox, "bbox lies outside the " + p["image_width"].dump() + "x" +
                                              p["image_height"].dump() + " image");
  }
  commit(Json{{"type", "fix"}, {"task_id", t.task_id}, {"version", t.version}, {"fix", fix_json(fix)}});
  return find(task_id);
}

ReviewTask ReviewStore::score(std::string_view task_id, const HumanQualityLabel& label,
                              std::optional<int> expected_version) {
  std::lock_guard lock(mu_);
  const auto& t = find(task_id);
  if (t.kind != TaskKind::TranslationScore) throw Error(ErrorCode::WrongTaskKind, t.task_id + " is not scored");
  check_open(t, expected_version);
  if (label.scale == LabelScale::FourPoint && (label.value < 1 || label.value > 4))
    throw Error(ErrorCode::OutOfRangeLabel, "four-point labels are 1-4, got " + std::to_string(label.value));
  if (label.scale == LabelScale::TenPoint && (label.value < 0 || label.value > 10))
    throw Error(ErrorCode::OutOfRangeLabel, "ten-point labels are 0-10, got " + std::to_string(label.value));
  if (label.second_review)
    throw Error(ErrorCode::InvalidArgument, "a second review is submitted as its own score");
  if (!t.labels.empty()) {
    const auto& first = t.labels.front();
    if (first.scale != label.scale) throw Error(ErrorCode::InvalidArgument, "second review uses a different scale");
    if (!label.reviewer_id.empty() && first.reviewer_id == label.reviewer_id)
      throw Error(ErrorCode::InvalidArgument, "second review must come from another reviewer");
  }
  commit(Json{{"type", "score"},
              {"task_id", t.task_id},
              {"version", t.version},
              {"scale", to_string(label.scale)},
              {"value", label.value},
              {"reviewer_id", label.reviewer_id}});
  return find(task_id);
}

std::vector<RecheckItem> ReviewStore::take_recheck(TaskKind kind) {
  std::lock_guard lock(mu_);
  std::vector<RecheckItem> out;
  Json ids = Json::array();
  for (const auto& id : recheck_) {
    const auto& t = find(id);
    if (t.kind != kind) continue;
    out.push_back({t.task_id, t.problem_id, t.fix.value_or(TaskFix{})});
    ids.push_back(id);
  }
  if (!out.empty()) commit(Json{{"type", "recheck_taken"}, {"task_ids", ids}});
  return out;
}

std::optional<TaskFix> ReviewStore::latest_fix(TaskKind kind, std::string_view problem_id,
                                               std::string_view language) const {
  std::lock_guard lock(mu_);
  for (auto it = tasks_.rbegin(); it != tasks_.rend(); ++it)
    if (it->kind == kind && it->status == TaskStatus::Fixed && it->problem_id == problem_id &&
        it->language == language)
      return it->fix;
  return std::nullopt;
}

std::set<std::string> ReviewStore::discarded(std::string_view language) const {
  std::lock_guard lock(mu_);
  std::set<std::string> out;
  for (const auto& t : tasks_)
    if (t.status == TaskStatus::Discarded && (t.language.empty() || t.language == language))
      out.insert(t.problem_id);
  return out;
}

bool ReviewStore::has_open(TaskKind kind, std::string_view problem_id, std::string_view language) const {
  std::lock_guard lock(mu_);
  return std::any_of(tasks_.begin(), tasks_.end(), [&](const ReviewTask& t) {
    return t.kind == kind && t.status == TaskStatus::Open && t.problem_id == problem_id && t.language == language;
  });
}

std::vector<ReviewTask> ReviewStore::all() const {
  std::lock_guard lock(mu_);
  return tasks_;
}

std::vector<Json> ReviewStore::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::unique_ptr<ReviewStore> ReviewStore::replay(const std::vector<Json>& events) {
  auto s = std::make_unique<ReviewStore>();
  for (const auto& e : events) {
    s->apply(e);
    s->events_.push_back(e);
  }
  return s;
}

}  // namespace forge::review
