#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "forge/review.hpp"

namespace forge::review {

// JSON-over-HTTP adapter over a ReviewStore:
//   GET  /queue?kind=&status=&offset=&limit=
//   GET  /task/{id}
//   POST /task/{id}/fix    {"text"?, "bbox"?: {x,y,w,h}, "discard"?, "version"?}
//   POST /task/{id}/score  {"scale", "value", "reviewer_id", "version"?}
// Errors come back as {"error": <code>, "message": ...} with 404 for unknown
// tasks, 409 for TaskNotOpen and 400 otherwise. Files under static_dir are
// served from /.
class ReviewServer {
 public:
  explicit ReviewServer(ReviewStore& store, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  // port 0 picks a free port; returns the bound port. Throws IoFailure.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void start();   // listen() on a background thread
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace forge::review
