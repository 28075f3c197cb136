#include "forge/review_server.hpp"

#include <thread>

#include "httplib.h"

#include "forge/error.hpp"

namespace forge::review {

namespace {

int status_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::TaskNotFound:
      return 404;
    case ErrorCode::TaskNotOpen:
      return 409;
    case ErrorCode::IoFailure:
      return 500;
    default:
      return 400;
  }
}

void send_json(httplib::Response& res, const Json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, Json{{"error", to_string(code)}, {"message", message}}, status_for(code));
}

template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e.code(), e.what());
  } catch (const Json::exception& e) {
    send_error(res, ErrorCode::InvalidArgument, e.what());
  }
}

std::optional<int> version_of(const Json& body) {
  if (body.contains("version") && !body["version"].is_null()) return body["version"].get<int>();
  return std::nullopt;
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const auto v = req.get_param_value(name);
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be a non-negative integer");
  }
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json j = Json::parse(req.body);
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
  return j;
}

}  // namespace

struct ReviewServer::Impl {
  ReviewStore& store;
  httplib::Server server;
  std::thread thread;
  explicit Impl(ReviewStore& s) : store(s) {}
};

ReviewServer::ReviewServer(ReviewStore& store, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(store)) {
  auto& srv = impl_->server;
  auto& st = impl_->store;

  srv.Get("/queue", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      ReviewStore::QueueFilter f;
      if (req.has_param("kind")) {
        f.kind = task_kind_from_string(req.get_param_value("kind"));
        if (!f.kind) throw Error(ErrorCode::InvalidArgument, "unknown kind " + req.get_param_value("kind"));
      }
      if (req.has_param("status")) {
        f.status = task_status_from_string(req.get_param_value("status"));
        if (!f.status) throw Error(ErrorCode::InvalidArgument, "unknown status " + req.get_param_value("status"));
      }
      f.offset = size_param(req, "offset", 0);
      f.limit = size_param(req, "limit", 100);
      const auto page = st.queue(f);
      Json tasks = Json::array();
      for (const auto& t : page.tasks) tasks.push_back(to_json(t));
      send_json(res, Json{{"tasks", tasks}, {"total", page.total}, {"offset", f.offset}, {"limit", f.limit}});
    });
  });

  srv.Get(R"(/task/([^/]+))", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, to_json(st.get(req.matches[1].str()))); });
  });

  srv.Post(R"(/task/([^/]+)/fix)", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Json body = parse_body(req);
      TaskFix fix;
      if (body.contains("text")) fix.text = body["text"].get<std::string>();
      if (body.contains("bbox")) {
        const auto& b = body["bbox"];
        fix.bbox = BoundingBox{b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(),
                               b.at("h").get<int>()};
      }
      fix.discard = body.value("discard", false);
      send_json(res, to_json(st.fix(req.matches[1].str(), fix, version_of(body))));
    });
  });

  srv.Post(R"(/task/([^/]+)/score)", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Json body = parse_body(req);
      HumanQualityLabel label;
      const auto scale = label_scale_from_string(body.value("scale", "FourPoint"));
      if (!scale) throw Error(ErrorCode::InvalidArgument, "unknown scale " + body["scale"].dump());
      label.scale = *scale;
      label.value = body.at("value").get<int>();
      label.reviewer_id = body.value("reviewer_id", "");
      if (body.contains("second_review") && !body["second_review"].is_null())
        label.second_review = body["second_review"].get<int>();
      send_json(res, to_json(st.score(req.matches[1].str(), label, version_of(body))));
    });
  });

  if (static_dir) {
    if (!srv.set_mount_point("/", static_dir->string()))
      throw Error(ErrorCode::IoFailure, "cannot serve " + static_dir->string());
  }
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ReviewServer::listen() { impl_->server.listen_after_bind(); }

void ReviewServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void ReviewServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace forge::review
