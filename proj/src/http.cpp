#include "huci/http.hpp"

#include <charconv>
#include <condition_variable>
#include <regex>
#include <thread>

#include <httplib.h>

#include "huci/codec.hpp"
#include "huci/error.hpp"
#include "huci/query.hpp"

namespace huci {

namespace {

constexpr const char* kJsonType = "application/json";

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_resource:
    case ErrorCode::unknown_citation:
    case ErrorCode::not_found:
    case ErrorCode::unknown_node:
      return 404;
    case ErrorCode::restricted_context:
    case ErrorCode::forbidden:
      return 403;
    default:
      return 400;
  }
}

void send_json(httplib::Response& res, const Json& j, int status = 200) {
  res.status = status;
  res.set_content(pretty(j), kJsonType);
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, Json{{"error", to_string(e.code())}, {"detail", e.what()}}, http_status(e.code()));
}

std::int64_t int_param(const httplib::Request& req, const char* name, std::int64_t fallback, ErrorCode on_error) {
  if (!req.has_param(name)) return fallback;
  const std::string v = req.get_param_value(name);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw Error(on_error, v);
  return out;
}

ExportFormat format_param(const httplib::Request& req) {
  const std::string f = req.has_param("format") ? req.get_param_value("format") : "json";
  const auto format = parse_export_format(f);
  if (!format) throw Error(ErrorCode::unknown_format, f);
  return *format;
}

CsvTable table_param(const httplib::Request& req) {
  if (!req.has_param("table")) return CsvTable::citations;
  const auto t = parse_csv_table(req.get_param_value("table"));
  if (!t) throw Error(ErrorCode::unknown_format, "table " + req.get_param_value("table"));
  return *t;
}

void send_export(httplib::Response& res, ExportFormat format, std::string bytes) {
  res.status = 200;
  res.set_content(std::move(bytes), format == ExportFormat::json ? kJsonType : "text/plain; charset=utf-8");
}

Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::malformed_record, e.what());
  }
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_json(res, Json{{"error", "internal"}, {"detail", e.what()}}, 500);
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
  int port = -1;
  std::mutex mu;
  std::condition_variable stopped_cv;
  bool stopped = false;

  bool is_local(const httplib::Request& req) const {
    if (options.token && !options.token->empty() &&
        req.get_header_value("Authorization") == "Bearer " + *options.token)
      return true;
    if (!options.trust_loopback) return false;
    const auto& a = req.remote_addr;
    return a == "127.0.0.1" || a == "::1" || a == "::ffff:127.0.0.1";
  }
};

HttpServer::HttpServer(ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  // SO_REUSEADDR only, never SO_REUSEPORT.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
  auto& s = *impl_;
  if (s.options.port == 0) {
    s.port = s.server.bind_to_any_port(s.options.host);
  } else {
    s.port = s.server.bind_to_port(s.options.host, s.options.port) ? s.options.port : -1;
  }
  if (s.port < 0)
    throw Error(ErrorCode::io_error, "cannot bind port " + std::to_string(s.options.port) + " on " + s.options.host +
                                         " (port in use?)");
  s.thread = std::thread([this] { impl_->server.listen_after_bind(); });
  s.server.wait_until_ready();
  return s.port;
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopped = true;
  }
  impl_->stopped_cv.notify_all();
}

void HttpServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

int HttpServer::port() const { return impl_->port; }

// ---------------------------------------------------------------------------

NodeServer::NodeServer(Node& node, ServerOptions options) : HttpServer(std::move(options)) {
  auto& svr = impl_->server;
  Impl* impl = impl_.get();
  auto requester = [impl](const httplib::Request& req) { return impl->is_local(req) ? Requester::local : Requester::remote; };
  auto require_local = [impl](const httplib::Request& req) {
    if (!impl->is_local(req)) throw Error(ErrorCode::forbidden, "operator access required");
  };

  svr.Get("/meta", guarded([&node](const httplib::Request&, httplib::Response& res) {
    send_json(res, node.serve_meta().to_json());
  }));
  svr.Get("/dump", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto format = format_param(req);
    send_export(res, format, node.serve_dump(format, table_param(req)));
  }));
  svr.Get("/changes", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto since = int_param(req, "since", 0, ErrorCode::invalid_since);
    const auto size = int_param(req, "page_size", kDefaultPageSize, ErrorCode::invalid_page_size);
    send_json(res, to_json(node.serve_changes(since, size)));
  }));
  svr.Get("/resources/(.+)", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto r = node.resource(id);
    if (!r) throw Error(ErrorCode::unknown_resource, id);
    send_json(res, to_json(*r));
  }));
  svr.Get("/citations/(.+)/context", guarded([&node, requester](const httplib::Request& req, httplib::Response& res) {
    send_json(res, to_json(node.serve_context(req.matches[1], requester(req))));
  }));
  svr.Get("/citations/(.+)", guarded([&node, requester](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto c = node.citation(id, requester(req));
    if (!c) throw Error(ErrorCode::unknown_citation, id);
    send_json(res, to_json(*c));
  }));
  svr.Post("/admin/ingest", guarded([&node, require_local](const httplib::Request& req, httplib::Response& res) {
    require_local(req);
    send_json(res, node.ingest_dataset(bundle_from_json(parse_body(req))).to_json());
  }));
  svr.Post("/admin/policy", guarded([&node, require_local](const httplib::Request& req, httplib::Response& res) {
    require_local(req);
    const Json body = parse_body(req);
    const auto access = parse_access(body.value("access", ""));
    if (!access || !body.contains("citation_ids") || !body["citation_ids"].is_array())
      throw Error(ErrorCode::malformed_record, "expected {citation_ids:[...], access:open|restricted}");
    send_json(res, node.set_access_policy(body["citation_ids"].get<std::vector<std::string>>(), *access).to_json());
  }));
  svr.Post("/admin/delete", guarded([&node, require_local](const httplib::Request& req, httplib::Response& res) {
    require_local(req);
    const Json body = parse_body(req);
    try {
      send_json(res, node.delete_entities(body.value("resource_ids", std::vector<std::string>{}),
                                          body.value("citation_ids", std::vector<std::string>{}))
                         .to_json());
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::malformed_record, e.what());
    }
  }));
}

// ---------------------------------------------------------------------------

namespace {

/// Rebuilds the query engine only when a new snapshot has been published.
class EngineCache {
 public:
  explicit EngineCache(const Federation& f) : federation_(f) {}

  std::shared_ptr<const QueryEngine> get() {
    auto snap = federation_.snapshot();
    std::lock_guard lock(mu_);
    if (snap != snapshot_) {
      auto index = std::shared_ptr<const CitationIndex>(snap, &snap->index);
      auto clusters = std::shared_ptr<const ClusterMap>(snap, &snap->clusters);
      engine_ = std::make_shared<const QueryEngine>(index, clusters);
      snapshot_ = snap;
    }
    return engine_;
  }

 private:
  const Federation& federation_;
  std::mutex mu_;
  std::shared_ptr<const FederationSnapshot> snapshot_;
  std::shared_ptr<const QueryEngine> engine_;
};

Json resource_list(const QueryEngine& q, const std::vector<std::string>& ids) {
  Json out = Json::array();
  for (const auto& id : ids) out.push_back(to_json(q.index().resources.at(id)));
  return out;
}

const Citation& find_citation(const QueryEngine& q, const std::string& id) {
  auto it = q.index().citations.find(id);
  if (it == q.index().citations.end()) throw Error(ErrorCode::unknown_citation, id);
  return it->second;
}

}  // namespace

FederationServer::FederationServer(const Federation& federation, ServerOptions options)
    : HttpServer(std::move(options)) {
  auto& svr = impl_->server;
  auto cache = std::make_shared<EngineCache>(federation);
  const Federation* fed = &federation;

  svr.Get("/meta", guarded([fed](const httplib::Request&, httplib::Response& res) {
    Json h = fed->dump_header();
    h["last_modified"] = nullptr;
    send_json(res, h);
  }));
  svr.Get("/status", guarded([fed](const httplib::Request&, httplib::Response& res) {
    send_json(res, fed->federation_status());
  }));
  auto exporter = guarded([fed](const httplib::Request& req, httplib::Response& res) {
    const auto format = format_param(req);
    send_export(res, format, export_index(fed->snapshot()->index, format, fed->dump_header(), table_param(req)));
  });
  svr.Get("/dump", exporter);
  svr.Get("/export", exporter);
  svr.Get("/query/backward/(.+)", guarded([cache](const httplib::Request& req, httplib::Response& res) {
    auto q = cache->get();
    const std::string id = q->resolve(req.matches[1].str());
    send_json(res, Json{{"id", id}, {"resources", resource_list(*q, q->backward_chain(id))}});
  }));
  svr.Get("/query/forward/(.+)", guarded([cache](const httplib::Request& req, httplib::Response& res) {
    auto q = cache->get();
    const std::string id = q->resolve(req.matches[1].str());
    send_json(res, Json{{"id", id}, {"resources", resource_list(*q, q->forward_chain(id))}});
  }));
  svr.Get("/query/cocited/(.+)", guarded([cache](const httplib::Request& req, httplib::Response& res) {
    auto q = cache->get();
    const std::string s = req.has_param("scope") ? req.get_param_value("scope") : "publication";
    const auto scope = parse_cocitation_scope(s);
    if (!scope) throw Error(ErrorCode::invalid_params, "scope " + s);
    const std::string id = q->resolve(req.matches[1].str());
    Json counts = Json::object();
    for (const auto& [x, n] : q->co_citations(id, *scope)) counts[x] = n;
    send_json(res, Json{{"id", id}, {"scope", s}, {"counts", counts}});
  }));
  svr.Get("/query/count/(.+)", guarded([cache](const httplib::Request& req, httplib::Response& res) {
    auto q = cache->get();
    const std::string l = req.has_param("level") ? req.get_param_value("level") : "work";
    const auto level = parse_frbr_level(l);
    if (!level) throw Error(ErrorCode::invalid_params, "level " + l);
    const std::string id = q->resolve(req.matches[1].str());
    send_json(res, Json{{"id", id}, {"level", l}, {"count", q->citation_count(id, *level)}});
  }));
  svr.Get("/query/search", guarded([cache](const httplib::Request& req, httplib::Response& res) {
    auto q = cache->get();
    const std::string title = req.get_param_value("title");
    send_json(res, Json{{"query", title}, {"resources", resource_list(*q, q->search(title))}});
  }));
  svr.Get("/report/coverage", guarded([fed](const httplib::Request&, httplib::Response& res) {
    send_json(res, coverage_report(fed->snapshot()->index, default_reference_distribution()).to_json());
  }));
  svr.Get("/resources/(.+)", guarded([cache](const httplib::Request& req, httplib::Response& res) {
    auto q = cache->get();
    send_json(res, to_json(q->index().resources.at(q->resolve(req.matches[1].str()))));
  }));
  svr.Get("/citations/(.+)/context", guarded([cache](const httplib::Request& req, httplib::Response& res) {
    auto q = cache->get();
    const Citation c = redacted(find_citation(*q, req.matches[1]));
    const CitationContext ctx = c.context.value_or(CitationContext{});
    if (ctx.access == Access::restricted) throw Error(ErrorCode::restricted_context, c.citation_id);
    send_json(res, to_json(ctx));
  }));
  svr.Get("/citations/(.+)", guarded([cache](const httplib::Request& req, httplib::Response& res) {
    auto q = cache->get();
    send_json(res, to_json(redacted(find_citation(*q, req.matches[1]))));
  }));
}

// ---------------------------------------------------------------------------

namespace {

class HttpNodeClient final : public NodeClient {
 public:
  explicit HttpNodeClient(const std::string& base_url) : base_url_(base_url), client_(base_url) {
    static const std::regex url(R"(^https?://[^/\s:]+(:[0-9]{1,5})?/?$)");
    if (!std::regex_match(base_url, url) || !client_.is_valid())
      throw Error(ErrorCode::invalid_config, "bad base_url " + base_url);
    client_.set_connection_timeout(5);
    client_.set_read_timeout(60);
  }

  NodeMeta meta() override {
    try {
      return NodeMeta::from_json(Json::parse(get("/meta")));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::node_unreachable, base_url_ + "/meta: " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::node_unreachable) throw;
      throw Error(ErrorCode::node_unreachable, base_url_ + "/meta: " + e.what());
    }
  }

  std::string dump_json() override { return get("/dump?format=json"); }

  ChangePage changes(std::uint64_t since, std::int64_t page_size) override {
    const std::string body = get("/changes?since=" + std::to_string(since) + "&page_size=" + std::to_string(page_size));
    try {
      return change_page_from_json(Json::parse(body));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::dump_invalid, e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::dump_invalid, e.what());
    }
  }

 private:
  std::string get(const std::string& path) {
    auto res = client_.Get(path);
    if (!res) throw Error(ErrorCode::node_unreachable, base_url_ + path + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw Error(ErrorCode::node_unreachable, base_url_ + path + ": HTTP " + std::to_string(res->status));
    return res->body;
  }

  std::string base_url_;
  httplib::Client client_;
};

}  // namespace

std::unique_ptr<NodeClient> make_http_node_client(const std::string& base_url) {
  return std::make_unique<HttpNodeClient>(base_url);
}

}  // namespace huci
