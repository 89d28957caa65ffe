#include "bessim/service.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "bessim/engine.hpp"
#include "bessim/errors.hpp"
#include "bessim/frame_hub.hpp"

namespace bessim {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

json rolling_report_json(const std::vector<TelemetryRecord>& log, int tick_hz, double window_s,
                         const ClassifierParams& params) {
  json j;
  const auto want = static_cast<std::size_t>(std::llround(window_s * tick_hz));
  const std::size_t n = std::min(log.size(), want);
  j["window_s"] = window_s;
  j["samples"] = n;
  if (n == 0) {
    for (const char* k : {"classification", "settled_mean_hz", "settled_std_hz", "peak_to_peak_hz", "abnormal_share",
                          "band_violations"}) {
      j[k] = nullptr;
    }
    return j;
  }
  std::vector<double> f;
  f.reserve(n);
  for (std::size_t i = log.size() - n; i < log.size(); ++i) f.push_back(log[i].true_f_hz);

  if (n >= settled_window_size(n, tick_hz, params)) {
    const auto r = classify_stability(f, tick_hz, params);
    j["classification"] = to_string(r.classification);
    j["settled_mean_hz"] = r.settled_mean_hz;
    j["settled_std_hz"] = r.settled_std_hz;
    j["peak_to_peak_hz"] = r.peak_to_peak_hz;
    j["abnormal_share"] = r.abnormal_share;
    j["band_violations"] = r.band_violations;
    return j;
  }
  // Too short to classify: report plain statistics over what exists.
  double sum = 0.0;
  for (double x : f) sum += x;
  const double m = sum / static_cast<double>(n);
  double ss = 0.0;
  std::int64_t outside = 0;
  for (double x : f) {
    ss += (x - m) * (x - m);
    outside += (x < params.band_lo || x > params.band_hi);
  }
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  j["classification"] = nullptr;
  j["settled_mean_hz"] = m;
  j["settled_std_hz"] = std::sqrt(ss / static_cast<double>(n));
  j["peak_to_peak_hz"] = *hi - *lo;
  j["abnormal_share"] = abnormal_share(f, params.abnormal_half_band, params.nominal_hz);
  j["band_violations"] = outside;
  return j;
}

namespace {

std::string field_of(const std::string& message) {
  const auto colon = message.find(": ");
  if (colon == std::string::npos) return {};
  const std::string head = message.substr(0, colon);
  return head.find(' ') == std::string::npos ? head : std::string{};
}

struct Snapshot {
  Tick tick = 0;
  RunState state = RunState::paused;
  double speed = 1.0;
  std::optional<TelemetryRecord> last;
  std::string attack_specs = "{}";
  std::string report = "null";
};

} // namespace

struct ControlService::Impl {
  ServiceOptions opts;
  Engine engine;
  FrameHub hub;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread io_thread;
  std::thread runner_thread;
  std::atomic<bool> stopping{false};
  bool started = false;

  std::mutex snap_mu;
  Snapshot snap;
  std::uint64_t specs_version = ~std::uint64_t{0};
  std::string specs_cache = "{}";
  std::string report_cache;

  std::mutex wake_mu;
  std::condition_variable wake_cv;
  bool wake = false;

  std::mutex done_mu;
  std::condition_variable done_cv;
  bool done = false;

  Impl(ScenarioConfig cfg, ServiceOptions o) : opts(std::move(o)), engine(std::move(cfg), true) {
    report_cache = rolling_report_json({}, engine.tick_hz(), opts.rolling_window_s).dump();
    refresh_snapshot();
  }

  void notify_runner() {
    {
      std::lock_guard lock(wake_mu);
      wake = true;
    }
    wake_cv.notify_all();
  }

  void wait_runner(std::chrono::microseconds d) {
    std::unique_lock lock(wake_mu);
    wake_cv.wait_for(lock, d, [this] { return wake || stopping.load(); });
    wake = false;
  }

  void refresh_specs() {
    if (engine.config_version() != specs_version) {
      specs_cache = engine.attack_specs().dump();
      specs_version = engine.config_version();
    }
  }

  void refresh_snapshot() {
    refresh_specs();
    std::lock_guard lock(snap_mu);
    snap.tick = engine.tick();
    snap.state = engine.run_state();
    snap.speed = engine.speed();
    const auto& log = engine.telemetry();
    if (log.empty()) snap.last.reset();
    else snap.last = log.back();
    snap.attack_specs = specs_cache;
    snap.report = report_cache;
  }

  std::string render_frame(const TelemetryRecord& rec) {
    std::string body = record_to_json(rec).dump();
    std::string out = "{\"type\":\"telemetry\",";
    out.append(body, 1, body.size() - 2);
    out += ",\"state\":\"" + to_string(engine.run_state()) + "\"";
    out += ",\"attack_specs\":" + specs_cache;
    out += ",\"report\":" + report_cache + "}";
    return out;
  }

  void after_step(StepOutcome outcome) {
    if (outcome == StepOutcome::advanced) {
      refresh_specs();
      const auto& log = engine.telemetry();
      const TelemetryRecord& rec = log.back();
      if (rec.tick % engine.tick_hz() == 0 || log.size() == 1) {
        report_cache = rolling_report_json(log, engine.tick_hz(), opts.rolling_window_s).dump();
      }
      if (hub.wants(rec.tick)) hub.publish(rec.tick, [&] { return render_frame(rec); });
    } else if (engine.telemetry().empty()) {
      report_cache = rolling_report_json({}, engine.tick_hz(), opts.rolling_window_s).dump();
    }
    refresh_snapshot();
  }

  void runner_loop() {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    Tick base_tick = engine.tick();
    double base_speed = engine.speed();
    Tick last_tick = engine.tick();
    auto rebase = [&] {
      t0 = clock::now();
      base_tick = engine.tick();
      base_speed = engine.speed();
    };

    while (!stopping) {
      if (engine.run_state() != RunState::running) {
        const auto outcome = engine.step();
        after_step(outcome);
        if (outcome != StepOutcome::advanced) {
          wait_runner(std::chrono::milliseconds(50));
          rebase();
        }
        last_tick = engine.tick();
        continue;
      }
      if (engine.speed() != base_speed || engine.tick() < last_tick) rebase();

      const double rate = engine.speed() * engine.tick_hz();
      const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
      const Tick target = base_tick + static_cast<Tick>(std::floor(elapsed * rate));
      if (engine.tick() >= target) {
        const double next_at = static_cast<double>(target + 1 - base_tick) / rate;
        const double wait_s = std::clamp(next_at - elapsed, 0.0005, 0.02);
        wait_runner(std::chrono::microseconds(static_cast<long>(wait_s * 1e6)));
        // a command may be waiting; apply it on the next step
        continue;
      }
      const Tick budget = std::min<Tick>(target - engine.tick(), 2000);
      for (Tick i = 0; i < budget && !stopping; ++i) {
        const auto outcome = engine.step();
        after_step(outcome);
        if (outcome != StepOutcome::advanced) break;
      }
      // far behind (e.g. very high speed factor): run flat out from here
      if (target - engine.tick() > static_cast<Tick>(10 * rate)) rebase();
      last_tick = engine.tick();
    }
  }

  json snapshot_json() {
    std::lock_guard lock(snap_mu);
    json j;
    j["tick"] = snap.tick;
    j["time_s"] = static_cast<double>(snap.tick) / engine.tick_hz();
    j["state"] = to_string(snap.state);
    j["speed"] = snap.speed;
    j["tick_hz"] = engine.tick_hz();
    j["total_ticks"] = engine.total_ticks();
    j["record"] = snap.last ? record_to_json(*snap.last) : json(nullptr);
    j["attack_specs"] = json::parse(snap.attack_specs);
    j["report"] = json::parse(snap.report);
    return j;
  }

  json report_now() {
    std::lock_guard lock(snap_mu);
    json j = json::parse(snap.report);
    j["tick"] = snap.tick;
    return j;
  }

  using Response = http::response<http::string_body>;

  Response make_response(const http::request<http::string_body>& req, http::status status, const json& body) {
    Response res{status, req.version()};
    res.set(http::field::server, "bessim");
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = body.dump();
    res.prepare_payload();
    return res;
  }

  Response error(const http::request<http::string_body>& req, http::status status, const std::string& msg,
                 const std::string& field = {}) {
    json j{{"error", msg}};
    j["field"] = field.empty() ? json(nullptr) : json(field);
    return make_response(req, status, j);
  }

  Response ack_response(const http::request<http::string_body>& req, const CommandAck& ack, json body) {
    if (ack.conflict) return error(req, http::status::conflict, ack.error);
    if (!ack.accepted) return error(req, http::status::bad_request, ack.error, field_of(ack.error));
    notify_runner();
    body["accepted"] = true;
    body["effective_tick"] = ack.effective_tick;
    return make_response(req, http::status::ok, body);
  }

  Response handle(const http::request<http::string_body>& req) {
    const std::string target(req.target());
    const std::string path = target.substr(0, target.find('?'));

    if (req.method() == http::verb::options) {
      Response res{http::status::no_content, req.version()};
      res.set(http::field::access_control_allow_origin, "*");
      res.set(http::field::access_control_allow_methods, "GET, POST, PATCH, OPTIONS");
      res.set(http::field::access_control_allow_headers, "Content-Type");
      res.keep_alive(req.keep_alive());
      res.prepare_payload();
      return res;
    }

    auto parse_body = [&]() -> json {
      try {
        return json::parse(req.body());
      } catch (const json::parse_error& e) {
        throw ValidationError(std::string("body: invalid JSON: ") + e.what());
      }
    };

    try {
      if (path == "/api/state") {
        if (req.method() != http::verb::get) return error(req, http::status::method_not_allowed, "use GET");
        return make_response(req, http::status::ok, snapshot_json());
      }
      if (path == "/api/scenario") {
        if (req.method() != http::verb::get) return error(req, http::status::method_not_allowed, "use GET");
        return make_response(req, http::status::ok, json::parse(scenario_to_json(engine.projected_config()).dump()));
      }
      if (path == "/api/report") {
        if (req.method() != http::verb::get) return error(req, http::status::method_not_allowed, "use GET");
        return make_response(req, http::status::ok, report_now());
      }
      if (path == "/api/control") {
        if (req.method() != http::verb::post) return error(req, http::status::method_not_allowed, "use POST");
        const json body = parse_body();
        if (!body.is_object() || !body.contains("action") || !body["action"].is_string()) {
          return error(req, http::status::bad_request, "action: required string", "action");
        }
        const std::string action = body["action"];
        EngineCommand cmd;
        if (action == "pause") cmd.kind = CommandKind::pause;
        else if (action == "resume") cmd.kind = CommandKind::resume;
        else if (action == "reset") cmd.kind = CommandKind::reset;
        else if (action == "stop") cmd.kind = CommandKind::stop;
        else if (action == "speed") {
          cmd.kind = CommandKind::set_speed;
          cmd.payload = body.value("value", json(nullptr));
        } else {
          return error(req, http::status::bad_request, "action: expected pause, resume, reset, speed or stop", "action");
        }
        const auto ack = engine.enqueue(std::move(cmd));
        json out{{"action", action}};
        if (action == "speed") out["value"] = ack.effective_spec;
        return ack_response(req, ack, out);
      }
      const std::string prefix = "/api/attacks/";
      if (path.rfind(prefix, 0) == 0) {
        if (req.method() != http::verb::patch) return error(req, http::status::method_not_allowed, "use PATCH");
        const std::string id = path.substr(prefix.size());
        if (!is_known_link(id) && id != "load_alter") {
          return error(req, http::status::not_found, "unknown link_id '" + id + "'", "link_id");
        }
        const json body = parse_body();
        if (!body.is_object()) return error(req, http::status::bad_request, "body: expected object");
        EngineCommand cmd{CommandKind::patch_attack, body, id, std::chrono::system_clock::now()};
        const auto ack = engine.enqueue(std::move(cmd));
        if (!ack.accepted && !ack.conflict) {
          std::string field = field_of(ack.error);
          const std::string link_prefix = "links." + id + ".";
          if (field.rfind(link_prefix, 0) == 0) field = field.substr(link_prefix.size());
          else if (field.rfind("attacks.load_alter.", 0) == 0) field = field.substr(19);
          return error(req, http::status::bad_request, ack.error, field);
        }
        return ack_response(req, ack, json{{"link_id", id}, {"spec", ack.effective_spec}});
      }
    } catch (const ValidationError& e) {
      return error(req, http::status::bad_request, e.what(), field_of(e.what()));
    } catch (const std::exception& e) {
      return error(req, http::status::internal_server_error, e.what());
    }
    return error(req, http::status::not_found, "no route for " + path);
  }

  void do_accept();
};

namespace {

std::optional<int> query_int(const std::string& target, const std::string& key) {
  const auto q = target.find('?');
  if (q == std::string::npos) return std::nullopt;
  std::string_view rest(target);
  rest.remove_prefix(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const auto item = rest.substr(0, amp);
    const auto eq = item.find('=');
    if (item.substr(0, eq) == key && eq != std::string_view::npos) {
      const auto v = item.substr(eq + 1);
      int out = 0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || ptr != v.data() + v.size()) throw ValidationError("decimation: expected integer");
      return out;
    }
    if (amp == std::string_view::npos) break;
    rest.remove_prefix(amp + 1);
  }
  return std::nullopt;
}

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
  WsSession(tcp::socket socket, ControlService::Impl& impl, int decimation)
      : ws_(std::move(socket)), impl_(impl), decimation_(decimation) {}

  ~WsSession() {
    if (sub_) impl_.hub.unsubscribe(sub_);
  }

  void run(http::request<http::string_body> req) {
    boost::system::error_code ec;
    ws_.next_layer().socket().set_option(net::socket_base::send_buffer_size(impl_.opts.ws_send_buffer_bytes), ec);
    ws_.next_layer().expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code e) { self->on_accept(e); });
  }

private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    sub_ = impl_.hub.subscribe(decimation_);
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto exec = ws_.get_executor();
    sub_->set_notify([weak, exec] {
      net::post(exec, [weak] {
        if (auto s = weak.lock()) s->maybe_write();
      });
    });
    do_read();
    maybe_write();
  }

  void do_read() {
    ws_.async_read(rbuf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->rbuf_.consume(self->rbuf_.size());
      self->do_read();
    });
  }

  void maybe_write() {
    if (writing_ || closed_ || !sub_) return;
    auto d = sub_->take();
    if (!d) return;
    out_ = "{\"gap\":";
    out_ += d->gap ? "true" : "false";
    out_ += ",\"skipped\":" + std::to_string(d->skipped) + ",";
    out_.append(*d->frame, 1, std::string::npos);
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->close();
      self->maybe_write();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    if (sub_) {
      impl_.hub.unsubscribe(sub_);
      sub_->set_notify(nullptr);
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  ControlService::Impl& impl_;
  int decimation_;
  std::shared_ptr<FrameHub::Subscriber> sub_;
  beast::flat_buffer rbuf_;
  std::string out_;
  bool writing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
  HttpSession(tcp::socket socket, ControlService::Impl& impl) : stream_(std::move(socket)), impl_(impl) {}

  void run() { do_read(); }

private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      if (target.substr(0, target.find('?')) != "/ws/telemetry") {
        return write(impl_.error(req_, http::status::not_found, "no websocket route " + target));
      }
      int decimation = 1;
      try {
        decimation = query_int(target, "decimation").value_or(1);
        if (decimation < 1) throw ValidationError("decimation: must be >= 1");
      } catch (const ValidationError& e) {
        return write(impl_.error(req_, http::status::bad_request, e.what(), "decimation"));
      }
      std::make_shared<WsSession>(stream_.release_socket(), impl_, decimation)->run(std::move(req_));
      return;
    }
    write(impl_.handle(req_));
  }

  void write(ControlService::Impl::Response res) {
    auto sp = std::make_shared<ControlService::Impl::Response>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!sp->keep_alive()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  ControlService::Impl& impl_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

} // namespace

void ControlService::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (!stopping) do_accept();
      return;
    }
    std::make_shared<HttpSession>(std::move(socket), *this)->run();
    do_accept();
  });
}

ControlService::ControlService(ScenarioConfig cfg, ServiceOptions opts)
    : impl_(std::make_unique<Impl>(std::move(cfg), std::move(opts))) {}

ControlService::~ControlService() { stop(); }

unsigned short ControlService::start() {
  auto& s = *impl_;
  if (s.started) throw RuntimeError("service already started");
  boost::system::error_code ec;
  const auto addr = net::ip::make_address(s.opts.bind_address, ec);
  if (ec) throw ValidationError("bind: invalid address '" + s.opts.bind_address + "'");
  const tcp::endpoint ep{addr, s.opts.port};
  s.acceptor.open(ep.protocol(), ec);
  if (!ec) s.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor.bind(ep, ec);
  if (!ec) s.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw RuntimeError("cannot listen on " + s.opts.bind_address + ":" + std::to_string(s.opts.port) + ": " +
                             ec.message());
  const auto port = s.acceptor.local_endpoint().port();
  s.started = true;
  s.do_accept();
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.runner_thread = std::thread([&s] { s.runner_loop(); });
  return port;
}

void ControlService::stop() {
  auto& s = *impl_;
  if (s.stopping.exchange(true)) return;
  s.notify_runner();
  if (s.runner_thread.joinable()) s.runner_thread.join();
  net::post(s.ioc, [&s] {
    boost::system::error_code ec;
    s.acceptor.close(ec);
  });
  s.ioc.stop();
  if (s.io_thread.joinable()) s.io_thread.join();
  {
    std::lock_guard lock(s.done_mu);
    s.done = true;
  }
  s.done_cv.notify_all();
}

void ControlService::wait() {
  auto& s = *impl_;
  std::unique_lock lock(s.done_mu);
  s.done_cv.wait(lock, [&s] { return s.done; });
}

} // namespace bessim
