#include "pseudohaptic/analysis.hpp"
#include "pseudohaptic/errors.hpp"
#include "pseudohaptic/service.hpp"

#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <cmath>
#include <filesystem>
#include <future>
#include <sstream>
#include <thread>

using namespace pseudohaptic;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Client {
public:
    explicit Client(ExperimentService& svc) : m_svc(svc) {}

    std::vector<json> send(const std::string& type, json payload, std::optional<std::int64_t> seq = {})
    {
        json msg{{"type", type}, {"seq", seq ? *seq : ++m_seq}, {"payload", std::move(payload)}};
        if (!m_session.empty()) {
            msg["session"] = m_session;
        }
        return send_raw(msg.dump());
    }

    std::vector<json> send_raw(const std::string& text)
    {
        std::vector<json> out;
        for (const auto& r : m_svc.handle(text)) {
            out.push_back(json::parse(r));
        }
        return out;
    }

    std::vector<json> create(const std::string& participant, const std::string& protocol,
                             std::optional<std::uint64_t> seed = {})
    {
        json p{{"participant", participant}, {"protocol", protocol}};
        if (seed) {
            p["seed"] = *seed;
        }
        auto replies = send("session_create", p);
        if (!replies.empty() && replies[0]["type"] == "session_created") {
            m_session = replies[0]["session"].get<std::string>();
            m_state = replies.back()["payload"];
        }
        return replies;
    }

    // One horizontal stroke at 90 px/s, 20 Hz across both areas.
    std::vector<json> stroke(bool left_to_right = true)
    {
        std::vector<json> all;
        for (int i = 0; i <= 104; ++i) {
            const double x = left_to_right ? 80.0 + 4.5 * i : 548.0 - 4.5 * i;
            m_t += 0.05;
            for (auto& r : send("pointer_sample", {{"t", m_t}, {"x", x}, {"y", 210.0}})) {
                track(r);
                all.push_back(std::move(r));
            }
        }
        return all;
    }

    std::vector<json> act(const std::string& type, json payload)
    {
        m_t += 0.5;
        payload["t"] = m_t;
        auto replies = send(type, std::move(payload));
        for (const auto& r : replies) {
            track(r);
        }
        return replies;
    }

    // Plays every remaining trial: comparison trials pick the oscillatory
    // side, adjustment trials press one button and finish.
    void play_all()
    {
        while (!m_state["finished"].get<bool>()) {
            stroke(m_state["trial"].get<int>() % 2 == 0);
            if (m_state["study"] == "comparison") {
                act("answer", {{"side", m_state["oscillatory_side"]}});
            } else {
                act("adjust", {{"button", "slight_increase"}});
                act("adjust", {{"button", "finish"}});
            }
        }
    }

    const json& state() const { return m_state; }
    const std::string& session() const { return m_session; }
    std::int64_t seq() const { return m_seq; }

private:
    void track(const json& r)
    {
        if (r["type"] == "trial_state") {
            m_state = r["payload"];
        }
    }

    ExperimentService& m_svc;
    std::string m_session;
    std::int64_t m_seq = 0;
    double m_t = 0.0;
    json m_state;
};

std::vector<std::string> types(const std::vector<json>& replies)
{
    std::vector<std::string> out;
    for (const auto& r : replies) {
        out.push_back(r["type"].get<std::string>());
    }
    return out;
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("pseudohaptic_svc_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST(MessageTypes, RoundTrip)
{
    for (const char* name : {"session_create", "session_created", "trial_state", "pointer_sample", "render_update",
                             "signal_update", "answer", "adjust", "trial_complete", "error"}) {
        EXPECT_EQ(to_string(parse_message_type(name)), name);
    }
    EXPECT_THROW(parse_message_type("hello"), ProtocolError);
}

TEST(Service, CreateSession)
{
    ExperimentService svc;
    Client c(svc);
    const auto replies = c.create("alice", "comparison", 42);
    ASSERT_EQ(types(replies), (std::vector<std::string>{"session_created", "trial_state"}));
    const auto& created = replies[0];
    EXPECT_EQ(created["seq"], 1);
    EXPECT_EQ(created["ack"], 1);
    EXPECT_EQ(created["payload"]["seed"], 42u);
    EXPECT_EQ(created["payload"]["trials"], 120);
    EXPECT_EQ(created["payload"]["protocol"], "comparison");
    EXPECT_EQ(created["session"].get<std::string>().size(), 17u);
    const auto& st = replies[1]["payload"];
    EXPECT_EQ(replies[1]["seq"], 2);
    EXPECT_EQ(st["phase"], "moving");
    EXPECT_EQ(st["completed"], 0);
    EXPECT_FALSE(st["finished"].get<bool>());
    ASSERT_NE(svc.session(c.session()), nullptr);
    EXPECT_EQ(svc.session(c.session())->seed(), 42u);
}

TEST(Service, DerivedSeedsAndIds)
{
    ServiceConfig cfg;
    cfg.seed = 9;
    ExperimentService svc(cfg);
    Client a(svc), b(svc);
    a.create("a", "comparison");
    b.create("b", "comparison");
    EXPECT_NE(a.session(), b.session());
    EXPECT_EQ(svc.session(a.session())->seed(), derive_seed(9, 1));
    EXPECT_EQ(svc.session(b.session())->seed(), derive_seed(9, 3));

    cfg.seed_policy = SeedPolicy::derived;
    ExperimentService strict(cfg);
    Client c(strict);
    const auto replies = c.create("c", "comparison", 5);
    ASSERT_EQ(types(replies), std::vector<std::string>{"error"});
    EXPECT_EQ(replies[0]["payload"]["code"], "malformed");
    EXPECT_TRUE(strict.session_ids().empty());
}

TEST(Service, RenderOffsetsStayInsideTheBound)
{
    ExperimentService svc;
    Client c(svc);
    c.create("p", "adjust_amplitude", 11);
    int checked = 0;
    int signals = 0;
    for (int trial = 0; trial < 6; ++trial) {
        const double alpha = c.state()["alpha"].get<double>();
        for (const auto& r : c.stroke()) {
            if (r["type"] == "signal_update") {
                ++signals;
                continue;
            }
            if (r["type"] != "render_update") {
                continue;
            }
            const auto& p = r["payload"];
            const double bound = kDefaultCalibrationSeconds * alpha * p["speed"].get<double>();
            if (p["area"] == "left") {
                EXPECT_LE(std::abs(p["dx"].get<double>()), bound + 1e-12);
                EXPECT_LE(std::abs(p["dy"].get<double>()), bound + 1e-12);
                if (alpha == 2.0 && std::abs(p["speed"].get<double>() - 90.0) < 1e-9) {
                    EXPECT_LE(std::abs(p["dx"].get<double>()), 1.8 + 1e-12);
                }
                ++checked;
            } else {
                EXPECT_EQ(p["dx"], 0.0);
                EXPECT_EQ(p["dy"], 0.0);
            }
        }
        c.act("adjust", {{"button", "finish"}});
    }
    EXPECT_GT(checked, 100);
    EXPECT_GT(signals, 0);
}

TEST(Service, SignalUpdatesOnAreaChange)
{
    ExperimentService svc;
    Client c(svc);
    c.create("p", "comparison", 3);
    std::vector<std::string> areas;
    for (const auto& r : c.stroke()) {
        if (r["type"] == "signal_update") {
            areas.push_back(r["payload"]["area"]);
            if (r["payload"]["area"] == "none") {
                EXPECT_EQ(r["payload"]["frequency"], 0.0);
                EXPECT_EQ(r["payload"]["amplitude"], 0.0);
            }
        }
    }
    ASSERT_GE(areas.size(), 3u);
    EXPECT_EQ(areas.front(), "left");
    EXPECT_NE(std::find(areas.begin(), areas.end(), "none"), areas.end());
    EXPECT_NE(std::find(areas.begin(), areas.end(), "right"), areas.end());
    EXPECT_EQ(c.state()["phase"], "answerable");
}

TEST(Service, ComparisonTrialCompletes)
{
    ExperimentService svc;
    Client c(svc);
    c.create("p", "comparison", 3);
    c.stroke();
    const std::string osc = c.state()["oscillatory_side"];
    const auto replies = c.act("answer", {{"side", osc}});
    ASSERT_EQ(types(replies), (std::vector<std::string>{"trial_complete", "trial_state"}));
    EXPECT_EQ(replies[0]["payload"]["selected_side"], osc);
    EXPECT_TRUE(replies[0]["payload"]["chose_oscillatory"].get<bool>());
    EXPECT_EQ(replies[1]["payload"]["completed"], 1);
    EXPECT_EQ(replies[1]["payload"]["trial"], 1);
}

TEST(Service, ClientErrorsLeaveSessionUnchanged)
{
    ExperimentService svc;
    Client c(svc);
    c.create("p", "comparison", 3);

    // Answer before both areas were traversed.
    auto r = c.act("answer", {{"side", "left"}});
    ASSERT_EQ(types(r), std::vector<std::string>{"error"});
    EXPECT_EQ(r[0]["payload"]["code"], "protocol");

    // Adjusting is not part of a comparison trial.
    r = c.act("adjust", {{"button", "increase"}});
    EXPECT_EQ(r[0]["payload"]["code"], "protocol");

    // Stale sequence number.
    r = c.send("pointer_sample", {{"t", 100.0}, {"x", 1.0}, {"y", 1.0}}, 1);
    EXPECT_EQ(r[0]["payload"]["code"], "bad_seq");
    EXPECT_EQ(r[0]["ack"], 1);

    r = c.send("pointer_sample", {{"t", 100.0}, {"x", "far"}, {"y", 1.0}});
    EXPECT_EQ(r[0]["payload"]["code"], "malformed");
    r = c.send("answer", {{"t", 101.0}, {"side", "middle"}});
    EXPECT_EQ(r[0]["payload"]["code"], "malformed");
    r = c.send("render_update", {{"t", 101.0}});
    EXPECT_EQ(r[0]["payload"]["code"], "malformed");

    r = c.send_raw("{not json");
    ASSERT_EQ(types(r), std::vector<std::string>{"error"});
    EXPECT_EQ(r[0]["payload"]["code"], "malformed");
    r = c.send_raw(R"({"type":"pointer_sample","seq":5,"session":"nope","payload":{"t":0,"x":0,"y":0}})");
    EXPECT_EQ(r[0]["payload"]["code"], "unknown_session");

    // Time going backwards within a trial.
    c.send("pointer_sample", {{"t", 200.0}, {"x", 100.0}, {"y", 210.0}});
    const Session* s = svc.session(c.session());
    const auto logged = s->current()->record().events.size();
    EXPECT_GE(logged, 2u);
    r = c.send("pointer_sample", {{"t", 199.0}, {"x", 101.0}, {"y", 210.0}});
    EXPECT_EQ(r[0]["payload"]["code"], "ordering");
    EXPECT_EQ(s->cursor(), 0u);
    EXPECT_EQ(s->current()->record().events.size(), logged);
}

TEST(Service, ServerSequenceIsPerSessionAndIncreasing)
{
    ExperimentService svc;
    Client a(svc), b(svc);
    a.create("a", "comparison", 1);
    b.create("b", "comparison", 2);
    std::int64_t last = 2;
    for (const auto& r : a.stroke()) {
        EXPECT_EQ(r["seq"].get<std::int64_t>(), last + 1);
        last = r["seq"];
        EXPECT_EQ(r["session"], a.session());
    }
    const auto rb = b.stroke();
    EXPECT_EQ(rb.front()["seq"], 3);
}

TEST(Service, LogBeforeReplyAndReplay)
{
    ExperimentService svc;
    Client c(svc);
    c.create("p", "adjustment", 5);
    const auto before = svc.wire_log().size();
    const auto replies = svc.handle("garbage");
    ASSERT_EQ(svc.wire_log().size(), before + 1 + replies.size());
    EXPECT_TRUE(svc.wire_log()[before].inbound);
    EXPECT_EQ(svc.wire_log()[before].text, "garbage");
    EXPECT_FALSE(svc.wire_log().back().inbound);
    EXPECT_EQ(svc.wire_log().back().text, replies.back());

    for (int i = 0; i < 4; ++i) {
        c.stroke(i % 2 == 0);
        c.act("adjust", {{"button", i % 2 ? "decrease" : "increase"}});
        c.act("adjust", {{"button", "finish"}});
    }

    std::stringstream ss;
    write_wire_log(ss, svc.wire_log());
    const auto log = read_wire_log(ss);
    ASSERT_EQ(log.size(), svc.wire_log().size());
    const auto report = replay_wire_log(log, ServiceConfig{});
    EXPECT_TRUE(report.identical);
    EXPECT_FALSE(report.first_mismatch.has_value());
    EXPECT_GT(report.replies, report.inbound);

    // A tampered reply is detected.
    auto tampered = log;
    for (auto& e : tampered) {
        if (!e.inbound && e.text.find("render_update") != std::string::npos) {
            e.text.back() = ' ';
            break;
        }
    }
    EXPECT_FALSE(replay_wire_log(tampered, ServiceConfig{}).identical);
}

TEST(Service, ReadWireLogRejectsBadLines)
{
    std::istringstream bad(R"({"dir":"sideways","text":"x"})" "\n");
    EXPECT_THROW(read_wire_log(bad), DomainError);
    std::istringstream junk("nope\n");
    EXPECT_THROW(read_wire_log(junk), DomainError);
}

TEST(Service, ExportAndAnalyse)
{
    ExperimentService svc;
    Client c(svc);
    c.create("p", "comparison", 8);
    const auto dir = scratch("export");
    EXPECT_THROW(svc.export_logs(c.session(), dir), ProtocolError);
    EXPECT_THROW(svc.export_logs("s0", dir), ProtocolError);

    c.play_all();
    EXPECT_TRUE(c.state()["finished"].get<bool>());
    const auto r = c.act("answer", {{"side", "left"}});
    EXPECT_EQ(r[0]["payload"]["code"], "protocol");

    const auto files = svc.export_logs(c.session(), dir);
    const auto rows = read_summary_csv(files.summary);
    ASSERT_EQ(rows.size(), 120u);
    for (const auto& row : rows) {
        EXPECT_TRUE(*row.chose_oscillatory());
    }
    std::ifstream events(files.events);
    EXPECT_EQ(read_event_log(events).size(), 120u);

    const auto analysis = analyze_comparison(rows);
    for (const auto& cell : analysis.cells) {
        EXPECT_EQ(cell.chose_oscillatory, 10);
        EXPECT_EQ(cell.trials, 10);
    }
    fs::remove_all(dir);
}

TEST(Service, DataDirectoryGetsWireLogAndSessionExport)
{
    const auto dir = scratch("data");
    ServiceConfig cfg;
    cfg.data_dir = dir;
    std::string id;
    {
        ExperimentService svc(cfg);
        Client c(svc);
        c.create("p", "adjust_wavelength", 4);
        id = c.session();
        c.play_all();
    }
    EXPECT_TRUE(fs::exists(dir / "sessions" / (id + ".csv")));
    EXPECT_TRUE(fs::exists(dir / "sessions" / (id + ".jsonl")));
    std::ifstream wire(dir / "wire.jsonl");
    const auto log = read_wire_log(wire);
    EXPECT_TRUE(replay_wire_log(log, ServiceConfig{}).identical);
    EXPECT_EQ(read_summary_csv(dir / "sessions" / (id + ".csv")).size(), 30u);
    fs::remove_all(dir);
}

TEST(WebSocket, LiveRoundTrip)
{
    namespace beast = boost::beast;
    namespace http = beast::http;
    namespace websocket = beast::websocket;
    using tcp = boost::asio::ip::tcp;

    ExperimentService svc;
    std::promise<unsigned short> port_promise;
    std::thread server([&] {
        run_websocket_server(svc, "127.0.0.1", 0, 2, [&](unsigned short p) { port_promise.set_value(p); });
    });
    const unsigned short port = port_promise.get_future().get();

    boost::asio::io_context ioc;
    tcp::resolver resolver(ioc);
    const auto endpoints = resolver.resolve("127.0.0.1", std::to_string(port));

    {
        tcp::socket sock(ioc);
        boost::asio::connect(sock, endpoints);
        http::request<http::empty_body> req(http::verb::get, "/health", 11);
        req.set(http::field::host, "127.0.0.1");
        http::write(sock, req);
        beast::flat_buffer buf;
        http::response<http::string_body> res;
        http::read(sock, buf, res);
        EXPECT_EQ(res.result(), http::status::ok);
        EXPECT_EQ(json::parse(res.body())["websocket"], "/ws");
    }

    websocket::stream<tcp::socket> ws(ioc);
    boost::asio::connect(ws.next_layer(), endpoints);
    ws.handshake("127.0.0.1", "/ws");
    ws.text(true);
    const json create{{"type", "session_create"},
                      {"seq", 1},
                      {"payload", {{"participant", "ws"}, {"protocol", "comparison"}, {"seed", 1}}}};
    ws.write(boost::asio::buffer(create.dump()));
    std::vector<json> replies;
    for (int i = 0; i < 2; ++i) {
        beast::flat_buffer buf;
        ws.read(buf);
        replies.push_back(json::parse(beast::buffers_to_string(buf.data())));
    }
    EXPECT_EQ(types(replies), (std::vector<std::string>{"session_created", "trial_state"}));
    const std::string id = replies[0]["session"];
    const json sample{{"type", "pointer_sample"},
                      {"seq", 2},
                      {"session", id},
                      {"payload", {{"t", 0.0}, {"x", 100.0}, {"y", 210.0}}}};
    ws.write(boost::asio::buffer(sample.dump()));
    beast::flat_buffer buf;
    ws.read(buf);
    EXPECT_EQ(json::parse(beast::buffers_to_string(buf.data()))["type"], "render_update");
    ws.close(websocket::close_code::normal);

    server.join();
    EXPECT_EQ(svc.session_ids(), std::vector<std::string>{id});
}
