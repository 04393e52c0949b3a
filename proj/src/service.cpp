#include "pseudohaptic/service.hpp"

#include "pseudohaptic/errors.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace pseudohaptic {

using nlohmann::json;

namespace {

constexpr std::array<MessageType, 10> kAllTypes{
    MessageType::session_create, MessageType::session_created, MessageType::trial_state,
    MessageType::pointer_sample, MessageType::render_update,   MessageType::signal_update,
    MessageType::answer,         MessageType::adjust,          MessageType::trial_complete,
    MessageType::error};

std::string hex_id(std::uint64_t v)
{
    char buf[24];
    std::snprintf(buf, sizeof buf, "s%016" PRIx64, v);
    return buf;
}

// Error replies carry a short machine-readable code next to the message.
struct ClientFault {
    std::string code;
    std::string message;
};

const json& require(const json& obj, const char* key)
{
    if (!obj.is_object() || !obj.contains(key)) {
        throw ClientFault{"malformed", std::string("missing field '") + key + "'"};
    }
    return obj.at(key);
}

double require_number(const json& obj, const char* key)
{
    const json& v = require(obj, key);
    if (!v.is_number()) {
        throw ClientFault{"malformed", std::string("field '") + key + "' must be a number"};
    }
    return v.get<double>();
}

std::string require_string(const json& obj, const char* key)
{
    const json& v = require(obj, key);
    if (!v.is_string()) {
        throw ClientFault{"malformed", std::string("field '") + key + "' must be a string"};
    }
    return v.get<std::string>();
}

std::int64_t require_seq(const json& msg)
{
    const json& v = require(msg, "seq");
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ClientFault{"malformed", "seq must be a non-negative integer"};
    }
    return v.get<std::int64_t>();
}

json signal_json(const SignalPayload& sig, const VoltageMap& vmap)
{
    return {{"area", to_string(sig.area)},
            {"amplitude", sig.config.amplitude},
            {"lambda", sig.config.lambda},
            {"frequency", sig.frequency},
            {"multiplier", sig.multiplier},
            {"phase_reset", sig.phase_reset},
            {"vpp", amplitude_to_vpp(sig.config.amplitude, vmap)}};
}

SignalPayload silence()
{
    SignalPayload s;
    s.area = Area::none;
    s.config.amplitude = 0.0;
    s.frequency = 0.0;
    return s;
}

}  // namespace

std::string_view to_string(MessageType t)
{
    switch (t) {
    case MessageType::session_create: return "session_create";
    case MessageType::session_created: return "session_created";
    case MessageType::trial_state: return "trial_state";
    case MessageType::pointer_sample: return "pointer_sample";
    case MessageType::render_update: return "render_update";
    case MessageType::signal_update: return "signal_update";
    case MessageType::answer: return "answer";
    case MessageType::adjust: return "adjust";
    case MessageType::trial_complete: return "trial_complete";
    case MessageType::error: return "error";
    }
    return "?";
}

MessageType parse_message_type(std::string_view s)
{
    for (auto t : kAllTypes) {
        if (s == to_string(t)) {
            return t;
        }
    }
    throw ProtocolError("unknown message type '" + std::string(s) + "'");
}

ExperimentService::ExperimentService(ServiceConfig cfg) : m_cfg(std::move(cfg))
{
    if (m_cfg.data_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*m_cfg.data_dir, ec);
        if (ec) {
            throw StorageError("cannot create " + m_cfg.data_dir->string() + ": " + ec.message());
        }
        const auto path = *m_cfg.data_dir / "wire.jsonl";
        m_log_file.open(path, std::ios::binary | std::ios::app);
        if (!m_log_file) {
            throw StorageError("cannot open wire log " + path.string());
        }
    }
}

void ExperimentService::append_log(bool inbound, const std::string& text)
{
    m_log.push_back({inbound, text});
    if (m_log_file.is_open()) {
        m_log_file << json{{"dir", inbound ? "in" : "out"}, {"text", text}}.dump() << '\n';
        m_log_file.flush();
    }
}

json ExperimentService::envelope(MessageType type, SessionState* st, const std::string& session_id,
                                 std::optional<std::int64_t> ack, json payload)
{
    json msg;
    msg["type"] = to_string(type);
    msg["seq"] = st ? ++st->server_seq : ++m_sessionless_seq;
    if (!session_id.empty()) {
        msg["session"] = session_id;
    }
    if (ack) {
        msg["ack"] = *ack;
    }
    msg["payload"] = std::move(payload);
    return msg;
}

json ExperimentService::trial_state(const SessionState& st) const
{
    const Session& s = st.session;
    json p;
    p["total"] = s.schedule().size();
    p["completed"] = s.records().size();
    const TrialRunner* r = s.current();
    if (!r) {
        p["finished"] = true;
        return p;
    }
    p["finished"] = false;
    p["trial"] = r->record().index;
    p["study"] = to_string(r->spec().study);
    p["alpha"] = r->spec().alpha_osc;
    p["lambda"] = r->spec().lambda;
    p["oscillatory_side"] = to_string(r->spec().oscillatory_side);
    p["phase"] = to_string(r->phase());
    p["traversed_left"] = r->traversed(Side::left);
    p["traversed_right"] = r->traversed(Side::right);
    p["s"] = r->staircase().s;
    p["multiplier"] = staircase_multiplier(r->staircase());
    return p;
}

std::vector<std::string> ExperimentService::handle(const std::string& text)
{
    std::lock_guard lock(m_mutex);
    append_log(true, text);

    std::vector<json> replies;
    json msg = json::parse(text, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) {
        replies.push_back(envelope(MessageType::error, nullptr, "", std::nullopt,
                                   {{"code", "malformed"}, {"message", "message is not a JSON object"}}));
    } else {
        process(msg, replies);
    }

    std::vector<std::string> out;
    out.reserve(replies.size());
    for (const auto& r : replies) {
        out.push_back(r.dump());
        append_log(false, out.back());
    }
    return out;
}

void ExperimentService::process(const json& msg, std::vector<json>& replies)
{
    std::optional<std::int64_t> ack;
    std::string session_id;
    SessionState* st = nullptr;
    try {
        ack = require_seq(msg);
        const MessageType type = [&] {
            try {
                return parse_message_type(require_string(msg, "type"));
            } catch (const ProtocolError& e) {
                throw ClientFault{"malformed", e.what()};
            }
        }();
        if (type == MessageType::session_create) {
            on_create(msg, replies);
            return;
        }
        if (type != MessageType::pointer_sample && type != MessageType::answer && type != MessageType::adjust) {
            throw ClientFault{"malformed", "'" + std::string(to_string(type)) + "' is a server message"};
        }
        session_id = require_string(msg, "session");
        const auto it = m_sessions.find(session_id);
        if (it == m_sessions.end()) {
            const std::string unknown = session_id;
            session_id.clear();
            throw ClientFault{"unknown_session", "no session '" + unknown + "'"};
        }
        st = &it->second;
        if (*ack <= st->last_client_seq) {
            throw ClientFault{"bad_seq", "seq " + std::to_string(*ack) + " is not greater than " +
                                             std::to_string(st->last_client_seq)};
        }
        on_session_message(type, msg, *st, session_id, replies);
        st->last_client_seq = *ack;
    } catch (const ClientFault& f) {
        replies.push_back(envelope(MessageType::error, st, session_id, ack, {{"code", f.code}, {"message", f.message}}));
    } catch (const OrderingError& e) {
        replies.push_back(envelope(MessageType::error, st, session_id, ack, {{"code", "ordering"}, {"message", e.what()}}));
    } catch (const ProtocolError& e) {
        replies.push_back(envelope(MessageType::error, st, session_id, ack, {{"code", "protocol"}, {"message", e.what()}}));
    } catch (const ConfigError& e) {
        replies.push_back(envelope(MessageType::error, st, session_id, ack, {{"code", "malformed"}, {"message", e.what()}}));
    } catch (const DomainError& e) {
        replies.push_back(envelope(MessageType::error, st, session_id, ack, {{"code", "domain"}, {"message", e.what()}}));
    }
}

void ExperimentService::on_create(const json& msg, std::vector<json>& replies)
{
    const std::int64_t seq = msg.at("seq").get<std::int64_t>();
    const json& payload = require(msg, "payload");
    const std::string participant = require_string(payload, "participant");
    if (participant.empty()) {
        throw ClientFault{"malformed", "participant must not be empty"};
    }
    const Protocol protocol = parse_protocol(require_string(payload, "protocol"));

    const std::uint64_t n = m_created;
    std::uint64_t seed = derive_seed(m_cfg.seed, 2 * n + 1);
    if (payload.contains("seed")) {
        if (m_cfg.seed_policy == SeedPolicy::derived) {
            throw ClientFault{"malformed", "this service assigns session seeds; omit 'seed'"};
        }
        if (!payload["seed"].is_number_unsigned()) {
            throw ClientFault{"malformed", "seed must be a non-negative integer"};
        }
        seed = payload["seed"].get<std::uint64_t>();
    }
    const std::string id = hex_id(derive_seed(m_cfg.seed, 2 * n));
    ++m_created;

    auto [it, inserted] = m_sessions.try_emplace(id, Session(participant, protocol, seed, m_cfg.experiment));
    if (!inserted) {
        throw ClientFault{"internal", "session id collision"};
    }
    SessionState& st = it->second;
    st.last_client_seq = seq;
    replies.push_back(envelope(MessageType::session_created, &st, id, seq,
                               {{"session", id},
                                {"participant", participant},
                                {"protocol", to_string(protocol)},
                                {"seed", seed},
                                {"trials", st.session.schedule().size()}}));
    replies.push_back(envelope(MessageType::trial_state, &st, id, seq, trial_state(st)));
}

void ExperimentService::on_session_message(MessageType type, const json& msg, SessionState& st, const std::string& id,
                                           std::vector<json>& replies)
{
    const std::int64_t seq = msg.at("seq").get<std::int64_t>();
    const json& payload = require(msg, "payload");
    const double t = require_number(payload, "t");

    TrialInput input;
    if (type == MessageType::pointer_sample) {
        input = PointerSample{t, require_number(payload, "x"), require_number(payload, "y")};
    } else if (type == MessageType::answer) {
        input = AnswerInput{t, parse_side(require_string(payload, "side"))};
    } else {
        const std::string button = require_string(payload, "button");
        if (button == "finish") {
            input = FinishInput{t};
        } else {
            input = AdjustInput{t, parse_button(button)};
        }
    }

    if (st.session.finished()) {
        throw ProtocolError("session has no remaining trials");
    }
    const TrialPhase phase_before = st.session.current()->phase();
    const std::size_t trial_before = st.session.cursor();
    const StepOutput out = st.session.step(input);

    if (out.render) {
        const auto& r = *out.render;
        const double speed = st.session.current() && st.session.cursor() == trial_before
                                 ? st.session.current()->speed()
                                 : 0.0;
        replies.push_back(envelope(MessageType::render_update, &st, id, seq,
                                   {{"area", to_string(r.area)},
                                    {"x_vis", r.position.x_vis},
                                    {"y_vis", r.position.y_vis},
                                    {"dx", r.position.dx},
                                    {"dy", r.position.dy},
                                    {"speed", speed}}));
    }

    std::optional<SignalPayload> next;
    if (out.signal) {
        const SignalPayload& sig = *out.signal;
        const auto& last = st.last_sent_signal;
        const bool send = !last || sig.phase_reset || last->area != sig.area || last->config != sig.config ||
                          last->multiplier != sig.multiplier ||
                          std::abs(last->frequency - sig.frequency) > m_cfg.frequency_update_hz;
        if (send) {
            next = sig;
        }
    } else if (out.render && st.last_sent_signal && st.last_sent_signal->area != Area::none) {
        next = silence();
    }
    if (next) {
        replies.push_back(envelope(MessageType::signal_update, &st, id, seq, signal_json(*next, m_cfg.experiment.voltage)));
        st.last_sent_signal = next;
    }

    if (out.trial_complete) {
        const TrialRecord& rec = st.session.records().back();
        json p{{"trial", rec.index}};
        if (rec.selected_side) {
            p["selected_side"] = to_string(*rec.selected_side);
            p["chose_oscillatory"] = *rec.chose_oscillatory();
        }
        if (rec.final_multiplier) {
            p["final_multiplier"] = *rec.final_multiplier;
            p["final_vpp_ratio"] = *rec.final_vpp_ratio();
        }
        replies.push_back(envelope(MessageType::trial_complete, &st, id, seq, std::move(p)));
        // The client silences output on trial_complete.
        st.last_sent_signal.reset();
        replies.push_back(envelope(MessageType::trial_state, &st, id, seq, trial_state(st)));

        if (st.session.finished() && m_cfg.data_dir && !st.exported) {
            try {
                export_trial_logs(st.session.records(), *m_cfg.data_dir / "sessions", id);
                st.exported = true;
            } catch (const StorageError& e) {
                replies.push_back(envelope(MessageType::error, &st, id, seq,
                                           {{"code", "storage"}, {"message", e.what()}, {"retryable", true}}));
            }
        }
    } else if (type == MessageType::adjust) {
        replies.push_back(envelope(MessageType::trial_state, &st, id, seq, trial_state(st)));
    } else if (st.session.current() && st.session.current()->phase() != phase_before) {
        replies.push_back(envelope(MessageType::trial_state, &st, id, seq, trial_state(st)));
    }
}

ExportedFiles ExperimentService::export_logs(const std::string& session_id, const std::filesystem::path& dir) const
{
    std::lock_guard lock(m_mutex);
    const auto it = m_sessions.find(session_id);
    if (it == m_sessions.end()) {
        throw ProtocolError("no session '" + session_id + "'");
    }
    return export_trial_logs(it->second.session.records(), dir, session_id);
}

std::vector<std::string> ExperimentService::session_ids() const
{
    std::lock_guard lock(m_mutex);
    std::vector<std::string> ids;
    for (const auto& [id, st] : m_sessions) {
        ids.push_back(id);
    }
    return ids;
}

const Session* ExperimentService::session(const std::string& id) const
{
    std::lock_guard lock(m_mutex);
    const auto it = m_sessions.find(id);
    return it == m_sessions.end() ? nullptr : &it->second.session;
}

void write_wire_log(std::ostream& os, const std::vector<WireLogEntry>& log)
{
    for (const auto& e : log) {
        os << json{{"dir", e.inbound ? "in" : "out"}, {"text", e.text}}.dump() << '\n';
    }
}

std::vector<WireLogEntry> read_wire_log(std::istream& is)
{
    std::vector<WireLogEntry> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty()) {
            continue;
        }
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("dir") || !j.contains("text") ||
            !j["text"].is_string()) {
            throw DomainError("wire log line " + std::to_string(n) + " is malformed");
        }
        const std::string dir = j["dir"].is_string() ? j["dir"].get<std::string>() : "";
        if (dir != "in" && dir != "out") {
            throw DomainError("wire log line " + std::to_string(n) + ": bad direction");
        }
        out.push_back({dir == "in", j["text"].get<std::string>()});
    }
    return out;
}

ReplayReport replay_wire_log(const std::vector<WireLogEntry>& log, ServiceConfig cfg)
{
    cfg.data_dir.reset();
    ExperimentService fresh(std::move(cfg));
    std::vector<std::string> expected;
    std::vector<std::string> actual;
    ReplayReport report;
    for (const auto& e : log) {
        if (e.inbound) {
            ++report.inbound;
            auto replies = fresh.handle(e.text);
            actual.insert(actual.end(), replies.begin(), replies.end());
        } else {
            expected.push_back(e.text);
        }
    }
    report.replies = actual.size();
    const std::size_t common = std::min(expected.size(), actual.size());
    for (std::size_t i = 0; i < common; ++i) {
        if (expected[i] != actual[i]) {
            report.first_mismatch = i;
            break;
        }
    }
    if (!report.first_mismatch && expected.size() != actual.size()) {
        report.first_mismatch = common;
    }
    report.identical = !report.first_mismatch;
    return report;
}

}  // namespace pseudohaptic
