#pragma once

#include "pseudohaptic/experiment.hpp"
#include "pseudohaptic/trial_log.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pseudohaptic {

// Wire protocol. Every message is one JSON object:
//   {"type": str, "seq": int, "session": str, "ack": int, "payload": {...}}
// Client messages carry type/seq/payload and (except session_create) the
// session id. Server messages carry their own per-session seq and, when
// answering a client message, "ack" set to that message's seq.
enum class MessageType {
    session_create,
    session_created,
    trial_state,
    pointer_sample,
    render_update,
    signal_update,
    answer,
    adjust,
    trial_complete,
    error
};

std::string_view to_string(MessageType t);
MessageType parse_message_type(std::string_view s);  // throws ProtocolError

enum class SeedPolicy {
    client_or_derived,  // use the client's "seed" when given, else derive one
    derived,            // always derive; a client seed is an error
};

struct ServiceConfig {
    std::uint64_t seed = 1;
    SeedPolicy seed_policy = SeedPolicy::client_or_derived;
    ExperimentConfig experiment;
    // When set: the wire log is appended to <data_dir>/wire.jsonl and each
    // session's trial logs are exported to <data_dir>/sessions/ once it
    // finishes its schedule.
    std::optional<std::filesystem::path> data_dir;
    // Minimum frequency change that triggers a signal_update on its own.
    double frequency_update_hz = 0.1;
};

// One line of the wire log.
struct WireLogEntry {
    bool inbound = true;
    std::string text;
};

class ExperimentService {
public:
    explicit ExperimentService(ServiceConfig cfg = {});

    // Processes one client message and returns the serialized replies in
    // order. The inbound text and then every reply are appended to the wire
    // log before this returns. Never throws for bad client input; such input
    // produces an "error" reply and leaves the session unchanged.
    std::vector<std::string> handle(const std::string& text);

    // Writes <dir>/<session>.jsonl and <dir>/<session>.csv. Throws
    // ProtocolError for an unknown session or one without completed trials,
    // StorageError on I/O failure (the session is unaffected and the call can
    // be retried).
    ExportedFiles export_logs(const std::string& session_id, const std::filesystem::path& dir) const;

    const std::vector<WireLogEntry>& wire_log() const { return m_log; }
    std::vector<std::string> session_ids() const;
    const Session* session(const std::string& id) const;

private:
    struct SessionState {
        explicit SessionState(Session s) : session(std::move(s)) {}

        Session session;
        std::int64_t last_client_seq = 0;
        std::int64_t server_seq = 0;
        std::optional<SignalPayload> last_sent_signal;
        bool exported = false;
    };

    void process(const nlohmann::json& msg, std::vector<nlohmann::json>& replies);
    void on_create(const nlohmann::json& msg, std::vector<nlohmann::json>& replies);
    void on_session_message(MessageType type, const nlohmann::json& msg, SessionState& st, const std::string& id,
                            std::vector<nlohmann::json>& replies);
    nlohmann::json envelope(MessageType type, SessionState* st, const std::string& session_id,
                            std::optional<std::int64_t> ack, nlohmann::json payload);
    nlohmann::json trial_state(const SessionState& st) const;
    void append_log(bool inbound, const std::string& text);

    ServiceConfig m_cfg;
    std::map<std::string, SessionState> m_sessions;
    std::uint64_t m_created = 0;
    std::int64_t m_sessionless_seq = 0;
    std::vector<WireLogEntry> m_log;
    std::ofstream m_log_file;
    mutable std::mutex m_mutex;
};

// Wire log persistence: one {"dir": "in"|"out", "text": str} object per line.
void write_wire_log(std::ostream& os, const std::vector<WireLogEntry>& log);
std::vector<WireLogEntry> read_wire_log(std::istream& is);  // throws DomainError

struct ReplayReport {
    bool identical = false;
    std::size_t inbound = 0;
    std::size_t replies = 0;
    // Index into the reply stream of the first difference, if any.
    std::optional<std::size_t> first_mismatch;
};

// Feeds every inbound message of `log` to a fresh service built from `cfg`
// (without a data directory) and compares the replies with the logged ones.
ReplayReport replay_wire_log(const std::vector<WireLogEntry>& log, ServiceConfig cfg);

// Blocking WebSocket server: clients connect to ws://host:port/ws and
// exchange one JSON message per text frame. Plain HTTP requests get a short
// status document. Returns when `stop_after` connections have closed (0 runs
// forever). Port 0 binds an ephemeral port; `on_listen` receives the bound
// port once the socket is listening.
void run_websocket_server(ExperimentService& service, const std::string& address, unsigned short port,
                          std::size_t stop_after = 0,
                          const std::function<void(unsigned short)>& on_listen = {});

}  // namespace pseudohaptic
