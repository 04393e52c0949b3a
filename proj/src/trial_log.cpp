#include "pseudohaptic/trial_log.hpp"

#include "pseudohaptic/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pseudohaptic {

using nlohmann::json;

namespace {

Area parse_area(std::string_view s)
{
    if (s == "left") {
        return Area::left;
    }
    if (s == "right") {
        return Area::right;
    }
    if (s == "none") {
        return Area::none;
    }
    throw DomainError("unknown area '" + std::string(s) + "'");
}

EventType parse_event_type(std::string_view s)
{
    for (auto t : {EventType::pointer_sample, EventType::ignored, EventType::render, EventType::signal,
                   EventType::answer, EventType::adjust, EventType::finish, EventType::trial_complete}) {
        if (s == to_string(t)) {
            return t;
        }
    }
    throw DomainError("unknown event type '" + std::string(s) + "'");
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

double parse_double(const std::string& s, std::size_t line_no)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw DomainError("line " + std::to_string(line_no) + ": '" + s + "' is not a number");
    }
    return v;
}

void write_file_atomically(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) {
            throw StorageError("cannot open " + tmp.string() + " for writing");
        }
        os << content;
        os.flush();
        if (!os) {
            throw StorageError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw StorageError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

}  // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// JSONL

json event_to_json(const LoggedEvent& ev)
{
    json payload = json::object();
    switch (ev.type) {
    case EventType::pointer_sample:
    case EventType::ignored: {
        const auto& p = std::get<PointerSample>(ev.payload);
        payload = {{"x", p.x}, {"y", p.y}};
        break;
    }
    case EventType::render: {
        const auto& r = std::get<RenderPayload>(ev.payload);
        payload = {{"area", to_string(r.area)}, {"speed", r.speed},          {"alpha", r.alpha},
                   {"x_vis", r.position.x_vis}, {"y_vis", r.position.y_vis}, {"dx", r.position.dx},
                   {"dy", r.position.dy}};
        break;
    }
    case EventType::signal: {
        const auto& s = std::get<SignalPayload>(ev.payload);
        payload = {{"area", to_string(s.area)},      {"amplitude", s.config.amplitude},
                   {"lambda", s.config.lambda},      {"phase0", s.config.phase0},
                   {"frequency", s.frequency},       {"multiplier", s.multiplier},
                   {"phase_reset", s.phase_reset}};
        break;
    }
    case EventType::answer:
        payload = {{"side", to_string(std::get<AnswerInput>(ev.payload).side)}};
        break;
    case EventType::adjust: {
        const auto& a = std::get<AdjustPayload>(ev.payload);
        payload = {{"button", to_string(a.button)}, {"s", a.s}, {"multiplier", a.multiplier}};
        break;
    }
    case EventType::finish:
        break;
    case EventType::trial_complete: {
        const auto& c = std::get<CompletionPayload>(ev.payload);
        if (c.selected_side) {
            payload["selected_side"] = to_string(*c.selected_side);
        }
        if (c.final_multiplier) {
            payload["final_multiplier"] = *c.final_multiplier;
        }
        break;
    }
    }
    return json{{"t", ev.t}, {"type", to_string(ev.type)}, {"payload", std::move(payload)}};
}

LoggedEvent event_from_json(const json& j)
{
    try {
        LoggedEvent ev;
        ev.t = j.at("t").get<double>();
        ev.type = parse_event_type(j.at("type").get<std::string>());
        const json& p = j.at("payload");
        switch (ev.type) {
        case EventType::pointer_sample:
        case EventType::ignored:
            ev.payload = PointerSample{ev.t, p.at("x").get<double>(), p.at("y").get<double>()};
            break;
        case EventType::render:
            ev.payload = RenderPayload{parse_area(p.at("area").get<std::string>()), p.at("speed").get<double>(),
                                       p.at("alpha").get<double>(),
                                       DistortedPosition{p.at("x_vis").get<std::int64_t>(),
                                                         p.at("y_vis").get<std::int64_t>(), p.at("dx").get<double>(),
                                                         p.at("dy").get<double>()}};
            break;
        case EventType::signal:
            ev.payload = SignalPayload{
                parse_area(p.at("area").get<std::string>()),
                SignalConfig{p.at("amplitude").get<double>(), p.at("lambda").get<double>(), p.at("phase0").get<double>()},
                p.at("frequency").get<double>(), p.at("multiplier").get<double>(), p.at("phase_reset").get<bool>()};
            break;
        case EventType::answer:
            ev.payload = AnswerInput{ev.t, parse_side(p.at("side").get<std::string>())};
            break;
        case EventType::adjust:
            ev.payload = AdjustPayload{parse_button(p.at("button").get<std::string>()), p.at("s").get<double>(),
                                       p.at("multiplier").get<double>()};
            break;
        case EventType::finish:
            ev.payload = FinishInput{ev.t};
            break;
        case EventType::trial_complete: {
            CompletionPayload c;
            if (p.contains("selected_side")) {
                c.selected_side = parse_side(p.at("selected_side").get<std::string>());
            }
            if (p.contains("final_multiplier")) {
                c.final_multiplier = p.at("final_multiplier").get<double>();
            }
            ev.payload = c;
            break;
        }
        }
        return ev;
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed event: ") + e.what());
    } catch (const ConfigError& e) {
        throw DomainError(std::string("malformed event: ") + e.what());
    }
}

json trial_header_json(const TrialRecord& rec)
{
    const double t = rec.events.empty() ? 0.0 : rec.events.front().t;
    return json{{"t", t},
                {"type", "trial_start"},
                {"payload",
                 {{"participant", rec.participant_id},
                  {"trial", rec.index},
                  {"study", to_string(rec.spec.study)},
                  {"alpha", rec.spec.alpha_osc},
                  {"lambda", rec.spec.lambda},
                  {"oscillatory_side", to_string(rec.spec.oscillatory_side)},
                  {"reps_index", rec.spec.reps_index},
                  {"seed", rec.seed}}}};
}

void write_event_log(std::ostream& os, std::span<const TrialRecord> records)
{
    for (const auto& rec : records) {
        os << trial_header_json(rec).dump() << '\n';
        for (const auto& ev : rec.events) {
            os << event_to_json(ev).dump() << '\n';
        }
    }
}

std::vector<TrialRecord> read_event_log(std::istream& is)
{
    std::vector<TrialRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DomainError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (j.value("type", "") == "trial_start") {
            try {
                const json& p = j.at("payload");
                TrialRecord rec;
                rec.participant_id = p.at("participant").get<std::string>();
                rec.index = p.at("trial").get<std::size_t>();
                rec.spec.study = parse_study(p.at("study").get<std::string>());
                rec.spec.alpha_osc = p.at("alpha").get<double>();
                rec.spec.lambda = p.at("lambda").get<double>();
                rec.spec.oscillatory_side = parse_side(p.at("oscillatory_side").get<std::string>());
                rec.spec.reps_index = p.at("reps_index").get<int>();
                rec.seed = p.at("seed").get<std::uint64_t>();
                out.push_back(std::move(rec));
            } catch (const std::exception& e) {
                throw DomainError("line " + std::to_string(line_no) + ": bad trial header: " + e.what());
            }
            continue;
        }
        if (out.empty()) {
            throw DomainError("line " + std::to_string(line_no) + ": event before any trial_start");
        }
        auto& rec = out.back();
        rec.events.push_back(event_from_json(j));
        const auto& ev = rec.events.back();
        if (ev.type == EventType::trial_complete) {
            const auto& c = std::get<CompletionPayload>(ev.payload);
            rec.selected_side = c.selected_side;
            rec.final_multiplier = c.final_multiplier;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

std::optional<bool> TrialSummary::chose_oscillatory() const
{
    if (!response) {
        return std::nullopt;
    }
    return *response == oscillatory_side;
}

TrialSummary summarize(const TrialRecord& rec)
{
    TrialSummary row;
    row.participant = rec.participant_id;
    row.trial = rec.index;
    row.study = rec.spec.study;
    row.alpha = rec.spec.alpha_osc;
    row.lambda = rec.spec.lambda;
    row.oscillatory_side = rec.spec.oscillatory_side;
    row.response = rec.selected_side;
    row.final_multiplier = rec.final_multiplier;
    row.final_vpp_ratio = rec.final_vpp_ratio();
    return row;
}

void write_summary_header(std::ostream& os)
{
    os << kSummaryHeader << '\n';
}

void write_summary_row(std::ostream& os, const TrialSummary& row)
{
    if (row.participant.find_first_of(",\n\r") != std::string::npos) {
        throw DomainError("participant id '" + row.participant + "' cannot be written to CSV");
    }
    os << row.participant << ',' << row.trial << ',' << to_string(row.study) << ',' << format_double(row.alpha)
       << ',' << format_double(row.lambda) << ',' << to_string(row.oscillatory_side) << ',';
    if (row.response) {
        os << to_string(*row.response);
    } else if (row.final_multiplier) {
        os << "adjusted";
    }
    os << ',';
    if (row.final_multiplier) {
        os << format_double(*row.final_multiplier);
    }
    os << ',';
    if (row.final_vpp_ratio) {
        os << format_double(*row.final_vpp_ratio);
    }
    os << '\n';
}

void write_summary_csv(std::ostream& os, std::span<const TrialSummary> rows)
{
    write_summary_header(os);
    for (const auto& row : rows) {
        write_summary_row(os, row);
    }
}

std::vector<TrialSummary> read_summary_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) {
        throw DomainError("summary CSV is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kSummaryHeader) {
        throw DomainError("unexpected summary CSV header: " + line);
    }

    std::vector<TrialSummary> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != 9) {
            throw DomainError("line " + std::to_string(line_no) + ": expected 9 columns, got " +
                              std::to_string(cells.size()));
        }
        try {
            TrialSummary row;
            row.participant = cells[0];
            row.trial = static_cast<std::size_t>(parse_double(cells[1], line_no));
            row.study = parse_study(cells[2]);
            row.alpha = parse_double(cells[3], line_no);
            row.lambda = parse_double(cells[4], line_no);
            row.oscillatory_side = parse_side(cells[5]);
            if (cells[6] == "left" || cells[6] == "right") {
                row.response = parse_side(cells[6]);
            }
            if (!cells[7].empty()) {
                row.final_multiplier = parse_double(cells[7], line_no);
            }
            if (!cells[8].empty()) {
                row.final_vpp_ratio = parse_double(cells[8], line_no);
            }
            rows.push_back(std::move(row));
        } catch (const ConfigError& e) {
            throw DomainError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::vector<TrialSummary> read_summary_csv(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw StorageError("cannot open " + path.string());
    }
    return read_summary_csv(is);
}

ExportedFiles export_trial_logs(std::span<const TrialRecord> records, const std::filesystem::path& dir,
                                const std::string& stem)
{
    std::vector<TrialRecord> done;
    std::copy_if(records.begin(), records.end(), std::back_inserter(done),
                 [](const TrialRecord& r) { return r.completed(); });
    if (done.empty()) {
        throw ProtocolError("nothing to export: no completed trials");
    }

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw StorageError("cannot create " + dir.string() + ": " + ec.message());
    }

    std::ostringstream events;
    write_event_log(events, done);
    std::ostringstream summary;
    write_summary_header(summary);
    for (const auto& rec : done) {
        write_summary_row(summary, summarize(rec));
    }

    ExportedFiles files{dir / (stem + ".jsonl"), dir / (stem + ".csv")};
    write_file_atomically(files.events, events.str());
    write_file_atomically(files.summary, summary.str());
    return files;
}

}  // namespace pseudohaptic
