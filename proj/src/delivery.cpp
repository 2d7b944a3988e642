#include "imcp/delivery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "imcp/metrics.hpp"

namespace imcp {

int payload_kind_rank(PayloadKind kind) {
    return static_cast<int>(kind); // enum values are declared in rank order
}

TransmissionPlan plan_hierarchical(std::span<const Payload> payloads) {
    if (payloads.empty()) throw ValidationError("cannot plan an empty payload list");
    std::vector<std::size_t> order(payloads.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (payloads[a].byte_size() != payloads[b].byte_size())
            return payloads[a].byte_size() < payloads[b].byte_size();
        return payload_kind_rank(payloads[a].kind) < payload_kind_rank(payloads[b].kind);
    });
    TransmissionPlan plan;
    plan.payloads.reserve(payloads.size());
    for (std::size_t i : order) plan.payloads.push_back(payloads[i]);
    return plan;
}

TransmissionPlan plan_raw_first(std::span<const Payload> payloads) {
    if (payloads.empty()) throw ValidationError("cannot plan an empty payload list");
    TransmissionPlan plan;
    plan.payloads.reserve(payloads.size());
    for (const Payload& p : payloads)
        if (p.kind == PayloadKind::raw_image) plan.payloads.push_back(p);
    for (const Payload& p : payloads)
        if (p.kind != PayloadKind::raw_image) plan.payloads.push_back(p);
    return plan;
}

TransmissionPlan plan_as_given(std::span<const Payload> payloads) {
    if (payloads.empty()) throw ValidationError("cannot plan an empty payload list");
    return TransmissionPlan{{payloads.begin(), payloads.end()}};
}

DeliveryTimeline simulate(const TransmissionPlan& plan, const LinkModel& link) {
    if (plan.payloads.empty()) throw ValidationError("cannot simulate an empty plan");
    if (!(link.bytes_per_second > 0.0))
        throw ValidationError("link bandwidth must be positive");
    if (!(link.latency_s >= 0.0))
        throw ValidationError("link latency must be non-negative");

    DeliveryTimeline timeline;
    timeline.entries.reserve(plan.payloads.size());
    std::uint64_t cumulative = 0;
    double prev_arrival = 0.0;
    for (std::size_t i = 0; i < plan.payloads.size(); ++i) {
        const Payload& p = plan.payloads[i];
        if (p.byte_size() == 0)
            throw ValidationError("payload " + std::to_string(i) + " is empty");
        cumulative += p.byte_size();
        TimelineEntry e;
        e.index = i;
        e.kind = p.kind;
        e.byte_size = p.byte_size();
        e.start_s = prev_arrival;
        e.arrival_s = static_cast<double>(i + 1) * link.latency_s +
                      static_cast<double>(cumulative) / link.bytes_per_second;
        e.cumulative_bytes = cumulative;
        prev_arrival = e.arrival_s;
        timeline.entries.push_back(e);
    }
    timeline.total_duration_s = prev_arrival;
    return timeline;
}

bool is_intelligence_kind(PayloadKind kind) {
    switch (kind) {
    case PayloadKind::caption:
    case PayloadKind::cutout:
    case PayloadKind::ae_embedding:
    case PayloadKind::lossy_image:
        return true;
    case PayloadKind::lossless_image:
    case PayloadKind::raw_image:
        return false;
    }
    throw ValidationError("unknown payload kind value");
}

double time_to_first_intelligence(const DeliveryTimeline& timeline) {
    for (const TimelineEntry& e : timeline.entries)
        if (is_intelligence_kind(e.kind)) return e.arrival_s;
    throw ValidationError("no intelligence payload");
}

PolicyReport compare_policies(std::span<const Payload> payloads, const LinkModel& link) {
    const auto measure = [&](const char* name, const TransmissionPlan& plan) {
        const DeliveryTimeline t = simulate(plan, link);
        PolicyOutcome row;
        row.policy = name;
        row.total_duration_s = t.total_duration_s;
        try {
            row.time_to_first_intelligence_s = time_to_first_intelligence(t);
        } catch (const ValidationError&) {
            row.time_to_first_intelligence_s = std::numeric_limits<double>::infinity();
        }
        return row;
    };
    PolicyReport report;
    report.rows.push_back(measure("hierarchical", plan_hierarchical(payloads)));
    report.rows.push_back(measure("raw_first", plan_raw_first(payloads)));
    report.rows.push_back(measure("as_given", plan_as_given(payloads)));
    return report;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> tokens;
    std::string token;
    std::istringstream in(line);
    while (std::getline(in, token, ',')) tokens.push_back(token);
    if (!line.empty() && line.back() == ',') tokens.emplace_back();
    return tokens;
}

double parse_double_token(const std::string& token, std::size_t line_no) {
    if (token == "inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw DecodeError("CSV line " + std::to_string(line_no) + ": bad number '" + token + "'");
    }
}

std::uint64_t parse_u64_token(const std::string& token, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw DecodeError("CSV line " + std::to_string(line_no) + ": bad count '" + token + "'");
    }
}

} // namespace

std::string timeline_to_csv(const DeliveryTimeline& timeline) {
    std::string out = "index,kind,byte_size,start_s,arrival_s,cumulative_bytes\n";
    for (const TimelineEntry& e : timeline.entries) {
        out += std::to_string(e.index) + ",";
        out += std::string(payload_kind_name(e.kind)) + ",";
        out += std::to_string(e.byte_size) + ",";
        out += format_shortest(e.start_s) + ",";
        out += format_shortest(e.arrival_s) + ",";
        out += std::to_string(e.cumulative_bytes) + "\n";
    }
    return out;
}

DeliveryTimeline timeline_from_csv(std::string_view csv_text) {
    std::istringstream in{std::string(csv_text)};
    std::string line;
    DeliveryTimeline timeline;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "index,kind,byte_size,start_s,arrival_s,cumulative_bytes")
                throw DecodeError("CSV line " + std::to_string(line_no) +
                                  ": unexpected timeline header '" + line + "'");
            saw_header = true;
            continue;
        }
        const auto tokens = split_csv_line(line);
        if (tokens.size() != 6)
            throw DecodeError("CSV line " + std::to_string(line_no) + ": expected 6 columns, got " +
                              std::to_string(tokens.size()));
        TimelineEntry e;
        e.index = parse_u64_token(tokens[0], line_no);
        try {
            e.kind = payload_kind_from_name(tokens[1]);
        } catch (const ValidationError& err) {
            throw DecodeError("CSV line " + std::to_string(line_no) + ": " + err.what());
        }
        e.byte_size = parse_u64_token(tokens[2], line_no);
        e.start_s = parse_double_token(tokens[3], line_no);
        e.arrival_s = parse_double_token(tokens[4], line_no);
        e.cumulative_bytes = parse_u64_token(tokens[5], line_no);
        timeline.entries.push_back(e);
    }
    if (!timeline.entries.empty()) timeline.total_duration_s = timeline.entries.back().arrival_s;
    return timeline;
}

std::string policy_report_to_csv(const PolicyReport& report) {
    std::string out = "policy,time_to_first_intelligence_s,total_duration_s\n";
    for (const PolicyOutcome& row : report.rows) {
        out += row.policy + ",";
        out += format_shortest(row.time_to_first_intelligence_s) + ",";
        out += format_shortest(row.total_duration_s) + "\n";
    }
    return out;
}

PolicyReport policy_report_from_csv(std::string_view csv_text) {
    std::istringstream in{std::string(csv_text)};
    std::string line;
    PolicyReport report;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "policy,time_to_first_intelligence_s,total_duration_s")
                throw DecodeError("CSV line " + std::to_string(line_no) +
                                  ": unexpected policy header '" + line + "'");
            saw_header = true;
            continue;
        }
        const auto tokens = split_csv_line(line);
        if (tokens.size() != 3)
            throw DecodeError("CSV line " + std::to_string(line_no) + ": expected 3 columns, got " +
                              std::to_string(tokens.size()));
        PolicyOutcome row;
        row.policy = tokens[0];
        row.time_to_first_intelligence_s = parse_double_token(tokens[1], line_no);
        row.total_duration_s = parse_double_token(tokens[2], line_no);
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace imcp
