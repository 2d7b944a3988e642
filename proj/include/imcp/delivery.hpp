#ifndef IMCP_DELIVERY_HPP
#define IMCP_DELIVERY_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imcp/payloads.hpp"

namespace imcp {

// Serial FIFO link: constant throughput in bytes/second plus a fixed
// per-message setup latency. No loss, no jitter.
struct LinkModel {
    double bytes_per_second = 0.0;
    double latency_s = 0.0;
};

struct TransmissionPlan {
    std::vector<Payload> payloads;
};

struct TimelineEntry {
    std::size_t index = 0; // position in the transmitted order
    PayloadKind kind = PayloadKind::caption;
    std::uint64_t byte_size = 0;
    double start_s = 0.0;
    double arrival_s = 0.0;
    std::uint64_t cumulative_bytes = 0;
};

struct DeliveryTimeline {
    std::vector<TimelineEntry> entries;
    double total_duration_s = 0.0;
};

// Priority rank used for size ties; smaller transmits first.
int payload_kind_rank(PayloadKind kind);

// Stable sort by (byte_size, kind rank, input index): the smallest useful
// payloads lead and the raw image trails.
TransmissionPlan plan_hierarchical(std::span<const Payload> payloads);

// Baseline orderings for comparison.
TransmissionPlan plan_raw_first(std::span<const Payload> payloads);
TransmissionPlan plan_as_given(std::span<const Payload> payloads);

// Serial transmission: arrival_i = start_i + latency + size_i / bandwidth and
// start_{i+1} = arrival_i. Arrivals are computed from cumulative byte counts
// in one division each, so exact-ratio cases come out exact in double.
DeliveryTimeline simulate(const TransmissionPlan& plan, const LinkModel& link);

// Kinds that carry actionable content: caption, cutout, ae_embedding,
// lossy_image. Lossless/raw image payloads do not qualify.
bool is_intelligence_kind(PayloadKind kind);

// Arrival time of the first intelligence payload; throws ValidationError
// ("no intelligence payload") when none qualifies.
double time_to_first_intelligence(const DeliveryTimeline& timeline);

struct PolicyOutcome {
    std::string policy;
    double time_to_first_intelligence_s = 0.0; // +infinity when none qualifies
    double total_duration_s = 0.0;
};

struct PolicyReport {
    std::vector<PolicyOutcome> rows;
};

// Runs hierarchical, raw_first and as_given over the same payload set.
PolicyReport compare_policies(std::span<const Payload> payloads, const LinkModel& link);

// CSV: index,kind,byte_size,start_s,arrival_s,cumulative_bytes
// Times use shortest round-trip formatting, so parse(format(t)) == t.
std::string timeline_to_csv(const DeliveryTimeline& timeline);
DeliveryTimeline timeline_from_csv(std::string_view csv_text);

// CSV: policy,time_to_first_intelligence_s,total_duration_s
std::string policy_report_to_csv(const PolicyReport& report);
PolicyReport policy_report_from_csv(std::string_view csv_text);

} // namespace imcp

#endif
