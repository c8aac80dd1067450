// Detection events and the line-oriented text format that carries them
// between the simulation engine and the analysis stage.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "timebin/config.hpp"

namespace timebin {

enum class Detector : std::uint8_t { alice = 0, bob = 1 };
enum class Origin : std::uint8_t { photon = 0, dark = 1 };

struct DetectionEvent {
    std::int64_t time_ps = 0;
    Detector detector = Detector::alice;
    Origin origin = Origin::photon;
    std::uint64_t pulse_index = 0;  // emitting pulse for photons, containing pulse for darks
    int bin_index = -1;             // 0..2 for photons, -1 for dark counts

    bool operator==(const DetectionEvent&) const = default;
};

// Full result of a simulated run. Events are sorted by time (ties broken
// by detector, then origin); each per-detector subsequence is therefore
// non-decreasing in time. pair_counts holds the ground-truth number of
// pairs emitted by each pulse, for test introspection.
struct EventStream {
    std::vector<DetectionEvent> events;
    ExperimentConfig config;
    std::vector<std::uint8_t> pair_counts;
    std::uint64_t total_pairs = 0;
};

const char* detector_name(Detector d) noexcept;
const char* origin_name(Origin o) noexcept;

// Text format, one event per line:
//   time_ps detector origin pulse_index bin_index
// preceded by '#' header lines that echo the generating configuration.
void write_event_stream(std::ostream& out, const EventStream& stream);
void write_event_stream_file(const std::string& path, const EventStream& stream);

// Parses the text format back. The config echo is restored; ground-truth
// pair counts are not part of the format and stay empty.
EventStream read_event_stream(std::istream& in);
EventStream read_event_stream_file(const std::string& path);

}  // namespace timebin
