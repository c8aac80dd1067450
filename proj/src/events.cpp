#include "timebin/events.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace timebin {

const char* detector_name(Detector d) noexcept { return d == Detector::alice ? "alice" : "bob"; }
const char* origin_name(Origin o) noexcept { return o == Origin::photon ? "photon" : "dark"; }

void write_event_stream(std::ostream& out, const EventStream& stream) {
    out << "# timebin-lab events v1\n";
    out << "# config " << to_json(stream.config, -1) << "\n";
    out << "# columns time_ps detector origin pulse_index bin_index\n";
    for (const DetectionEvent& e : stream.events) {
        out << e.time_ps << ' ' << detector_name(e.detector) << ' ' << origin_name(e.origin) << ' '
            << e.pulse_index << ' ' << e.bin_index << '\n';
    }
}

void write_event_stream_file(const std::string& path, const EventStream& stream) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write event stream to '" + path + "'");
    write_event_stream(out, stream);
}

EventStream read_event_stream(std::istream& in) {
    EventStream stream;
    bool have_config = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            static const std::string config_tag = "# config ";
            if (line.rfind(config_tag, 0) == 0) {
                stream.config = config_from_json(line.substr(config_tag.size()));
                have_config = true;
            }
            continue;
        }
        std::istringstream fields(line);
        DetectionEvent e;
        std::string detector, origin;
        long long bin = 0;
        if (!(fields >> e.time_ps >> detector >> origin >> e.pulse_index >> bin))
            throw std::runtime_error("malformed event line: '" + line + "'");
        if (detector == "alice")
            e.detector = Detector::alice;
        else if (detector == "bob")
            e.detector = Detector::bob;
        else
            throw std::runtime_error("unknown detector '" + detector + "'");
        if (origin == "photon")
            e.origin = Origin::photon;
        else if (origin == "dark")
            e.origin = Origin::dark;
        else
            throw std::runtime_error("unknown origin '" + origin + "'");
        e.bin_index = static_cast<int>(bin);
        stream.events.push_back(e);
    }
    if (!have_config) throw std::runtime_error("event stream is missing the config header");
    return stream;
}

EventStream read_event_stream_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read event stream from '" + path + "'");
    return read_event_stream(in);
}

}  // namespace timebin
