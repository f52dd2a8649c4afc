#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "navscale/geokit.hpp"
#include "navscale/pose.hpp"

namespace navscale {

struct WheelRpm {
  double left{0.0};   // rev/min
  double right{0.0};  // rev/min

  friend bool operator==(const WheelRpm&, const WheelRpm&) = default;
};

/// One timestamped log record. Every sensor channel may be missing.
/// Wheel RPMs describe the motion over the interval that follows `t`.
struct EpisodeSample {
  double t{0.0};
  std::optional<geokit::GeoPoint> gps;
  std::optional<double> heading;  // rad, CCW from east
  std::optional<WheelRpm> wheel_rpm;
  std::optional<Command> command;
  /// Opaque handle to the camera payload (a frame path in real logs).
  std::optional<std::string> obs_ref;

  [[nodiscard]] bool complete() const { return gps && heading && wheel_rpm && command; }

  friend bool operator==(const EpisodeSample&, const EpisodeSample&) = default;
};

/// A teleoperation log: samples strictly increasing in time.
struct RawEpisode {
  std::string id;
  std::vector<EpisodeSample> samples;
  double native_rate_hz{10.0};

  [[nodiscard]] double duration_s() const {
    return samples.size() < 2 ? 0.0 : samples.back().t - samples.front().t;
  }

  friend bool operator==(const RawEpisode&, const RawEpisode&) = default;
};

/// Throws std::invalid_argument if timestamps are not strictly increasing.
void validate_episode(const RawEpisode& e);

/// A complete episode resampled on a uniform grid.
struct AlignedSeries {
  double dt{0.25};
  std::vector<double> t;
  std::vector<geokit::GeoPoint> gps;
  std::vector<double> heading;
  std::vector<WheelRpm> wheel_rpm;
  std::vector<Command> command;
  std::vector<std::string> obs_ref;  // empty strings when absent

  [[nodiscard]] std::size_t size() const { return t.size(); }
};

/// JSON-lines codec: one episode per line. Unknown fields are ignored.
RawEpisode parse_episode_json(const std::string& line);
std::string episode_to_json(const RawEpisode& e);
std::vector<RawEpisode> read_episodes_jsonl(std::istream& in);
void write_episodes_jsonl(std::ostream& out, const std::vector<RawEpisode>& episodes);

}  // namespace navscale
