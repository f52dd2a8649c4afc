#include <istream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "navscale/episode.hpp"

namespace navscale {
namespace {

using nlohmann::json;

template <typename T>
std::optional<T> optional_number(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

EpisodeSample parse_sample(const json& js) {
  EpisodeSample s;
  s.t = js.at("t").get<double>();
  if (auto it = js.find("gps"); it != js.end() && !it->is_null()) {
    s.gps = geokit::GeoPoint(it->at("lat_deg").get<double>(), it->at("lon_deg").get<double>());
  }
  s.heading = optional_number<double>(js, "heading");
  if (auto it = js.find("wheel_rpm"); it != js.end() && !it->is_null()) {
    s.wheel_rpm = WheelRpm{it->at("left").get<double>(), it->at("right").get<double>()};
  }
  if (auto it = js.find("command"); it != js.end() && !it->is_null()) {
    s.command = Command{it->at("v").get<double>(), it->at("omega").get<double>()};
  }
  if (auto it = js.find("obs_ref"); it != js.end() && it->is_string()) s.obs_ref = it->get<std::string>();
  return s;
}

json sample_to_json(const EpisodeSample& s) {
  json js;
  js["t"] = s.t;
  if (s.gps) js["gps"] = {{"lat_deg", s.gps->lat_deg()}, {"lon_deg", s.gps->lon_deg()}};
  if (s.heading) js["heading"] = *s.heading;
  if (s.wheel_rpm) js["wheel_rpm"] = {{"left", s.wheel_rpm->left}, {"right", s.wheel_rpm->right}};
  if (s.command) js["command"] = {{"v", s.command->v}, {"omega", s.command->omega}};
  if (s.obs_ref) js["obs_ref"] = *s.obs_ref;
  return js;
}

}  // namespace

void validate_episode(const RawEpisode& e) {
  for (std::size_t i = 1; i < e.samples.size(); ++i) {
    if (!(e.samples[i].t > e.samples[i - 1].t)) {
      throw std::invalid_argument(
          fmt::format("episode '{}': timestamps not strictly increasing at sample {}", e.id, i));
    }
  }
}

RawEpisode parse_episode_json(const std::string& line) {
  const json js = json::parse(line);
  RawEpisode e;
  e.id = js.at("id").get<std::string>();
  e.native_rate_hz = js.value("native_rate_hz", 10.0);
  for (const auto& s : js.at("samples")) e.samples.push_back(parse_sample(s));
  validate_episode(e);
  return e;
}

std::string episode_to_json(const RawEpisode& e) {
  json js;
  js["id"] = e.id;
  js["native_rate_hz"] = e.native_rate_hz;
  json samples = json::array();
  for (const auto& s : e.samples) samples.push_back(sample_to_json(s));
  js["samples"] = std::move(samples);
  return js.dump();
}

std::vector<RawEpisode> read_episodes_jsonl(std::istream& in) {
  std::vector<RawEpisode> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_episode_json(line));
    } catch (const std::exception& ex) {
      throw std::runtime_error(fmt::format("episode line {}: {}", line_no, ex.what()));
    }
  }
  return out;
}

void write_episodes_jsonl(std::ostream& out, const std::vector<RawEpisode>& episodes) {
  for (const auto& e : episodes) out << episode_to_json(e) << '\n';
}

}  // namespace navscale
