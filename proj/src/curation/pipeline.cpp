#include <fmt/format.h>

#include "navscale/curation.hpp"

namespace navscale::curation {

std::vector<Demonstration> curate_episode(const RawEpisode& e, const CurationConfig& config) {
  std::vector<Demonstration> demos;
  for (const RawEpisode& sub : filter_episode(e, config.filter)) {
    const AlignedSeries aligned = resample_4hz(sub);
    if (aligned.size() < 2) continue;
    const auto problem = posegraph::build_problem(sub, aligned, config.fusion);
    const auto fused = posegraph::optimize(problem, config.optimize);

    std::vector<TimedCommand> commands;
    commands.reserve(sub.samples.size());
    for (const auto& s : sub.samples) commands.push_back({s.t, *s.command});
    const ChunkedActions chunked = build_action_chunks(commands, aligned.t);
    // Only the tail of the grid can lose its chunk, so kept points form a prefix.
    const std::size_t usable = chunked.chunks.size();
    if (usable < 2) continue;

    const std::span<const PoseSE2> poses(fused.poses.data(), usable);
    for (const IndexRange& seg : segment_goals(poses, config.segment)) {
      Demonstration d;
      d.id = fmt::format("{}#{}", sub.id, demos.size());
      d.episode_id = e.id;
      d.start_index = seg.start;
      d.end_index = seg.end;
      for (std::size_t i = seg.start; i <= seg.end; ++i) {
        d.poses.push_back(poses[i]);
        d.actions_gt.push_back(chunked.chunks[i]);
        d.obs_refs.push_back(aligned.obs_ref[i]);
        d.fixes.push_back(aligned.gps[i]);
      }
      demos.push_back(std::move(d));
    }
  }
  return demos;
}

}  // namespace navscale::curation
