#pragma once

#include "hawkesnet/estimate.hpp"
#include "hawkesnet/graph.hpp"
#include "hawkesnet/model.hpp"
#include "hawkesnet/simulate.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace hawkes {

// Event streams: CSV with header `time,component`, times nondecreasing,
// components 1-based. A leading `# d=<int> horizon=<real>` comment carries
// the stream metadata; both are inferred from the data when absent.
EventStream read_stream(const std::string& path, int declared_d = 0);
void write_stream(const EventStream& s, const std::string& path);

HawkesModel read_model(const std::string& path);
void write_model(const HawkesModel& m, const std::string& path);
nlohmann::json model_to_json(const HawkesModel& m);
HawkesModel model_from_json(const nlohmann::json& j);

nlohmann::json skeleton_estimate_to_json(const SkeletonEstimate& est);
SkeletonEstimate skeleton_estimate_from_json(const nlohmann::json& j);

nlohmann::json graph_estimate_to_json(const GraphEstimate& est);
GraphEstimate graph_estimate_from_json(const nlohmann::json& j);

nlohmann::json graph_to_json(const WeightedGraph& g);
WeightedGraph graph_from_json(const nlohmann::json& j);

// DOT output: edge width proportional to the weight, dashed edges and small
// nodes for estimates that are not significantly larger than zero.
std::string export_dot(const Skeleton& g);
std::string export_dot(const WeightedGraph& g);
std::string export_dot(const GraphEstimate& est);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace hawkes
