#pragma once

#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "hcrep/network.hpp"

namespace hcrep::cli {

inline constexpr const char* kDumpFormat = "hcrep-network/1";

/// Sidecar layout: for every wired concept in wired_concepts() order, every
/// rep j = 0..m-1, groups 0..k-1 (one per child, in child order) and then the
/// lateral group for lateral networks. Each group is ceil(m/8) bytes, bit i of
/// byte b standing for rep 8b+i of the source concept.
std::vector<std::uint8_t> sidecar_bytes(const LayeredNetwork& net);

json network_summary(const LayeredNetwork& net);

/// Writes <path> (summary) and <path>.bin (sidecar).
void save_network(const LayeredNetwork& net, const std::string& path);

/// Rebuilds a network from a summary and its sidecar; in-degrees in the
/// summary are checked against the bitmaps.
std::shared_ptr<const LayeredNetwork> load_network(const std::string& path);

}  // namespace hcrep::cli
