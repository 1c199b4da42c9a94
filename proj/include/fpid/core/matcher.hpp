#pragma once

#include <cstddef>
#include <vector>

#include "fpid/core/angles.hpp"
#include "fpid/core/minutiae.hpp"

namespace fpid::core {

struct NeighborTuple {
  double distance = 0.0;
  double radial_angle = 0.0;     // [0, 2pi), relative to the centre minutia's direction
  double direction_delta = 0.0;  // [0, 2pi)
};

/// Neighbourhood of one minutia: its K nearest neighbours sorted by distance.
using LocalDescriptor = std::vector<NeighborTuple>;

struct MatchParams {
  std::size_t neighbors = 5;
  std::size_t hypotheses = 5;
  double distance_tolerance = 12.0;
  double angle_tolerance = kPi / 9.0;
};

/// Throws PreconditionError when the template has fewer than two minutiae or
/// `index` is out of range.
LocalDescriptor build_descriptor(const MinutiaeTemplate& t, std::size_t index,
                                 std::size_t neighbors = 5);

/// Mean normalized disagreement over the common prefix of two descriptors.
double descriptor_cost(const LocalDescriptor& a, const LocalDescriptor& b,
                       const MatchParams& params = {});

/// Similarity index in [0, 1]: m^2 / (|q| * |r|) for the best of the
/// lowest-cost descriptor alignments, m being the number of minutiae paired
/// greedily under the distance and angle tolerances.
double match_templates(const MinutiaeTemplate& query, const MinutiaeTemplate& record,
                       const MatchParams& params = {});

/// Number of minutiae paired for the best hypothesis (the m above).
std::size_t matched_pairs(const MinutiaeTemplate& query, const MinutiaeTemplate& record,
                          const MatchParams& params = {});

}  // namespace fpid::core
