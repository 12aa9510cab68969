#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nprisk/bootstrap.hpp"
#include "nprisk/simulation.hpp"
#include "nprisk/types.hpp"

namespace nprisk {

/// Reads a sample from a CSV with header `x1,x2,y`. Rejects non-finite
/// entries, duplicate locations and fewer than min_points rows, naming the
/// offending file line. min_points is 10 for the standard ingestion path and
/// 3 under --allow-small.
SpatialSample read_sample_csv(const std::string& path, int min_points = 10);

/// Reads estimation locations from a CSV with header `x1,x2`.
std::vector<Location> read_locations_csv(const std::string& path);

/// Writes `x1,x2,y` with full precision so a read round-trips bit-exactly.
void write_sample_csv(const std::string& path, const SpatialSample& sample);

/// Writes `x1,x2,c,prob` rows, thresholds in the given order, probabilities
/// with 6 decimals.
void write_riskmap_csv(const std::string& path, const std::vector<RiskMap>& maps);

/// Writes `x1,x2,c,prob,prob_raw` rows for the indicator-kriging command.
void write_ik_csv(const std::string& path, const std::vector<Location>& targets,
                  const std::vector<double>& thresholds, const std::vector<IkResult>& results);

/// Writes `scenario,c,mean,median,sd,n_failed`.
void write_error_summary_csv(std::ostream& out, const ErrorSummary& summary);
void write_error_summary_csv(const std::string& path, const ErrorSummary& summary);

}  // namespace nprisk
