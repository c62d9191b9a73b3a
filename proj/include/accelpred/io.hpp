#pragma once

#include <map>
#include <string>
#include <vector>

#include "accelpred/clustering.hpp"
#include "accelpred/env.hpp"
#include "accelpred/trajectory.hpp"

namespace acp {

// All writers print doubles with %.17g so a written file re-parses to the
// exact same values.
std::string format_double(double v);

// Trajectory CSV: header `vehicle_id,t,x,v,a` (the `a` column may be absent
// on input); rows of one vehicle are contiguous. entry_time is the first
// sample's t.
std::vector<VehicleTrack> read_tracks_csv(const std::string& path);
void write_tracks_csv(const std::string& path,
                      const std::vector<VehicleTrack>& tracks);

// Archetype ground-truth sidecar: `vehicle_id,archetype`.
void write_labels_csv(const std::string& path,
                      const std::vector<VehicleTrack>& tracks);
std::map<std::string, std::string> read_labels_csv(const std::string& path);

// Resampled profile CSV: `vehicle_id,entry_time,x,v,a`, 1 m grid.
std::vector<SpatialProfile> read_profiles_csv(const std::string& path);
void write_profiles_csv(const std::string& path,
                        const std::vector<SpatialProfile>& profiles);

// Env sequence CSV: `position,v_p20,v_p40,v_p60,v_p80,a_p20,a_p40,a_p60,a_p80,support`;
// absent positions are omitted.
void write_env_csv(const std::string& path, const EnvSequence& env);

// Cluster outputs: `vehicle_id,cluster,label` and `k,L,ln_Lprime,aic,bic`.
void write_assignments_csv(const std::string& path,
                           const std::vector<DriverFeatures>& features,
                           const ClusteringResult& result);
std::map<std::string, int> read_assignments_csv(const std::string& path);
void write_k_diagnostics_csv(const std::string& path,
                             const std::vector<KDiagnostics>& diags);

// Shared low-level helpers.
std::vector<std::string> split_csv_line(const std::string& line);
std::string file_missing_hint(const std::string& path, const std::string& producer);

}  // namespace acp
