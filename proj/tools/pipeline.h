#pragma once

/**
 * @file pipeline.h
 * @brief Experiment stages, their CSV tables and the run manifest.
 */

#include <stdexcept>
#include <string>
#include <vector>

#include "config.h"
#include "renorm/classn.h"
#include "renorm/geometry.h"
#include "renorm/report.h"
#include "renorm/scope.h"

namespace renorm::cli {

/// A stage that failed; `cause` is the message of the underlying error.
class StageFailed : public std::runtime_error {
public:
    StageFailed(std::string stage, std::string cause)
        : std::runtime_error("StageFailed(" + stage + "): " + cause), stage_(std::move(stage)), cause_(std::move(cause)) {}
    const std::string& stage() const { return stage_; }
    const std::string& cause() const { return cause_; }

private:
    std::string stage_, cause_;
};

struct StageStatus {
    std::string name;
    std::string status;  // ok | failed | skipped
    std::string message;
    double seconds = 0.0;
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::string compiler;
    std::string eigen;
    double wall_clock_seconds = 0.0;
    std::vector<StageStatus> stages;
    std::vector<std::string> outputs;  // relative to the output directory, in write order

    bool ok() const;
    std::string json_text() const;
};

/// RENORM_THREADS when set to a positive integer, else the hardware concurrency (at least 1).
int thread_count();

// Tables. Each has a fixed header; rows follow the deterministic order of the inputs.
CsvTable fixed_point_table(const RenormFixedPoint& fp, int degree);
CsvTable tower_table(const RenormalizationSequence& seq, int per_axis);
CsvTable classn_table(const RenormalizationSequence& seq, DefectRegion region, int per_axis);
CsvTable invariance_table(const std::vector<InvarianceRow>& rows);
CsvTable scope_table(const ScopeAnalysis& sa, int kmax);
CsvTable scope_checks_table(const ScopeAnalysis& sa, int kmax);
CsvTable universal_table(const UniversalNumbers& u, int depth);
CsvTable geometry_csv(const std::vector<GeometryRow>& rows);
CsvTable pieces_table(const RenormalizationSequence& seq, int per_axis);
CsvTable sweep_table(const std::vector<SweepRow>& rows);

/// sweep_b1 with one parameter per task on up to `threads` workers; results in parameter order.
std::vector<SweepRow> parallel_sweep(const SeedSpec& spec, const std::vector<double>& parameters, int depth,
                                     int kmax, int threads);

/// gnuplot commands for the named tables present in the output directory (CSV names without ".csv").
std::string plot_script(const std::vector<std::string>& tables);

/**
 * Run the configured stages in pipeline order, writing CSVs, the tower, plots.gp and
 * manifest.json under config.output. Throws StageFailed after writing the manifest when a
 * stage fails; outputs of earlier stages stay in place.
 */
RunManifest run(const ExperimentConfig& config);

}  // namespace renorm::cli
