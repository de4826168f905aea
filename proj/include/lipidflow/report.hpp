#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lipidflow/align.hpp"
#include "lipidflow/annotate.hpp"
#include "lipidflow/blink.hpp"
#include "lipidflow/enhance.hpp"
#include "lipidflow/features.hpp"
#include "lipidflow/fit.hpp"
#include "lipidflow/flow.hpp"
#include "lipidflow/segment.hpp"
#include "lipidflow/track.hpp"

namespace lipidflow {

inline constexpr const char* kToolName = "lipidflow";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kReportSchema = 1;

/// Every tunable of the pipeline; serialized into each report entry so the entry can be replayed.
struct PipelineConfig {
    BlinkParams blink;
    double dark_percentile = 0.05;
    EnhanceParams enhance;
    SnakeParams snake;
    FastParams fast;
    int seed_columns = 16;
    LKParams lk;
    FarnebackParams farneback;
    TrackOptions track;
    FilterParams filter;
    bool absolute_dx = false;
    /// Empty means all ten variants (or only the default one when `fast` is set).
    std::vector<VariantId> variants;
    bool fast_mode = false;
    std::uint64_t seed = 0;

    std::vector<VariantId> selected_variants() const;
};

nlohmann::json to_json(const PipelineConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);

struct VariantResult {
    VariantId variant;
    bool ok = false;
    std::string error;
    int n_seeds = 0;
    int n_tracked = 0;       ///< trajectories still Ok after backward tracking
    int n_trajectories = 0;  ///< after filtering
    DecayFit fit_x;
    DecayFit fit_y;
    DisplacementSeries series;
    std::vector<Trajectory> trajectories;  ///< every tracked seed
};

struct InterBlinkResult {
    int index = 0;
    InterBlink range;
    std::vector<Offset> offsets;
    std::vector<VariantResult> variants;
    bool all_failed() const;
};

struct AnalysisReport {
    std::string source_id;
    double fps = 0.0;
    int frame_count = 0;
    std::vector<std::pair<int, int>> blinks;
    std::vector<InterBlinkResult> interblinks;
    PipelineConfig config;
};

/// Tracking, filtering, aggregation and fitting of one variant on an aligned inter-blink.
VariantResult run_variant(const VideoSequence& aligned, const IrisMask& mask, VariantId variant,
                          const PipelineConfig& config,
                          const VideoSequence* enhanced = nullptr);

/// Pupil of the last aligned frame expressed in aligned coordinates.
PupilCircle aligned_last_pupil(const AlignedInterBlink& ib);

AnalysisReport run_pipeline(const VideoSequence& video, const PipelineConfig& config);

nlohmann::json to_json(const AnalysisReport& report);
std::string report_to_string(const AnalysisReport& report);
std::string trajectories_csv(const AnalysisReport& report);

/// Lightweight view of a parsed report, enough for comparison and cohort statistics.
struct ReportSummaryEntry {
    int interblink = 0;
    std::string variant;
    bool ok = false;
    DecayFit fit_x;
    DecayFit fit_y;
    nlohmann::json params;
};

struct ReportSummary {
    std::string source_id;
    std::vector<ReportSummaryEntry> entries;
};

ReportSummary parse_report(const std::string& json_text);
ReportSummary load_report(const std::filesystem::path& path);

struct ComparisonEntry {
    int interblink = 0;
    char axis = 'y';
    ComparisonRow row;
};

/// Annotation-derived fits against the report's entry for the same inter-blink.
std::vector<ComparisonEntry> compare_report(const AnnotationSet& annotations, const ReportSummary& report,
                                            VariantId variant = kDefaultVariant);
std::string comparison_to_csv(const std::vector<ComparisonEntry>& rows);
nlohmann::json comparison_to_json(const std::vector<ComparisonEntry>& rows);

struct SubjectMeta {
    std::string subject_id;
    std::optional<double> osdi;
    std::optional<double> thinning_time_s;
};

std::vector<SubjectMeta> parse_subject_meta(const std::string& csv_text);

enum class MetaField { Osdi, ThinningTime };

struct CohortCorrelation {
    CorrelationResult fit;
    std::vector<std::string> subjects;
    std::vector<std::pair<double, double>> points;  ///< (metadata value, lambda)
};

/// Per subject: mean lambda of the variant over inter-blinks, paired with the metadata field.
/// With `per_interblink` every inter-blink contributes its own point instead.
CohortCorrelation correlate_cohort(const std::vector<ReportSummary>& reports, const std::vector<SubjectMeta>& meta,
                                   MetaField field, char axis, VariantId variant = kDefaultVariant,
                                   bool per_interblink = false);

std::string emit_scatter_svg(const std::vector<std::pair<double, double>>& points, const std::string& x_label,
                             const std::string& y_label, const CorrelationResult& fit);

}  // namespace lipidflow
