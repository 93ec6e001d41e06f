#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace qmrl::harness {

/// One native sample of a final-window trace as written to traces_final.csv.
struct TraceSample {
    std::string arm;
    std::string scenario;
    int patient = 0;
    int minute = 0;
    double glucose = 0.0;
    double insulin = 0.0;
    double carbs = 0.0;
};

struct ProfileRow {
    std::string arm;
    std::string scenario;
    int bin_start = 0;    // minute of day
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    long samples = 0;
    double insulin = 0.0;    // total units dosed in the bin over all patients
    long doses = 0;
};

inline constexpr int kProfileBinMinutes = 30;

/// Linear-interpolation quantile of an unsorted sample (copied).
double quantile(std::vector<double> values, double q);

/// Time-of-day profile per (arm, scenario): 48 half-hour bins with median
/// and interquartile range of glucose plus the dose totals.
std::vector<ProfileRow> compute_profile(const std::vector<TraceSample>& samples);

std::vector<TraceSample> read_traces_csv(std::istream& is);
void write_profile_csv(std::ostream& os, const std::vector<ProfileRow>& rows);
/// Dose scatter: one row per nonzero insulin sample with its time of day.
void write_dose_scatter_csv(std::ostream& os, const std::vector<TraceSample>& samples);

/// Reads traces_final.csv and writes profile.csv and doses.csv into `out_dir`.
void cmd_export_profile(const std::filesystem::path& traces, const std::filesystem::path& out_dir);

}    // namespace qmrl::harness
