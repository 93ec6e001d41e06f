#include "qmrl/harness/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace qmrl::harness {

namespace {

constexpr int kBins = 1440 / kProfileBinMinutes;

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    return out;
}

}    // namespace

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("quantile: empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<ProfileRow> compute_profile(const std::vector<TraceSample>& samples) {
    struct Acc {
        std::vector<double> glucose;
        double insulin = 0.0;
        long doses = 0;
    };
    std::map<std::tuple<std::string, std::string, int>, Acc> bins;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& s : samples) {
        const int bin = (s.minute % 1440) / kProfileBinMinutes;
        auto key = std::make_tuple(s.arm, s.scenario, bin);
        if (std::find(order.begin(), order.end(), std::make_pair(s.arm, s.scenario)) == order.end()) {
            order.emplace_back(s.arm, s.scenario);
        }
        auto& acc = bins[key];
        acc.glucose.push_back(s.glucose);
        if (s.insulin > 0.0) {
            acc.insulin += s.insulin;
            ++acc.doses;
        }
    }
    std::vector<ProfileRow> rows;
    for (const auto& [arm, scenario] : order) {
        for (int b = 0; b < kBins; ++b) {
            ProfileRow r;
            r.arm = arm;
            r.scenario = scenario;
            r.bin_start = b * kProfileBinMinutes;
            const auto it = bins.find({arm, scenario, b});
            if (it != bins.end() && !it->second.glucose.empty()) {
                const auto& g = it->second.glucose;
                r.median = quantile(g, 0.5);
                r.q25 = quantile(g, 0.25);
                r.q75 = quantile(g, 0.75);
                r.samples = static_cast<long>(g.size());
                r.insulin = it->second.insulin;
                r.doses = it->second.doses;
            } else {
                r.median = r.q25 = r.q75 = std::nan("");
            }
            rows.push_back(r);
        }
    }
    return rows;
}

std::vector<TraceSample> read_traces_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("arm,scenario,patient,minute,glucose", 0) != 0) {
        throw std::invalid_argument("traces csv: missing or unexpected header");
    }
    std::vector<TraceSample> out;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() != 7) {
            throw std::invalid_argument(fmt::format("traces csv: line {} has {} fields", lineno, f.size()));
        }
        try {
            out.push_back({f[0], f[1], std::stoi(f[2]), std::stoi(f[3]), std::stod(f[4]), std::stod(f[5]),
                           std::stod(f[6])});
        } catch (const std::exception&) {
            throw std::invalid_argument(fmt::format("traces csv: bad number on line {}", lineno));
        }
    }
    return out;
}

void write_profile_csv(std::ostream& os, const std::vector<ProfileRow>& rows) {
    os << "arm,scenario,bin_start_minute,median,q25,q75,samples,insulin_units,doses\n";
    for (const auto& r : rows) {
        os << fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{},{:.6f},{}\n", r.arm, r.scenario, r.bin_start, r.median,
                          r.q25, r.q75, r.samples, r.insulin, r.doses);
    }
}

void write_dose_scatter_csv(std::ostream& os, const std::vector<TraceSample>& samples) {
    os << "arm,scenario,patient,minute_of_day,units\n";
    for (const auto& s : samples) {
        if (s.insulin > 0.0) {
            os << fmt::format("{},{},{},{},{:.6f}\n", s.arm, s.scenario, s.patient, s.minute % 1440, s.insulin);
        }
    }
}

void cmd_export_profile(const std::filesystem::path& traces, const std::filesystem::path& out_dir) {
    std::ifstream is(traces);
    if (!is) {
        throw std::invalid_argument("cannot open traces file " + traces.string());
    }
    const auto samples = read_traces_csv(is);
    std::filesystem::create_directories(out_dir);
    std::ofstream profile(out_dir / "profile.csv", std::ios::trunc);
    std::ofstream doses(out_dir / "doses.csv", std::ios::trunc);
    if (!profile || !doses) {
        throw std::runtime_error("cannot write profile output in " + out_dir.string());
    }
    write_profile_csv(profile, compute_profile(samples));
    write_dose_scatter_csv(doses, samples);
}

}    // namespace qmrl::harness
