#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace earscan {

/// Directional magnitude spectra in dB, one row per direction.
struct DtfSet {
    std::vector<double> frequencies;                  // Hz, strictly ascending
    std::vector<std::pair<double, double>> directions;  // (azimuth, elevation) degrees
    Eigen::MatrixXd magnitudes_db;                    // directions x frequencies
    std::string ear = "left";
};

void validate(const DtfSet& dtf);

/// CSV: header `azimuth,elevation,f1,...,fN`, then one row per direction.
DtfSet parse_dtf_csv(const std::string& text);
DtfSet load_dtf_csv(const std::string& path);
std::string format_dtf_csv(const DtfSet& dtf);

/// Glasberg-Moore ERB-rate: 21.4 log10(1 + 0.00437 f).
double erb_rate(double hz);
double erb_rate_to_hz(double rate);

/// Glasberg-Moore bandwidth: 24.7 (1 + 0.00437 f).
double erb_bandwidth(double hz);

/// Centres one ERB apart starting at fmin, not exceeding fmax.
std::vector<double> erb_centers(double fmin, double fmax);

struct GammatoneBank {
    std::vector<double> centers;
    std::vector<double> frequencies;
    Eigen::MatrixXd weights;  // centers x frequencies, rows sum to 1
};

/// Rows: 4th-order gammatone magnitude (1 + ((f - fc) / b)^2)^-2 with
/// b = 1.019 ERB(fc), normalized to unit sum.
GammatoneBank gammatone_weights(const std::vector<double>& centers, const std::vector<double>& frequencies);

/// Band levels in dB: 10 log10(sum_f w(f) 10^(H(f)/10)); directions x centres.
Eigen::MatrixXd filter_dtf(const DtfSet& dtf, const GammatoneBank& bank);

/// Per direction, population variance over bands of the band-level difference.
std::vector<double> issd_per_direction(const DtfSet& a, const DtfSet& b, const GammatoneBank& bank);

/// Mean of issd_per_direction, dB^2.
double issd(const DtfSet& a, const DtfSet& b, const GammatoneBank& bank);

}  // namespace earscan
