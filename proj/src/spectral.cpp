#include "earscan/spectral.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "earscan/error.hpp"
#include "earscan/io.hpp"

namespace earscan {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

double parse_cell(const std::string& cell, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": invalid number '" + cell + "'");
    return v;
}

}  // namespace

void validate(const DtfSet& dtf) {
    if (dtf.frequencies.empty()) throw Error(ErrorKind::EmptyInput, "DTF has no frequencies");
    for (std::size_t k = 1; k < dtf.frequencies.size(); ++k)
        if (!(dtf.frequencies[k] > dtf.frequencies[k - 1]))
            throw Error(ErrorKind::Domain, "DTF frequencies must be strictly ascending");
    if (dtf.magnitudes_db.rows() != static_cast<Eigen::Index>(dtf.directions.size()) ||
        dtf.magnitudes_db.cols() != static_cast<Eigen::Index>(dtf.frequencies.size()))
        throw Error(ErrorKind::Shape, "DTF matrix dimensions disagree with its grids");
    if (!dtf.magnitudes_db.allFinite()) throw Error(ErrorKind::Domain, "DTF contains non-finite values");
}

DtfSet parse_dtf_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    DtfSet dtf;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (dtf.frequencies.empty()) {
            if (cells.size() < 3 || cells[0] != "azimuth" || cells[1] != "elevation")
                throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                                  ": header must start with azimuth,elevation");
            for (std::size_t k = 2; k < cells.size(); ++k) dtf.frequencies.push_back(parse_cell(cells[k], line_no));
            continue;
        }
        if (cells.size() != dtf.frequencies.size() + 2)
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(dtf.frequencies.size() + 2) + " columns");
        dtf.directions.emplace_back(parse_cell(cells[0], line_no), parse_cell(cells[1], line_no));
        std::vector<double> row;
        for (std::size_t k = 2; k < cells.size(); ++k) row.push_back(parse_cell(cells[k], line_no));
        rows.push_back(std::move(row));
    }
    if (dtf.frequencies.empty()) throw Error(ErrorKind::Parse, "DTF file has no header");
    dtf.magnitudes_db.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dtf.frequencies.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t k = 0; k < rows[r].size(); ++k)
            dtf.magnitudes_db(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
    validate(dtf);
    return dtf;
}

DtfSet load_dtf_csv(const std::string& path) {
    try {
        return parse_dtf_csv(read_text_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Io) throw;
        throw Error(e.kind(), path + ": " + e.what());
    }
}

std::string format_dtf_csv(const DtfSet& dtf) {
    std::string out = "azimuth,elevation";
    for (double f : dtf.frequencies) out += "," + format_double(f);
    out += "\n";
    for (std::size_t r = 0; r < dtf.directions.size(); ++r) {
        out += format_double(dtf.directions[r].first) + "," + format_double(dtf.directions[r].second);
        for (Eigen::Index k = 0; k < dtf.magnitudes_db.cols(); ++k)
            out += "," + format_double(dtf.magnitudes_db(static_cast<Eigen::Index>(r), k));
        out += "\n";
    }
    return out;
}

double erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }

double erb_rate_to_hz(double rate) { return (std::pow(10.0, rate / 21.4) - 1.0) / 0.00437; }

double erb_bandwidth(double hz) { return 24.7 * (1.0 + 0.00437 * hz); }

std::vector<double> erb_centers(double fmin, double fmax) {
    if (!(fmin > 0.0 && fmin < fmax)) throw Error(ErrorKind::Domain, "ERB range needs 0 < fmin < fmax");
    std::vector<double> centers{fmin};
    const double start = erb_rate(fmin);
    for (int k = 1;; ++k) {
        const double f = erb_rate_to_hz(start + k);
        if (f > fmax) break;
        centers.push_back(f);
    }
    return centers;
}

GammatoneBank gammatone_weights(const std::vector<double>& centers, const std::vector<double>& frequencies) {
    if (centers.empty() || frequencies.empty()) throw Error(ErrorKind::EmptyInput, "filterbank grids are empty");
    for (std::size_t k = 1; k < centers.size(); ++k)
        if (!(centers[k] > centers[k - 1])) throw Error(ErrorKind::Domain, "centres must be strictly ascending");
    GammatoneBank bank;
    bank.centers = centers;
    bank.frequencies = frequencies;
    bank.weights.resize(static_cast<Eigen::Index>(centers.size()), static_cast<Eigen::Index>(frequencies.size()));
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const double b = 1.019 * erb_bandwidth(centers[k]);
        double sum = 0.0;
        for (std::size_t j = 0; j < frequencies.size(); ++j) {
            const double x = (frequencies[j] - centers[k]) / b;
            const double r = 1.0 / ((1.0 + x * x) * (1.0 + x * x));
            bank.weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = r;
            sum += r;
        }
        bank.weights.row(static_cast<Eigen::Index>(k)) /= sum;
    }
    return bank;
}

Eigen::MatrixXd filter_dtf(const DtfSet& dtf, const GammatoneBank& bank) {
    validate(dtf);
    if (dtf.frequencies != bank.frequencies)
        throw Error(ErrorKind::Shape, "DTF and filterbank frequency grids differ");
    const Eigen::MatrixXd power = (dtf.magnitudes_db.array() / 10.0 * std::log(10.0)).exp().matrix();
    const Eigen::MatrixXd band_power = power * bank.weights.transpose();
    return (10.0 * band_power.array().log10()).matrix();
}

std::vector<double> issd_per_direction(const DtfSet& a, const DtfSet& b, const GammatoneBank& bank) {
    if (a.directions != b.directions) throw Error(ErrorKind::Shape, "DTF sets cover different directions");
    if (a.frequencies != b.frequencies) throw Error(ErrorKind::Shape, "DTF sets use different frequency grids");
    const Eigen::MatrixXd diff = filter_dtf(a, bank) - filter_dtf(b, bank);
    std::vector<double> out(static_cast<std::size_t>(diff.rows()));
    const auto bands = static_cast<double>(diff.cols());
    for (Eigen::Index r = 0; r < diff.rows(); ++r) {
        const double mean = diff.row(r).mean();
        out[static_cast<std::size_t>(r)] = (diff.row(r).array() - mean).square().sum() / bands;
    }
    return out;
}

double issd(const DtfSet& a, const DtfSet& b, const GammatoneBank& bank) {
    const auto v = issd_per_direction(a, b, bank);
    if (v.empty()) throw Error(ErrorKind::EmptyInput, "DTF sets have no directions");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace earscan
