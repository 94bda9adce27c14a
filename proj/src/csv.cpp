#include "mda/csv.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mda {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError("line " + std::to_string(line_no) + ": cannot parse '" + s + "'");
    }
    return v;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const IncompleteDataset& data) {
    const std::size_t d = data.dim();
    for (std::size_t j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const PartialRow row = data.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (row.mask.missing(j)) {
                out << "NA";
            } else {
                out << row.values[j];
            }
            out << ',';
        }
        out << data.y(i) << '\n';
    }
}

void write_dataset_csv(const std::string& path, const IncompleteDataset& data) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    write_dataset_csv(out, data);
}

IncompleteDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty dataset file");
    const auto header = split_fields(line);
    if (header.size() < 1 || header.back() != "y") {
        throw ConfigError("dataset header must end with column y");
    }
    const std::size_t d = header.size() - 1;
    std::vector<std::vector<double>> rows;
    std::vector<Mask> masks;
    std::vector<double> ys;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        if (fields.size() != d + 1) {
            throw DimensionError("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(d + 1) + " fields");
        }
        std::vector<double> vals(d, 0.0);
        std::uint64_t bits = 0;
        for (std::size_t j = 0; j < d; ++j) {
            if (fields[j] == "NA") {
                bits |= std::uint64_t{1} << j;
            } else {
                vals[j] = parse_double(fields[j], line_no);
            }
        }
        rows.push_back(std::move(vals));
        masks.emplace_back(d, bits);
        ys.push_back(parse_double(fields[d], line_no));
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        y[static_cast<Eigen::Index>(i)] = ys[i];
    }
    return IncompleteDataset(x, std::move(masks), std::move(y));
}

IncompleteDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return read_dataset_csv(in);
}

}  // namespace mda
