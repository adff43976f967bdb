// dataset.hpp
#pragma once
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "design.hpp"

namespace factint {

struct Unit {
    CellIndex combo = 0;
    double y = 0.0;

    friend bool operator==(const Unit&, const Unit&) = default;
};

// n observed units (T_i, Y_i) plus the known assignment distribution of T.
class FactorialDataset {
public:
    FactorialDataset(AssignmentDist dist, std::vector<Unit> rows)
        : dist_(std::move(dist)), rows_(std::move(rows)) {
        require(!rows_.empty(), "dataset must contain at least one unit");
        const std::size_t cells = cell_count(dist_.factors());
        for (const Unit& u : rows_) {
            require(u.combo < cells, "unit combo out of range for K=" + std::to_string(K()));
            require(std::isfinite(u.y), "outcomes must be finite");
        }
    }

    int K() const { return dist_.factors(); }
    std::size_t n() const { return rows_.size(); }
    const AssignmentDist& dist() const { return dist_; }
    const std::vector<Unit>& rows() const { return rows_; }

    FactorialDataset subset(std::span<const std::size_t> indices) const {
        std::vector<Unit> rows;
        rows.reserve(indices.size());
        for (std::size_t i : indices) rows.push_back(rows_.at(i));
        return FactorialDataset(dist_, std::move(rows));
    }

    friend bool operator==(const FactorialDataset&, const FactorialDataset&) = default;

private:
    AssignmentDist dist_;
    std::vector<Unit> rows_;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

// Reads the `t1,...,tK,y` text format. The assignment distribution is not part
// of the file and must be supplied; its factor count must match the header.
inline FactorialDataset read_dataset(std::istream& in, const AssignmentDist& dist) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    require(line_no > 0 && !line.empty(), "dataset is empty (missing header)");
    const auto header = detail::split_fields(line);
    const int K = static_cast<int>(header.size()) - 1;
    require(K >= 1, "line " + std::to_string(line_no) + ": header needs t1..tK,y columns");
    for (int k = 0; k < K; ++k)
        require(header[k] == "t" + std::to_string(k + 1),
                "line " + std::to_string(line_no) + ": expected column t" + std::to_string(k + 1) +
                    ", found '" + header[k] + "'");
    require(header[K] == "y", "line " + std::to_string(line_no) + ": last column must be y");
    require(K == dist.factors(), "header has K=" + std::to_string(K) +
                                     " but assignment distribution has K=" +
                                     std::to_string(dist.factors()));

    std::vector<Unit> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = detail::split_fields(line);
        const std::string where = "line " + std::to_string(line_no) + ": ";
        require(fields.size() == header.size(),
                where + "expected " + std::to_string(header.size()) + " fields, found " +
                    std::to_string(fields.size()));
        Unit u;
        for (int k = 0; k < K; ++k) {
            require(fields[k] == "0" || fields[k] == "1",
                    where + "treatment t" + std::to_string(k + 1) + " must be 0 or 1, found '" +
                        fields[k] + "'");
            if (fields[k] == "1") u.combo |= CellIndex{1} << k;
        }
        require(detail::parse_double(fields[K], u.y),
                where + "outcome '" + fields[K] + "' is not a finite number");
        rows.push_back(u);
    }
    require(!rows.empty(), "dataset has a header but no units");
    return FactorialDataset(dist, std::move(rows));
}

// Shortest round-trip formatting, so read_dataset(write_dataset(d)) == d.
inline void write_dataset(std::ostream& out, const FactorialDataset& data) {
    for (int k = 0; k < data.K(); ++k) out << 't' << (k + 1) << ',';
    out << "y\n";
    for (const Unit& u : data.rows()) {
        for (int k = 0; k < data.K(); ++k) out << ((u.combo >> k) & 1u) << ',';
        out << detail::format_double(u.y) << '\n';
    }
}

}  // namespace factint
