#include "renorm/report.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "renorm/error.h"

namespace renorm {

namespace fs = std::filesystem;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable::Row CsvTable::row() {
    rows_.emplace_back();
    return Row(rows_.back());
}

CsvTable::Row& CsvTable::Row::operator<<(double v) {
    cells_.push_back(format_double(v));
    return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(int v) {
    cells_.push_back(std::to_string(v));
    return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(long v) {
    cells_.push_back(std::to_string(v));
    return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(long long v) {
    cells_.push_back(std::to_string(v));
    return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(unsigned long v) {
    cells_.push_back(std::to_string(v));
    return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(unsigned long long v) {
    cells_.push_back(std::to_string(v));
    return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(bool v) {
    cells_.push_back(v ? "1" : "0");
    return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(const std::string& v) {
    cells_.push_back(v);
    return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(const char* v) {
    cells_.push_back(v);
    return *this;
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cells[i]);
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) {
        if (r.size() != header_.size()) {
            std::ostringstream os;
            os << "csv row has " << r.size() << " fields, header has " << header_.size();
            throw Error(ErrorKind::DomainError, os.str());
        }
        line(r);
    }
    return out;
}

void CsvTable::write(const std::string& path) const { write_file_atomic(path, str()); }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(field);
            field.clear();
            any = true;
        } else if (c == '\n') {
            row.push_back(field);
            rows.push_back(row);
            row.clear();
            field.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
            any = true;
        }
    }
    if (any || !field.empty()) {
        row.push_back(field);
        rows.push_back(row);
    }
    return rows;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw Error(ErrorKind::IoError, "cannot create directory " + p.parent_path().string());
    }
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(ErrorKind::IoError, "cannot write " + tmp);
        os << content;
        if (!os) throw Error(ErrorKind::IoError, "write failed for " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::IoError, "cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_map(std::ostream& os, const HenonMap& F) {
    os << "henon " << F.m << ' ' << format_double(F.eps_bar) << '\n';
    os << F.provenance << '\n';
    F.f.write(os);
    F.eps.write(os);
    for (const Function& d : F.delta) d.write(os);
}

HenonMap read_map(std::istream& is) {
    std::string tag;
    int m = -1;
    double eps_bar = 0.0;
    if (!(is >> tag >> m >> eps_bar) || tag != "henon" || m < 0) throw Error(ErrorKind::IoError, "bad map header");
    std::string provenance;
    std::getline(is, provenance);
    std::getline(is, provenance);
    Function f = Function::read(is);
    is >> std::ws;
    Function eps = Function::read(is);
    VectorFunction delta;
    for (int j = 0; j < m; ++j) {
        is >> std::ws;
        delta.push_back(Function::read(is));
    }
    Box B = eps.domain();
    return make_henon(m, B, std::move(f), std::move(eps), std::move(delta), eps_bar, provenance);
}

void save_map(const std::string& path, const HenonMap& F) {
    std::ostringstream os;
    write_map(os, F);
    write_file_atomic(path, os.str());
}

HenonMap load_map(const std::string& path) {
    std::istringstream is(read_file(path));
    return read_map(is);
}

void save_tower(const std::string& dir, const RenormalizationSequence& seq) {
    std::ostringstream os;
    os << "tower " << seq.depth() << '\n';
    os << "tuning_parameter " << format_double(seq.tuning_parameter) << '\n';
    os << "rho_hat " << format_double(seq.rho_hat) << '\n';
    os << "distance_to_fixed " << seq.distance_to_fixed.size();
    for (double d : seq.distance_to_fixed) os << ' ' << format_double(d);
    os << '\n';
    for (int k = 0; k < seq.depth(); ++k)
        os << "step " << k << ' ' << format_double(seq.steps[k].sigma0()) << ' '
           << format_double(seq.steps[k].shift()) << '\n';
    for (int k = 0; k <= seq.depth(); ++k) save_map((fs::path(dir) / ("map_" + std::to_string(k) + ".txt")).string(), seq.maps[k]);
    write_file_atomic((fs::path(dir) / "tower.txt").string(), os.str());
}

RenormalizationSequence load_tower(const std::string& dir) {
    std::istringstream is(read_file((fs::path(dir) / "tower.txt").string()));
    std::string tag;
    int N = -1;
    if (!(is >> tag >> N) || tag != "tower" || N < 0) throw Error(ErrorKind::IoError, "bad tower header in " + dir);
    RenormalizationSequence seq;
    std::size_t nd = 0;
    if (!(is >> tag >> seq.tuning_parameter) || !(is >> tag >> seq.rho_hat) || !(is >> tag >> nd))
        throw Error(ErrorKind::IoError, "bad tower diagnostics in " + dir);
    seq.distance_to_fixed.resize(nd);
    for (double& d : seq.distance_to_fixed)
        if (!(is >> d)) throw Error(ErrorKind::IoError, "bad distance list in " + dir);
    std::vector<double> sigma(N), shift(N);
    for (int k = 0; k < N; ++k) {
        int idx = -1;
        if (!(is >> tag >> idx >> sigma[k] >> shift[k]) || tag != "step" || idx != k)
            throw Error(ErrorKind::IoError, "bad step line in " + dir);
    }
    for (int k = 0; k <= N; ++k) seq.maps.push_back(load_map((fs::path(dir) / ("map_" + std::to_string(k) + ".txt")).string()));
    for (int k = 0; k < N; ++k) seq.steps.push_back(restore_step(seq.maps[k], seq.maps[k + 1], sigma[k], shift[k]));
    for (const HenonMap& F : seq.maps) {
        seq.eps_norms.push_back(F.eps_norm());
        seq.delta_norms.push_back(F.delta_norm());
    }
    return seq;
}

}  // namespace renorm
