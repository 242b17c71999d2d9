#pragma once

/**
 * @file report.h
 * @brief CSV tables with fixed formatting, atomic file output and text persistence of maps and towers.
 */

#include <iosfwd>
#include <string>
#include <vector>

#include "renorm/henon.h"

namespace renorm {

/// %.17g, with "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

/// Quote a field when it holds a comma, quote, CR or LF (RFC 4180).
std::string csv_escape(const std::string& field);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }

    /// Row builder: t.row() << 1 << 0.5 << "vc"; the row is checked against the header width on str().
    class Row {
    public:
        explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
        Row& operator<<(double v);
        Row& operator<<(int v);
        Row& operator<<(long v);
        Row& operator<<(long long v);
        Row& operator<<(unsigned long v);
        Row& operator<<(unsigned long long v);
        Row& operator<<(bool v);
        Row& operator<<(const std::string& v);
        Row& operator<<(const char* v);

    private:
        std::vector<std::string>& cells_;
    };
    Row row();

    /// LF line endings, header first; throws DomainError on a row of the wrong width.
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Parse CSV text (quoted fields allowed) into rows of fields.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Write to path + ".tmp" and rename over path; IoError on failure.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

void write_map(std::ostream& os, const HenonMap& F);
HenonMap read_map(std::istream& is);
void save_map(const std::string& path, const HenonMap& F);
HenonMap load_map(const std::string& path);

/// Directory with tower.txt (levels, sigma0, shift, diagnostics) and map_<k>.txt per level.
void save_tower(const std::string& dir, const RenormalizationSequence& seq);
RenormalizationSequence load_tower(const std::string& dir);

}  // namespace renorm
