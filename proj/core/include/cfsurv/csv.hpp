#ifndef CFSURV_CSV_HPP
#define CFSURV_CSV_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "cfsurv/dataset.hpp"

namespace cfsurv {

/// Parsed CSV held column-wise as doubles. RFC-4180 quoting, '.' decimal,
/// header row required.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns; ///< one vector per header entry

    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
    /// Index of a column by name, or -1.
    int find(const std::string& name) const;
    const std::vector<double>& column(const std::string& name) const; ///< throws SchemaError
    bool has(const std::string& name) const { return find(name) >= 0; }
};

CsvTable parse_csv(std::istream& in);
CsvTable parse_csv_file(const std::string& path);

/// Column-name mapping from logical roles to file headers. Covariates are
/// x_prefix followed by 1..p; p is inferred from the header.
struct CsvSchema {
    std::string x_prefix = "x";
    std::string censoring = "censoring";
    std::string observed = "observed";
    std::string event = "event";         ///< optional in the file
    std::string true_time = "true_time"; ///< optional in the file
};

/// Builds a validated Dataset from a parsed table. When the event column
/// is absent, a row is labeled an event only if observed < censoring
/// (ties count as censored).
Dataset dataset_from_table(const CsvTable& table, const CsvSchema& schema = {});

/// Reads a dataset from a CSV file. Errors carry the offending row number.
Dataset load_csv(const std::string& path, const CsvSchema& schema = {});

/// Writes a dataset with 12 significant digits per value; round-trips
/// bit-identically through load_csv.
void save_csv(const Dataset& ds, std::ostream& out, const CsvSchema& schema = {});
void save_csv_file(const Dataset& ds, const std::string& path, const CsvSchema& schema = {});

/// 12-significant-digit rendering used for every numeric CSV field.
std::string format_value(double v);

/// RFC-4180 field quoting when the text needs it.
std::string csv_escape(const std::string& field);

} // namespace cfsurv

#endif
