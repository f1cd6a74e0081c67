#include "cfsurv/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "cfsurv/errors.hpp"

namespace cfsurv {

namespace {

// Splits one RFC-4180 logical record; `in` is positioned at its start.
// Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool seen_any = false;
    int ch;
    while ((ch = in.get()) != EOF) {
        seen_any = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get();
            fields.push_back(std::move(field));
            return true;
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw SchemaError("csv: unterminated quoted field");
    if (!seen_any) return false;
    fields.push_back(std::move(field));
    return true;
}

double parse_double(const std::string& s, std::size_t row, const std::string& col) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
        throw SchemaError("csv: non-finite or unparsable value '" + s + "' in column " + col +
                          " at row " + std::to_string(row));
    }
    return v;
}

} // namespace

int CsvTable::find(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == name) return static_cast<int>(j);
    }
    return -1;
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
    const int j = find(name);
    if (j < 0) throw SchemaError("csv: missing column '" + name + "'");
    return columns[static_cast<std::size_t>(j)];
}

CsvTable parse_csv(std::istream& in) {
    CsvTable table;
    std::vector<std::string> fields;
    if (!read_record(in, fields)) throw SchemaError("csv: missing header row");
    table.header = fields;
    table.columns.assign(table.header.size(), {});
    std::size_t row = 1;
    while (read_record(in, fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue; // trailing blank line
        ++row;
        if (fields.size() != table.header.size()) {
            throw SchemaError("csv: row " + std::to_string(row) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(table.header.size()));
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            table.columns[j].push_back(parse_double(fields[j], row, table.header[j]));
        }
    }
    return table;
}

CsvTable parse_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("csv: cannot open '" + path + "'");
    return parse_csv(in);
}

Dataset dataset_from_table(const CsvTable& table, const CsvSchema& schema) {
    // Covariate columns x1..xp must be present contiguously from 1.
    std::size_t p = 0;
    while (table.has(schema.x_prefix + std::to_string(p + 1))) ++p;
    if (p == 0) throw SchemaError("csv: no covariate columns '" + schema.x_prefix + "1'...");

    std::vector<const std::vector<double>*> xcols(p);
    for (std::size_t j = 0; j < p; ++j) {
        xcols[j] = &table.column(schema.x_prefix + std::to_string(j + 1));
    }
    const auto& cens = table.column(schema.censoring);
    const auto& obs = table.column(schema.observed);
    const bool has_event = table.has(schema.event);
    const bool has_true = table.has(schema.true_time);

    const std::size_t n = table.rows();
    std::vector<SurvivalRecord> records(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = records[i];
        r.x.resize(p);
        for (std::size_t j = 0; j < p; ++j) r.x[j] = (*xcols[j])[i];
        r.censoring = cens[i];
        r.observed = obs[i];
        if (r.observed > r.censoring) {
            throw SchemaError("csv: observed time exceeds censoring time at row " +
                              std::to_string(i + 2)); // +1 header, +1 one-based
        }
        if (has_true) r.true_time = table.column(schema.true_time)[i];
        if (has_event) {
            r.event = table.column(schema.event)[i] != 0.0;
        } else {
            r.event = r.observed < r.censoring; // unknown flag at a tie: censored
        }
    }
    return Dataset(std::move(records));
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    return dataset_from_table(parse_csv_file(path), schema);
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

void save_csv(const Dataset& ds, std::ostream& out, const CsvSchema& schema) {
    const std::size_t p = ds.dim();
    const bool has_true = ds[0].true_time.has_value();
    for (std::size_t j = 0; j < p; ++j) {
        out << csv_escape(schema.x_prefix + std::to_string(j + 1)) << ',';
    }
    out << csv_escape(schema.censoring) << ',' << csv_escape(schema.observed) << ','
        << csv_escape(schema.event);
    if (has_true) out << ',' << csv_escape(schema.true_time);
    out << '\n';
    for (const auto& r : ds.records()) {
        for (std::size_t j = 0; j < p; ++j) out << format_value(r.x[j]) << ',';
        out << format_value(r.censoring) << ',' << format_value(r.observed) << ','
            << (r.event ? 1 : 0);
        if (has_true) out << ',' << format_value(r.true_time.value_or(0.0));
        out << '\n';
    }
}

void save_csv_file(const Dataset& ds, const std::string& path, const CsvSchema& schema) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("csv: cannot write '" + path + "'");
    save_csv(ds, out, schema);
}

} // namespace cfsurv
