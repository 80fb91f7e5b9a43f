#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "chfield/dataset.hpp"

namespace chfield {

enum class Projection { Planar, GreatCircle, Equirectangular };

const char* projection_name(Projection p);
Projection parse_projection(const std::string& s);

// Column mapping. Long format uses `variable_column` (1..p) plus `value_column`;
// wide format lists one column per variable in `value_columns` (blank cells are skipped).
struct CsvSchema {
  std::vector<std::string> coord_columns = {"x", "y"};
  std::string variable_column = "variable";
  std::string value_column = "value";
  std::vector<std::string> value_columns;
  std::string block_column;
  std::string unit_column;
  bool require_values = true;  // prediction targets may omit the value column
  Projection projection = Projection::Planar;
  // Equirectangular origin; NaN means the data centroid.
  double origin_lon = std::numeric_limits<double>::quiet_NaN();
  double origin_lat = std::numeric_limits<double>::quiet_NaN();
};

struct IngestResult {
  SpatialDataset data;
  int p = 0;                 // largest variable index seen
  std::string metadata;      // projection record, e.g. "equirectangular origin=(lon,lat) km"
};

// Throws ParseError (1-based data row, header is row 0) on missing columns or bad cells.
IngestResult ingest_csv(std::istream& in, const CsvSchema& schema);
IngestResult ingest_csv_file(const std::string& path, const CsvSchema& schema);

// Long-format CSV with 17 significant digits; ingest with default_schema_for() restores it.
void export_csv(std::ostream& out, const SpatialDataset& data);
CsvSchema default_schema_for(const SpatialDataset& data);

// Splits one CSV line (double quotes allowed around fields).
std::vector<std::string> split_csv_line(const std::string& line);

// %.17g; reads back to the same double.
std::string format_double(double v);

}  // namespace chfield
