#include "chfield/ingest.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "chfield/errors.hpp"

namespace chfield {

namespace {

double parse_number(const std::string& cell, long row, const std::string& column) {
  std::string s = cell;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("non-numeric cell '" + cell + "' in column '" + column + "'", row);
  if (!std::isfinite(v)) throw ParseError("non-finite cell '" + cell + "' in column '" + column + "'", row);
  return v;
}

bool blank(const std::string& s) {
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace

const char* projection_name(Projection p) {
  switch (p) {
    case Projection::Planar: return "planar";
    case Projection::GreatCircle: return "great-circle";
    case Projection::Equirectangular: return "equirectangular";
  }
  return "?";
}

Projection parse_projection(const std::string& s) {
  if (s == "planar") return Projection::Planar;
  if (s == "great-circle") return Projection::GreatCircle;
  if (s == "equirectangular") return Projection::Equirectangular;
  throw ConfigError("unknown projection '" + s + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

IngestResult ingest_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 0);
  const auto header = split_csv_line(line);
  std::map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);
  auto need = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw ParseError("missing column '" + name + "'", 0);
    return it->second;
  };

  const bool wide = !schema.value_columns.empty();
  if (schema.coord_columns.empty() || schema.coord_columns.size() > 3) throw ConfigError("need 1 to 3 coordinate columns");
  if (schema.projection != Projection::Planar && schema.coord_columns.size() != 2)
    throw ConfigError("geographic projections need (lon, lat) columns");
  std::vector<int> coord_idx;
  for (const auto& c : schema.coord_columns) coord_idx.push_back(need(c));
  std::vector<int> value_idx;
  int var_idx = -1;
  if (wide) {
    for (const auto& c : schema.value_columns) value_idx.push_back(need(c));
  } else {
    var_idx = need(schema.variable_column);
    value_idx.push_back(schema.require_values || col.count(schema.value_column) ? need(schema.value_column) : -1);
  }
  const int block_idx = schema.block_column.empty() ? -1 : need(schema.block_column);
  const int unit_idx = schema.unit_column.empty() ? -1 : need(schema.unit_column);

  std::vector<std::vector<double>> coords;
  std::vector<int> vars;
  std::vector<double> values;
  std::vector<std::string> blocks, units;
  long row = 0;
  int p = wide ? static_cast<int>(value_idx.size()) : 0;
  while (std::getline(in, line)) {
    ++row;
    if (blank(line)) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()), row);
    std::vector<double> loc;
    for (std::size_t c = 0; c < coord_idx.size(); ++c)
      loc.push_back(parse_number(cells[coord_idx[c]], row, schema.coord_columns[c]));
    auto push = [&](int var, double value) {
      coords.push_back(loc);
      vars.push_back(var);
      values.push_back(value);
      if (block_idx >= 0) blocks.push_back(cells[block_idx]);
      if (unit_idx >= 0) units.push_back(cells[unit_idx]);
    };
    if (wide) {
      for (std::size_t v = 0; v < value_idx.size(); ++v) {
        const std::string& cell = cells[value_idx[v]];
        if (blank(cell)) continue;
        push(static_cast<int>(v), parse_number(cell, row, schema.value_columns[v]));
      }
    } else {
      const double vv = parse_number(cells[var_idx], row, schema.variable_column);
      if (vv != std::floor(vv) || vv < 1.0) throw ParseError("variable index must be an integer >= 1", row);
      const int var = static_cast<int>(vv);
      p = std::max(p, var);
      push(var - 1, value_idx[0] < 0 ? 0.0 : parse_number(cells[value_idx[0]], row, schema.value_column));
    }
  }
  if (values.empty()) throw ParseError("no data rows", row);

  IngestResult res;
  res.p = p;
  SpatialDataset& d = res.data;
  const int n = static_cast<int>(values.size());
  const int dim = static_cast<int>(coord_idx.size());
  d.locations.resize(n, dim);
  d.values.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < dim; ++c) d.locations(i, c) = coords[i][c];
    d.values(i) = values[i];
  }
  d.var_index = vars;
  d.block = blocks;
  d.unit = units;

  switch (schema.projection) {
    case Projection::Planar:
      d.metric = DistanceMetric::Euclidean;
      res.metadata = "planar";
      break;
    case Projection::GreatCircle:
      d.metric = DistanceMetric::GreatCircleKm;
      res.metadata = "great-circle haversine km, radius " + format_double(kEarthRadiusKm);
      break;
    case Projection::Equirectangular: {
      const double lon0 = std::isnan(schema.origin_lon) ? d.locations.col(0).mean() : schema.origin_lon;
      const double lat0 = std::isnan(schema.origin_lat) ? d.locations.col(1).mean() : schema.origin_lat;
      const double k = kEarthRadiusKm * M_PI / 180.0;
      const double c = std::cos(lat0 * M_PI / 180.0);
      for (int i = 0; i < n; ++i) {
        d.locations(i, 0) = k * c * (d.locations(i, 0) - lon0);
        d.locations(i, 1) = k * (d.locations(i, 1) - lat0);
      }
      d.metric = DistanceMetric::Euclidean;
      res.metadata = "equirectangular km, origin (" + format_double(lon0) + ", " + format_double(lat0) + ")";
      break;
    }
  }
  return res;
}

IngestResult ingest_csv_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return ingest_csv(in, schema);
}

CsvSchema default_schema_for(const SpatialDataset& data) {
  CsvSchema s;
  if (data.metric == DistanceMetric::GreatCircleKm) {
    s.coord_columns = {"lon", "lat"};
    s.projection = Projection::GreatCircle;
  } else {
    s.coord_columns.clear();
    const char* names[3] = {"x", "y", "z"};
    for (int c = 0; c < data.dim(); ++c) s.coord_columns.push_back(names[c]);
  }
  if (data.has_blocks()) s.block_column = "block";
  if (data.has_units()) s.unit_column = "unit";
  return s;
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void export_csv(std::ostream& out, const SpatialDataset& data) {
  const CsvSchema s = default_schema_for(data);
  for (const auto& c : s.coord_columns) out << c << ',';
  out << "variable,value";
  if (data.has_blocks()) out << ",block";
  if (data.has_units()) out << ",unit";
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int c = 0; c < data.dim(); ++c) out << format_double(data.locations(i, c)) << ',';
    out << data.var_index[i] + 1 << ',' << format_double(data.values(i));
    if (data.has_blocks()) out << ',' << quote_if_needed(data.block[i]);
    if (data.has_units()) out << ',' << quote_if_needed(data.unit[i]);
    out << '\n';
  }
}

}  // namespace chfield
