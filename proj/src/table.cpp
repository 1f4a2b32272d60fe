#include "thermobound/io/table.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace thermo::io {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ordered_json model_params_to_json(const ModelParams& p, double a1, double a2) {
  ordered_json j = ordered_json::object();
  if (p.n) j["n"] = *p.n;
  if (p.levels) j["N"] = *p.levels;
  if (p.scale) j["c"] = *p.scale;
  j["eps"] = p.eps;
  j["a1"] = a1;
  j["a2"] = a2;
  return j;
}

TableRow row_from_report(const BoundReport& rep, const std::string& sweep_var,
                         std::optional<double> sweep_value) {
  TableRow row;
  row.kind = to_string(rep.kind);
  row.sweep_var = sweep_var;
  row.sweep_value = sweep_value;
  row.value = rep.value;
  row.grid_nodes = rep.grid_nodes;
  row.convergence_estimate = rep.convergence_estimate;
  row.v = rep.v;
  row.model_params_json = model_params_to_json(rep.model_params, rep.a1, rep.a2).dump();
  return row;
}

namespace {

const char* kHeader = "kind,sweep_var,sweep_value,value,grid_nodes,convergence_estimate,v,model_params_json";

// Quote a field per RFC 4180 when it contains a comma, quote, or newline.
std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(std::string("bad numeric CSV field for ") + what + ": '" + s + "'");
  }
}

long long parse_ll(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(std::string("bad integer CSV field for ") + what + ": '" + s + "'");
  }
}

}  // namespace

std::string to_csv(const Table& table) {
  std::ostringstream os;
  os << "# config: " << table.config.dump() << "\n";
  os << kHeader << "\n";
  for (const TableRow& r : table.rows) {
    os << csv_escape(r.kind) << ',' << csv_escape(r.sweep_var) << ','
       << (r.sweep_value ? fmt17(*r.sweep_value) : std::string()) << ',' << fmt17(r.value) << ','
       << r.grid_nodes << ',' << fmt17(r.convergence_estimate) << ',' << r.v << ','
       << csv_escape(r.model_params_json) << "\n";
  }
  return os.str();
}

Table table_from_csv(const std::string& text) {
  Table table;
  std::istringstream is(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# config: ";
      if (line.rfind(tag, 0) == 0) {
        table.config = ordered_json::parse(line.substr(tag.size()), nullptr, false);
        if (table.config.is_discarded()) throw IoError("unparseable config comment in CSV");
      }
      continue;
    }
    if (!header_seen) {
      if (line != kHeader) throw IoError("unexpected CSV header: '" + line + "'");
      header_seen = true;
      continue;
    }
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 8) throw IoError("CSV row has " + std::to_string(f.size()) + " fields, want 8");
    TableRow row;
    row.kind = f[0];
    row.sweep_var = f[1];
    if (!f[2].empty()) row.sweep_value = parse_double(f[2], "sweep_value");
    row.value = parse_double(f[3], "value");
    row.grid_nodes = parse_ll(f[4], "grid_nodes");
    row.convergence_estimate = parse_double(f[5], "convergence_estimate");
    row.v = parse_ll(f[6], "v");
    row.model_params_json = f[7];
    table.rows.push_back(std::move(row));
  }
  if (!header_seen) throw IoError("CSV has no header row");
  return table;
}

std::string to_json_text(const Table& table) {
  ordered_json doc;
  doc["config"] = table.config;
  ordered_json rows = ordered_json::array();
  for (const TableRow& r : table.rows) {
    ordered_json jr;
    jr["kind"] = r.kind;
    jr["sweep_var"] = r.sweep_var;
    if (r.sweep_value) jr["sweep_value"] = *r.sweep_value;
    else jr["sweep_value"] = nullptr;
    jr["value"] = r.value;
    jr["grid_nodes"] = r.grid_nodes;
    jr["convergence_estimate"] = r.convergence_estimate;
    jr["v"] = r.v;
    jr["model_params"] = ordered_json::parse(r.model_params_json);
    rows.push_back(std::move(jr));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path + "'");
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace thermo::io
