#include "eelink/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "eelink/errors.hpp"

namespace eelink {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, int line_no, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty dataset file");

  auto header = split_line(line);
  if (header.size() < 3 || header[0] != "y" || header[1] != "z") {
    throw ParseError("header must be 'y,z,x1,...,xq', got '" + line + "'");
  }
  const int q = static_cast<int>(header.size()) - 2;
  for (int j = 0; j < q; ++j) {
    std::string want = "x" + std::to_string(j + 1);
    if (header[j + 2] != want) {
      throw ParseError("header column " + std::to_string(j + 3) + " must be '" + want + "', got '" +
                       header[j + 2] + "'");
    }
  }

  Dataset d;
  d.q = q;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (static_cast<int>(cells.size()) != q + 2) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(q + 2) +
                       " columns, got " + std::to_string(cells.size()));
    }
    Observation o;
    o.y = parse_double(cells[0], line_no, "outcome");
    if (cells[1] == "0") {
      o.z = 0;
    } else if (cells[1] == "1") {
      o.z = 1;
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": z must parse as 0 or 1, got '" +
                       cells[1] + "'");
    }
    o.x.resize(q);
    for (int j = 0; j < q; ++j) o.x[j] = parse_double(cells[j + 2], line_no, "covariate");
    d.rows.push_back(std::move(o));
  }
  return d;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open dataset file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_dataset_csv(buf.str());
}

std::string dataset_to_csv(const Dataset& d) {
  std::ostringstream os;
  os.precision(17);
  os << "y,z";
  for (int j = 0; j < d.q; ++j) os << ",x" << (j + 1);
  os << "\n";
  for (const auto& o : d.rows) {
    os << o.y << "," << o.z;
    for (int j = 0; j < d.q; ++j) os << "," << o.x[j];
    os << "\n";
  }
  return os.str();
}

void write_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open '" + path + "' for writing");
  f << dataset_to_csv(d);
}

}  // namespace eelink
