#include "snakesim/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace snakesim {

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string safe_name(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
  return s;
}

}  // namespace

void write_table_csv(const Table& table, std::ostream& out) {
  for (std::size_t j = 0; j < table.columns.size(); ++j) out << (j ? "," : "") << table.columns[j];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
    out << '\n';
  }
}

std::string summary_json(const ResultBundle& bundle) {
  nlohmann::ordered_json j;
  j["experiment"] = bundle.spec.id;
  j["seed"] = bundle.spec.seed;
  j["replicates"] = bundle.spec.replicates;
  j["passed"] = bundle.passed();
  j["failed_replicates"] = bundle.failed_replicates();
  auto& checks = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : bundle.checks) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["passed"] = c.passed();
    cj["failed_replicates"] = c.failed_replicates;
    auto& stats = cj["stats"] = nlohmann::ordered_json::array();
    for (const auto& s : c.stats) {
      nlohmann::ordered_json sj;
      sj["statistic"] = s.name;
      sj["estimate"] = number(s.estimate);
      sj["stderr"] = number(s.stderr_);
      sj["target"] = number(s.target);
      sj["provenance"] = s.provenance;
      sj["tolerance"] = s.tolerance;
      sj["verdict"] = to_string(s.verdict);
      stats.push_back(std::move(sj));
    }
    cj["notes"] = c.notes;
    checks.push_back(std::move(cj));
  }
  return j.dump(2) + "\n";
}

void write_bundle(const ResultBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [&](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(dir / "summary.json");
    f << summary_json(bundle);
  }
  for (const auto& c : bundle.checks) {
    for (const auto& t : c.tables) {
      auto f = open(dir / (safe_name(c.name) + "__" + safe_name(t.name) + ".csv"));
      write_table_csv(t, f);
    }
  }
}

void write_contour_csv(const ContourRecord& record, std::ostream& out) {
  out << "step,level";
  for (int a = 0; a < record.dim; ++a) out << ",x" << a;
  out << '\n';
  for (std::size_t k = 0; k < record.states(); ++k) {
    out << k << ',' << record.levels[k];
    for (double v : record.tip(k)) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_ledger_csv(const LocalTimeLedger& ledger, std::ostream& out) {
  out << "level,upcrossing_runs\n";
  for (int m = 0; m <= ledger.top(); ++m) {
    const auto& ups = ledger.upcrossings(m);
    out << m << ',';
    std::size_t i = 0;
    bool first = true;
    while (i < ups.size()) {
      std::size_t j = i + 1;
      while (j < ups.size() && ups[j] - ups[j - 1] == 2) ++j;
      out << (first ? "" : " ") << ups[i] << ':' << (j - i);
      first = false;
      i = j;
    }
    out << '\n';
  }
}

void write_field_csv(const EnvironmentField& field, const Grid& grid, std::ostream& out) {
  out << "k,grid_index,x,value\n";
  std::vector<double> node(static_cast<std::size_t>(grid.dim));
  const std::size_t N = field.uniform ? grid.size() : field.values.size();
  for (std::size_t i = 0; i < N; ++i) {
    grid.node(i, node);
    const double v = field.uniform ? field.values.front() : field.values[i];
    out << field.k << ',' << i << ',' << format_double(node[0]) << ',' << format_double(v) << '\n';
  }
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace snakesim
