#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "snakesim/harness.hpp"
#include "snakesim/snake.hpp"

namespace snakesim {

/// Plain CSV: header row, then rows printed with round-trip precision.
void write_table_csv(const Table& table, std::ostream& out);

/// Deterministic summary (no timings): one object per check with its stats.
std::string summary_json(const ResultBundle& bundle);

/// summary.json and <check>__<table>.csv under `dir`; throws std::runtime_error
/// when the directory cannot be written.
void write_bundle(const ResultBundle& bundle, const std::filesystem::path& dir);

/// Contour export: step, level, tip coordinates.
void write_contour_csv(const ContourRecord& record, std::ostream& out);

/// Ledger export: level, then run-length encoded upcrossing indices as
/// "start:length" pairs of consecutive-by-two runs.
void write_ledger_csv(const LocalTimeLedger& ledger, std::ostream& out);

/// Slice dump: k, grid_index, x, value (first coordinate of the node).
void write_field_csv(const EnvironmentField& field, const Grid& grid, std::ostream& out);

/// 64-bit FNV-1a, hex-encoded.
std::string fnv1a_hex(const std::string& text);

}  // namespace snakesim
