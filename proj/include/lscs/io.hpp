#pragma once

#include "lscs/model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace lscs::io {

namespace fs = std::filesystem;

// Grids: CSV (row-major, one image row per line) or the LSCS1 binary format
// (5-byte magic "LSCS1", little-endian u32 n, n*n f64 values).

void write_grid_csv(const fs::path& path, const Grid& grid);
Grid read_grid_csv(const fs::path& path);
void write_grid_binary(const fs::path& path, const Grid& grid);
Grid read_grid_binary(const fs::path& path);

/// Picks the format from the file: binary when it starts with the LSCS1 magic
/// (read) or the extension is .lscs / .bin (write), CSV otherwise.
void write_grid(const fs::path& path, const Grid& grid);
Grid read_grid(const fs::path& path);

Image read_image(const fs::path& path, double pixel_size = 1.0);
SparseMap read_sparse_map(const fs::path& path);

/// Scan CSV: an optional "# n=<side>,stride=<s>" comment, a header row of
/// angles in degrees, then one row per sweep sample.
struct ScanFile {
  LineScanSet scans;
  std::size_t stride = 1;
};

void write_scanset(const fs::path& path, const LineScanSet& scans, std::size_t stride = 1);
/// `n_hint` overrides the image side; without it or the comment line, the
/// smallest n whose sweep length matches the row count is used (stride 1).
ScanFile read_scanset(const fs::path& path, std::optional<std::size_t> n_hint = std::nullopt);

/// PSF CSV: one row "a,c_l,alpha_l,c_r,alpha_r,sigma" per scan line.
void write_psf_lines(const fs::path& path, const std::vector<PsfVector>& lines);
std::vector<PsfVector> read_psf_lines(const fs::path& path);
/// Box CSV: the lower row followed by the upper row.
void write_psf_box(const fs::path& path, const PsfBox& box);
PsfBox read_psf_box(const fs::path& path);

// ---------------------------------------------------------------------------
// key=value configuration files
// ---------------------------------------------------------------------------

class KeyValues {
 public:
  KeyValues() = default;

  /// Blank lines and lines starting with '#' are ignored.
  static KeyValues parse(const std::string& text);
  static KeyValues load(const fs::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = {std::move(value), 0}; }

  std::string get(const std::string& key, const std::string& fallback) const;
  double get(const std::string& key, double fallback) const;
  long get(const std::string& key, long fallback) const;
  int get(const std::string& key, int fallback) const { return static_cast<int>(get(key, static_cast<long>(fallback))); }
  bool get(const std::string& key, bool fallback) const;

  /// Throws ParseError for the first key that no getter asked for.
  void require_all_used() const;
  std::string dump() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  const Entry* find(const std::string& key) const;

  std::map<std::string, Entry> values_;
  mutable std::set<std::string> used_;
};

SolverConfig solver_config_from(const KeyValues& kv);
void put_solver_config(KeyValues& kv, const SolverConfig& cfg);

}  // namespace lscs::io
