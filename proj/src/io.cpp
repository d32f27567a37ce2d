#include "lscs/io.hpp"

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lscs::io {

static_assert(std::endian::native == std::endian::little, "LSCS1 files are little-endian");

namespace {

constexpr char kMagic[5] = {'L', 'S', 'C', 'S', '1'};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_number(const std::string& cell, std::size_t line) {
  if (cell.empty()) throw ParseError(line, "empty cell");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size()) throw ParseError(line, "non-numeric cell '" + cell + "'");
  if (errno == ERANGE || !std::isfinite(v)) throw ParseError(line, "non-finite cell '" + cell + "'");
  return v;
}

std::vector<double> parse_row(const std::string& text, std::size_t line) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = text.find(',', start);
    out.push_back(parse_number(trim(std::string_view(text).substr(start, comma - start)), line));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CsvRow {
  std::size_t line;
  std::vector<double> values;
};

// Numeric rows of a CSV file, skipping blank lines and '#' comments.
std::vector<CsvRow> read_rows(const fs::path& path, std::vector<std::string>* comments = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::vector<CsvRow> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::string t = trim(text);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (comments) comments->push_back(t.substr(1));
      continue;
    }
    rows.push_back({line, parse_row(t, line)});
  }
  return rows;
}

void check_columns(const std::vector<CsvRow>& rows, std::size_t from, std::size_t expected) {
  for (std::size_t i = from; i < rows.size(); ++i)
    if (rows[i].values.size() != expected)
      throw ParseError(rows[i].line, "expected " + std::to_string(expected) + " columns");
}

std::FILE* open_write(const fs::path& path, const char* mode) {
  std::FILE* f = std::fopen(path.c_str(), mode);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
  return f;
}

void close_checked(std::FILE* f, const fs::path& path) {
  if (std::ferror(f) | std::fclose(f)) throw Error("error writing '" + path.string() + "'");
}

void write_rows(std::FILE* f, const double* data, std::size_t rows, std::size_t cols, std::size_t row_stride,
                std::size_t col_stride) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) std::fputc(',', f);
      std::fprintf(f, "%.17g", data[r * row_stride + c * col_stride]);
    }
    std::fputc('\n', f);
  }
}

std::vector<PsfVector> psf_rows(const fs::path& path) {
  auto rows = read_rows(path);
  check_columns(rows, 0, PsfVector::kDim);
  std::vector<PsfVector> out;
  for (const auto& row : rows) {
    PsfVector p;
    std::copy(row.values.begin(), row.values.end(), p.v.begin());
    out.push_back(p);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

void write_grid_csv(const fs::path& path, const Grid& grid) {
  std::FILE* f = open_write(path, "w");
  write_rows(f, grid.values().data(), grid.n(), grid.n(), grid.n(), 1);
  close_checked(f, path);
}

Grid read_grid_csv(const fs::path& path) {
  auto rows = read_rows(path);
  if (rows.empty()) throw ParseError(1, "empty grid file");
  const std::size_t n = rows[0].values.size();
  check_columns(rows, 0, n);
  if (rows.size() != n)
    throw ParseError(rows.back().line, "grid must be square: " + std::to_string(rows.size()) + " rows of " +
                                           std::to_string(n) + " columns");
  std::vector<double> values;
  values.reserve(n * n);
  for (const auto& row : rows) values.insert(values.end(), row.values.begin(), row.values.end());
  return Grid(n, std::move(values));
}

void write_grid_binary(const fs::path& path, const Grid& grid) {
  std::FILE* f = open_write(path, "wb");
  const auto n = static_cast<std::uint32_t>(grid.n());
  std::fwrite(kMagic, 1, sizeof kMagic, f);
  std::fwrite(&n, sizeof n, 1, f);
  std::fwrite(grid.values().data(), sizeof(double), grid.size(), f);
  close_checked(f, path);
}

Grid read_grid_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  char magic[5];
  std::uint32_t n = 0;
  if (!in.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0) throw ParseError(1, "missing LSCS1 magic");
  if (!in.read(reinterpret_cast<char*>(&n), sizeof n)) throw ParseError(1, "truncated LSCS1 header");
  std::vector<double> values(static_cast<std::size_t>(n) * n);
  if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double))))
    throw ParseError(1, "truncated LSCS1 payload");
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError(1, "trailing bytes after LSCS1 payload");
  return Grid(n, std::move(values));
}

void write_grid(const fs::path& path, const Grid& grid) {
  auto ext = path.extension();
  if (ext == ".lscs" || ext == ".bin")
    write_grid_binary(path, grid);
  else
    write_grid_csv(path, grid);
}

Grid read_grid(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  char magic[5] = {};
  in.read(magic, 5);
  if (in.gcount() == 5 && std::memcmp(magic, kMagic, 5) == 0) return read_grid_binary(path);
  return read_grid_csv(path);
}

Image read_image(const fs::path& path, double pixel_size) { return Image(read_grid(path), pixel_size); }

SparseMap read_sparse_map(const fs::path& path) { return SparseMap(read_grid(path)); }

// ---------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------

void write_scanset(const fs::path& path, const LineScanSet& scans, std::size_t stride) {
  std::FILE* f = open_write(path, "w");
  std::fprintf(f, "# n=%zu,stride=%zu\n", scans.geometry().n, stride);
  const auto& angles = scans.geometry().angles_deg;
  write_rows(f, angles.data(), 1, angles.size(), 0, 1);
  write_rows(f, scans.values().data(), scans.rows(), scans.m(), 1, scans.rows());
  close_checked(f, path);
}

ScanFile read_scanset(const fs::path& path, std::optional<std::size_t> n_hint) {
  std::vector<std::string> comments;
  auto rows = read_rows(path, &comments);
  if (rows.empty()) throw ParseError(1, "missing angle header row");
  const std::size_t m = rows[0].values.size();
  check_columns(rows, 1, m);
  const std::size_t count = rows.size() - 1;
  if (count == 0) throw ParseError(rows[0].line, "no sample rows after the angle header");

  std::size_t n = 0, stride = 1;
  for (const auto& c : comments) {
    std::size_t cn = 0, cs = 0;
    if (std::sscanf(c.c_str(), " n=%zu,stride=%zu", &cn, &cs) == 2) {
      n = cn;
      stride = cs;
    }
  }
  if (n_hint) n = *n_hint;
  if (n == 0) {
    for (std::size_t cand = 2; cand <= count; ++cand)
      if (padded_size(cand) == count) {
        n = cand;
        break;
      }
    if (n == 0) throw ParseError(rows[0].line, "cannot infer the image side from " + std::to_string(count) + " rows");
  }
  if (stride == 0) throw ParseError(1, "stride must be >= 1");

  ScanGeometry geom;
  geom.n = n;
  geom.angles_deg = rows[0].values;
  try {
    geom.validate();
  } catch (const DomainError& e) {
    throw ParseError(rows[0].line, e.what());
  }
  const std::size_t expected = (geom.sweep_length() + stride - 1) / stride;
  if (count != expected)
    throw ParseError(rows.back().line, "expected " + std::to_string(expected) + " sample rows for n=" +
                                           std::to_string(n) + " stride=" + std::to_string(stride) + ", got " +
                                           std::to_string(count));
  LineScanSet scans(geom, count);
  for (std::size_t t = 0; t < count; ++t)
    for (std::size_t i = 0; i < m; ++i) scans(t, i) = rows[t + 1].values[i];
  return {std::move(scans), stride};
}

// ---------------------------------------------------------------------------
// PSF files
// ---------------------------------------------------------------------------

void write_psf_lines(const fs::path& path, const std::vector<PsfVector>& lines) {
  std::FILE* f = open_write(path, "w");
  for (const auto& p : lines) write_rows(f, p.v.data(), 1, PsfVector::kDim, 0, 1);
  close_checked(f, path);
}

std::vector<PsfVector> read_psf_lines(const fs::path& path) {
  auto out = psf_rows(path);
  if (out.empty()) throw ParseError(1, "PSF file has no rows");
  return out;
}

void write_psf_box(const fs::path& path, const PsfBox& box) { write_psf_lines(path, {box.lower, box.upper}); }

PsfBox read_psf_box(const fs::path& path) {
  auto rows = psf_rows(path);
  if (rows.size() != 2) throw ParseError(1, "PSF box file needs exactly 2 rows (lower, upper)");
  PsfBox box{rows[0], rows[1]};
  try {
    box.validate();
  } catch (const DomainError& e) {
    throw ParseError(1, e.what());
  }
  return box;
}

// ---------------------------------------------------------------------------
// key=value
// ---------------------------------------------------------------------------

KeyValues KeyValues::parse(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string t = trim(raw);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key=value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ParseError(line, "empty key");
    if (kv.values_.count(key)) throw ParseError(line, "duplicate key '" + key + "'");
    kv.values_[key] = {trim(std::string_view(t).substr(eq + 1)), line};
  }
  return kv;
}

KeyValues KeyValues::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const KeyValues::Entry* KeyValues::find(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string KeyValues::get(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double KeyValues::get(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  return e ? parse_number(e->value, e->line) : fallback;
}

long KeyValues::get(const std::string& key, long fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  char* end = nullptr;
  long v = std::strtol(e->value.c_str(), &end, 10);
  if (e->value.empty() || end != e->value.c_str() + e->value.size())
    throw ParseError(e->line, "key '" + key + "' needs an integer, got '" + e->value + "'");
  return v;
}

bool KeyValues::get(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value == "1" || e->value == "true" || e->value == "on" || e->value == "yes") return true;
  if (e->value == "0" || e->value == "false" || e->value == "off" || e->value == "no") return false;
  throw ParseError(e->line, "key '" + key + "' needs a boolean, got '" + e->value + "'");
}

void KeyValues::require_all_used() const {
  for (const auto& [key, e] : values_)
    if (!used_.count(key)) throw ParseError(e.line, "unknown key '" + key + "'");
}

std::string KeyValues::dump() const {
  std::string out;
  for (const auto& [key, e] : values_) out += key + "=" + e.value + "\n";
  return out;
}

SolverConfig solver_config_from(const KeyValues& kv) {
  SolverConfig c;
  c.rounds = kv.get("K", c.rounds);
  c.iterations = kv.get("L", c.iterations);
  c.reweight_scale = kv.get("C", c.reweight_scale);
  c.epsilon = kv.get("eps", c.epsilon);
  c.inertia = kv.get("alpha", c.inertia);
  c.seed = static_cast<std::uint64_t>(kv.get("seed", static_cast<long>(c.seed)));
  c.max_backtracks = kv.get("max_backtracks", c.max_backtracks);
  c.early_stop = kv.get("early_stop", c.early_stop);
  c.early_stop_tol = kv.get("early_stop_tol", c.early_stop_tol);
  c.early_stop_window = kv.get("early_stop_window", c.early_stop_window);
  c.monotone_restart = kv.get("monotone_restart", c.monotone_restart);
  c.psf_half_width = kv.get("psf_half_width", c.psf_half_width);
  c.validate();
  return c;
}

void put_solver_config(KeyValues& kv, const SolverConfig& c) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  kv.set("K", std::to_string(c.rounds));
  kv.set("L", std::to_string(c.iterations));
  kv.set("C", num(c.reweight_scale));
  kv.set("eps", num(c.epsilon));
  kv.set("alpha", num(c.inertia));
  kv.set("seed", std::to_string(c.seed));
  kv.set("max_backtracks", std::to_string(c.max_backtracks));
  kv.set("early_stop", c.early_stop ? "1" : "0");
  kv.set("early_stop_tol", num(c.early_stop_tol));
  kv.set("early_stop_window", std::to_string(c.early_stop_window));
  kv.set("monotone_restart", c.monotone_restart ? "1" : "0");
  kv.set("psf_half_width", std::to_string(c.psf_half_width));
}

}  // namespace lscs::io
