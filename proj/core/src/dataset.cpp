#include "hybridflow/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "hybridflow/errors.hpp"

namespace hybridflow::data {

namespace fs = std::filesystem;
using namespace std::chrono;

FlowDataset::FlowDataset(std::vector<StationInfo> stations_, sys_days start,
                         std::size_t timestamps)
    : stations(std::move(stations_)),
      start_date(start),
      flows({stations.size(), timestamps}),
      mask(stations.size() * timestamps, 1) {}

void FlowDataset::set_missing(std::size_t s, std::size_t t) {
  flows.at(s, t) = 0.0;
  mask[s * timestamps() + t] = 0;
}

void FlowDataset::set_observed(std::size_t s, std::size_t t, double v) {
  flows.at(s, t) = v;
  mask[s * timestamps() + t] = 1;
}

std::size_t FlowDataset::observed_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

unsigned FlowDataset::weekday(std::size_t day) const {
  const std::chrono::weekday wd{start_date + std::chrono::days{static_cast<long>(day)}};
  return wd.iso_encoding() - 1;
}

// ---------------------------------------------------------------- windows

std::size_t WindowConfig::first_position() const { return std::max({n, n_d, n_w}); }

std::size_t WindowConfig::last_position() const {
  return kPointsPerDay - h - std::max(n_d, n_w);
}

std::size_t WindowConfig::samples_per_day() const {
  return last_position() - first_position() + 1;
}

void WindowConfig::validate() const {
  if (n == 0 || h == 0) throw UsageError("window: n and h must be positive");
  if (h + std::max(n_d, n_w) + first_position() > kPointsPerDay)
    throw UsageError("window: blocks (n=" + std::to_string(n) + ", h=" + std::to_string(h) +
                     ", n_d=" + std::to_string(n_d) + ", n_w=" + std::to_string(n_w) +
                     ") do not fit in one day");
}

void WindowConfig::validate_for_model() const {
  validate();
  if (2 * n_d + h != n || 2 * n_w + h != n)
    throw UsageError("window: need 2*n_d + h == n and 2*n_w + h == n, got n=" +
                     std::to_string(n) + ", h=" + std::to_string(h) + ", n_d=" +
                     std::to_string(n_d) + ", n_w=" + std::to_string(n_w));
}

namespace {

void copy_block(const FlowDataset& ds, std::size_t start, std::size_t width, Tensor& out,
                std::vector<std::uint8_t>& mask) {
  const std::size_t p = ds.stations_count();
  const std::size_t T = ds.timestamps();
  out = Tensor({p, width});
  mask.assign(p * width, 0);
  for (std::size_t s = 0; s < p; ++s) {
    std::copy_n(&ds.flows[s * T + start], width, &out[s * width]);
    std::copy_n(&ds.mask[s * T + start], width, &mask[s * width]);
  }
}

}  // namespace

std::vector<WindowSample> extract_windows(const FlowDataset& ds, const WindowConfig& cfg,
                                          DayRange days) {
  cfg.validate();
  if (days.begin < kFirstEligibleDay)
    throw UsageError("extract_windows: day " + std::to_string(days.begin) +
                     " has no week of history (first eligible day is 7)");
  if (days.end > ds.days() || days.begin > days.end)
    throw UsageError("extract_windows: day range [" + std::to_string(days.begin) + ", " +
                     std::to_string(days.end) + ") outside dataset of " +
                     std::to_string(ds.days()) + " days");
  std::vector<WindowSample> out;
  out.reserve(days.size() * cfg.samples_per_day());
  for (std::size_t day = days.begin; day < days.end; ++day) {
    for (std::size_t pos = cfg.first_position(); pos <= cfg.last_position(); ++pos) {
      WindowSample w;
      w.t = day * kPointsPerDay + pos;
      const std::size_t t_d = w.t - kPointsPerDay;
      const std::size_t t_w = w.t - 7 * kPointsPerDay;
      copy_block(ds, w.t - cfg.n, cfg.n, w.s, w.s_mask);
      copy_block(ds, t_d - cfg.n_d, 2 * cfg.n_d + cfg.h, w.s_d, w.s_d_mask);
      copy_block(ds, t_w - cfg.n_w, 2 * cfg.n_w + cfg.h, w.s_w, w.s_w_mask);
      copy_block(ds, w.t, cfg.h, w.target, w.target_mask);
      out.push_back(std::move(w));
    }
  }
  return out;
}

FlowDataset subset(const FlowDataset& ds, DayRange days) {
  if (days.end > ds.days() || days.begin >= days.end)
    throw UsageError("subset: invalid day range");
  FlowDataset out(ds.stations, ds.start_date + std::chrono::days{static_cast<long>(days.begin)},
                  days.size() * kPointsPerDay);
  const std::size_t T = ds.timestamps();
  const std::size_t width = out.timestamps();
  const std::size_t start = days.begin * kPointsPerDay;
  for (std::size_t s = 0; s < ds.stations_count(); ++s) {
    std::copy_n(&ds.flows[s * T + start], width, &out.flows[s * width]);
    std::copy_n(&ds.mask[s * T + start], width, &out.mask[s * width]);
  }
  return out;
}

// ---------------------------------------------------------- preprocessing

FlowDataset clean(const FlowDataset& ds) {
  FlowDataset out = ds;
  for (std::size_t s = 0; s < out.stations_count(); ++s)
    for (std::size_t t = 0; t < out.timestamps(); ++t)
      if (out.observed(s, t) && out.value(s, t) < 0.0) out.set_missing(s, t);
  return out;
}

Standardization fit_standardization(const FlowDataset& ds, DayRange train) {
  if (train.end > ds.days() || train.size() == 0)
    throw UsageError("standardize: empty or out-of-range training days");
  Standardization stats;
  const std::size_t t0 = train.begin * kPointsPerDay;
  const std::size_t t1 = train.end * kPointsPerDay;
  for (std::size_t s = 0; s < ds.stations_count(); ++s) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = t0; t < t1; ++t)
      if (ds.observed(s, t)) {
        sum += ds.value(s, t);
        ++count;
      }
    if (count < 2)
      throw NumericError("standardize: station " + ds.stations[s].id + " has " +
                         std::to_string(count) + " observed training values");
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (std::size_t t = t0; t < t1; ++t)
      if (ds.observed(s, t)) sq += (ds.value(s, t) - mean) * (ds.value(s, t) - mean);
    const double sd = std::sqrt(sq / static_cast<double>(count - 1));
    if (!(sd > 0.0))
      throw NumericError("standardize: station " + ds.stations[s].id + " has zero variance");
    stats.mean.push_back(mean);
    stats.std.push_back(sd);
  }
  return stats;
}

FlowDataset Standardization::apply(const FlowDataset& ds) const {
  if (mean.size() != ds.stations_count())
    throw DataError("standardization covers " + std::to_string(mean.size()) +
                    " stations, dataset has " + std::to_string(ds.stations_count()));
  FlowDataset out = ds;
  for (std::size_t s = 0; s < out.stations_count(); ++s)
    for (std::size_t t = 0; t < out.timestamps(); ++t)
      if (out.observed(s, t)) out.value(s, t) = (out.value(s, t) - mean[s]) / std[s];
  return out;
}

Standardized standardize(const FlowDataset& ds, DayRange train) {
  Standardization stats = fit_standardization(ds, train);
  FlowDataset data = stats.apply(ds);
  return {std::move(data), std::move(stats)};
}

DaySplit split_days(std::size_t days) {
  if (days < 10)
    throw DataError("split: need at least 10 days, got " + std::to_string(days));
  const std::size_t val = days / 10;
  const std::size_t test = days / 10;
  const std::size_t train = days - val - test;
  return {{0, train}, {train, train + val}, {train + val, days}};
}

DaySplit split(const FlowDataset& ds) { return split_days(ds.days()); }

// ------------------------------------------------------------------- CSV

fs::path sidecar_path(const fs::path& csv) {
  fs::path out = csv;
  out.replace_extension(".stations.json");
  return out;
}

std::string format_timestamp(sys_days start, std::size_t index) {
  const year_month_day ymd{start + std::chrono::days{static_cast<long>(index / kPointsPerDay)}};
  const std::size_t minutes = (index % kPointsPerDay) * 5;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02zu:%02zu:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                minutes / 60, minutes % 60);
  return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

struct ParsedStamp {
  sys_days date;
  unsigned minute_of_day;
};

ParsedStamp parse_timestamp(const std::string& text, std::size_t line) {
  int y = 0;
  unsigned mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  if (std::sscanf(text.c_str(), "%d-%u-%u%*[T ]%u:%u:%u", &y, &mo, &d, &hh, &mm, &ss) < 5)
    throw DataError("line " + std::to_string(line) + ": bad timestamp '" + text + "'");
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || hh > 23 || mm > 59)
    throw DataError("line " + std::to_string(line) + ": invalid timestamp '" + text + "'");
  return {sys_days{ymd}, hh * 60 + mm};
}

std::optional<double> parse_cell(const std::string& raw, std::size_t line) {
  const std::string text = trim(raw);
  if (text.empty() || text == "NaN" || text == "nan" || text == "NAN") return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError("line " + std::to_string(line) + ": cannot parse value '" + text + "'");
  if (std::isnan(v)) return std::nullopt;
  return v;
}

std::vector<StationInfo> read_sidecar(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open station sidecar " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("station sidecar " + path.string() + ": " + e.what());
  }
  std::vector<StationInfo> out;
  try {
    for (const auto& st : j.at("stations"))
      out.push_back({st.at("id").get<std::string>(), st.value("lane", std::string("ML"))});
  } catch (const nlohmann::json::exception& e) {
    throw DataError("station sidecar " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace

FlowDataset load_csv(const fs::path& path, std::optional<fs::path> sidecar) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);
  if (header.size() < 2) throw DataError(path.string() + ": header has no station columns");
  std::vector<std::string> columns;
  for (std::size_t c = 1; c < header.size(); ++c) columns.push_back(trim(header[c]));

  if (!sidecar && fs::exists(sidecar_path(path))) sidecar = sidecar_path(path);
  std::vector<StationInfo> stations;
  std::vector<std::size_t> row_of_column(columns.size());
  if (sidecar) {
    stations = read_sidecar(*sidecar);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t s = 0; s < stations.size(); ++s)
      if (!index.emplace(stations[s].id, s).second)
        throw DataError("sidecar lists station " + stations[s].id + " twice");
    if (stations.size() != columns.size())
      throw DataError("sidecar lists " + std::to_string(stations.size()) + " stations, CSV has " +
                      std::to_string(columns.size()) + " columns");
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto it = index.find(columns[c]);
      if (it == index.end()) throw DataError("unknown station column '" + columns[c] + "'");
      row_of_column[c] = it->second;
    }
  } else {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      stations.push_back({columns[c], "ML"});
      row_of_column[c] = c;
    }
  }
  {
    std::vector<std::size_t> seen = row_of_column;
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw DataError(path.string() + ": duplicate station column");
  }

  std::vector<std::vector<std::optional<double>>> rows;
  std::optional<sys_days> start;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size())
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    const ParsedStamp stamp = parse_timestamp(trim(fields[0]), line_no);
    const std::size_t index = rows.size();
    if (!start) {
      if (stamp.minute_of_day != 0)
        throw DataError(path.string() + ": series must start at midnight");
      start = stamp.date;
    }
    const auto expected_day = *start + std::chrono::days{static_cast<long>(index / kPointsPerDay)};
    if (stamp.date != expected_day || stamp.minute_of_day != (index % kPointsPerDay) * 5)
      throw DataError(path.string() + ": line " + std::to_string(line_no) +
                      " breaks the 5-minute sequence (expected " +
                      format_timestamp(*start, index) + ")");
    std::vector<std::optional<double>> row(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) row[c] = parse_cell(fields[c + 1], line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");
  if (rows.size() % kPointsPerDay != 0)
    throw DataError(path.string() + ": " + std::to_string(rows.size()) +
                    " rows is not a whole number of 288-point days");

  FlowDataset ds(std::move(stations), *start, rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::size_t s = row_of_column[c];
      if (rows[t][c])
        ds.set_observed(s, t, *rows[t][c]);
      else
        ds.set_missing(s, t);
    }
  return ds;
}

void save_csv(const FlowDataset& ds, const fs::path& path, bool write_sidecar) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "timestamp";
  for (const auto& st : ds.stations) out << ',' << st.id;
  out << '\n';
  char buf[64];
  for (std::size_t t = 0; t < ds.timestamps(); ++t) {
    out << format_timestamp(ds.start_date, t);
    for (std::size_t s = 0; s < ds.stations_count(); ++s) {
      out << ',';
      if (!ds.observed(s, t)) continue;
      const auto res = std::to_chars(buf, buf + sizeof buf, ds.value(s, t));
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());

  if (write_sidecar) {
    nlohmann::json j;
    j["stations"] = nlohmann::json::array();
    for (const auto& st : ds.stations) j["stations"].push_back({{"id", st.id}, {"lane", st.lane}});
    std::ofstream side(sidecar_path(path));
    if (!side) throw DataError("cannot write " + sidecar_path(path).string());
    side << j.dump(2) << '\n';
  }
}

}  // namespace hybridflow::data
