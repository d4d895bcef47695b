#include "fleetopt/data/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fleetopt::data {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int parse_int(const std::string& s, std::size_t pos, std::size_t len, const std::string& whole) {
  int v = 0;
  const char* first = s.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, v);
  if (ec != std::errc{} || ptr != first + len) throw FormatError("malformed date or time '" + whole + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(what + ": not a finite number '" + s + "'");
  }
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw FormatError("line " + std::to_string(number) + ": expected " + std::to_string(t.header.size()) + " fields");
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(number);
  }
  if (t.header.empty()) throw FormatError("empty table");
  return t;
}

}  // namespace

std::int64_t parse_date(const std::string& iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw FormatError("malformed date '" + iso + "'");
  using namespace std::chrono;
  const year_month_day ymd{year{parse_int(iso, 0, 4, iso)}, month{static_cast<unsigned>(parse_int(iso, 5, 2, iso))},
                           day{static_cast<unsigned>(parse_int(iso, 8, 2, iso))}};
  if (!ymd.ok()) throw FormatError("invalid date '" + iso + "'");
  return sys_days{ymd}.time_since_epoch().count();
}

std::string format_date(std::int64_t days) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

int day_of_week(std::int64_t days) {
  using namespace std::chrono;
  return static_cast<int>(weekday{sys_days{std::chrono::days{days}}}.iso_encoding()) - 1;
}

Timestamp parse_timestamp(const std::string& text) {
  if (text.size() < 16 || (text[10] != ' ' && text[10] != 'T') || text[13] != ':')
    throw FormatError("malformed timestamp '" + text + "'");
  Timestamp t;
  t.day = parse_date(text.substr(0, 10));
  const int h = parse_int(text, 11, 2, text);
  const int m = parse_int(text, 14, 2, text);
  int s = 0;
  if (text.size() == 19 && text[16] == ':')
    s = parse_int(text, 17, 2, text);
  else if (text.size() != 16)
    throw FormatError("malformed timestamp '" + text + "'");
  if (h > 23 || m > 59 || s > 59) throw FormatError("invalid time of day '" + text + "'");
  t.second_of_day = h * 3600 + m * 60 + s;
  return t;
}

std::vector<TripRecord> read_trips_csv(std::istream& in) {
  const Table t = read_table(in);
  const std::size_t pt = t.column("pickup_time"), dt = t.column("dropoff_time");
  const std::size_t plat = t.column("pickup_lat"), plon = t.column("pickup_lon");
  const std::size_t dlat = t.column("dropoff_lat"), dlon = t.column("dropoff_lon");
  const std::size_t fare = t.column("fare");
  std::vector<TripRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = "trips line " + std::to_string(t.line_numbers[r]);
    TripRecord trip;
    trip.pickup = parse_timestamp(row[pt]);
    trip.dropoff = parse_timestamp(row[dt]);
    if (std::pair(trip.dropoff.day, trip.dropoff.second_of_day) < std::pair(trip.pickup.day, trip.pickup.second_of_day))
      throw FormatError(where + ": dropoff precedes pickup");
    trip.pickup_lat = parse_double(row[plat], where);
    trip.pickup_lon = parse_double(row[plon], where);
    trip.dropoff_lat = parse_double(row[dlat], where);
    trip.dropoff_lon = parse_double(row[dlon], where);
    trip.fare = parse_double(row[fare], where);
    out.push_back(trip);
  }
  return out;
}

std::vector<WeatherDay> read_weather_csv(std::istream& in) {
  const Table t = read_table(in);
  const std::size_t date = t.column("date"), temp = t.column("temperature"), dew = t.column("dew_point");
  std::vector<WeatherDay> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = "weather line " + std::to_string(t.line_numbers[r]);
    WeatherDay w;
    w.day = parse_date(row[date]);
    w.temperature = parse_double(row[temp], where);
    w.dew_point = parse_double(row[dew], where);
    for (std::size_t c = 0; c < row.size(); ++c)
      if (c != date && c != temp && c != dew) w.extra[t.header[c]] = parse_double(row[c], where);
    out.push_back(std::move(w));
  }
  return out;
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kRadius = 6371.0;
  constexpr double kRad = 3.14159265358979323846 / 180.0;
  const double dlat = (b.lat - a.lat) * kRad, dlon = (b.lon - a.lon) * kRad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

double sq_dist(const GeoPoint& a, const GeoPoint& b) {
  return (a.lat - b.lat) * (a.lat - b.lat) + (a.lon - b.lon) * (a.lon - b.lon);
}

}  // namespace

int Clustering::nearest(const GeoPoint& p) const {
  int best = 0;
  for (std::size_t c = 1; c < centroids.size(); ++c)
    if (sq_dist(p, centroids[c]) < sq_dist(p, centroids[static_cast<std::size_t>(best)])) best = static_cast<int>(c);
  return best;
}

Clustering cluster_zones(const std::vector<GeoPoint>& points, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("cluster_zones: k must be positive");
  std::vector<GeoPoint> distinct;
  for (const GeoPoint& p : points)
    if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) distinct.push_back(p);
  if (static_cast<std::size_t>(k) > distinct.size())
    throw std::invalid_argument("cluster_zones: k exceeds the number of distinct points");

  Rng rng(seed);
  Clustering c;
  c.centroids.push_back(distinct[rng.index(distinct.size())]);
  while (c.centroids.size() < static_cast<std::size_t>(k)) {
    std::vector<double> w(distinct.size());
    for (std::size_t p = 0; p < distinct.size(); ++p) w[p] = sq_dist(distinct[p], c.centroids[static_cast<std::size_t>(c.nearest(distinct[p]))]);
    c.centroids.push_back(distinct[rng.categorical(w)]);
  }

  c.assignment.assign(points.size(), 0);
  for (c.iterations = 0; c.iterations < 100;) {
    for (std::size_t p = 0; p < points.size(); ++p) c.assignment[p] = c.nearest(points[p]);
    ++c.iterations;
    std::vector<GeoPoint> sum(c.centroids.size());
    std::vector<int> count(c.centroids.size(), 0);
    for (std::size_t p = 0; p < points.size(); ++p) {
      const auto z = static_cast<std::size_t>(c.assignment[p]);
      sum[z].lat += points[p].lat;
      sum[z].lon += points[p].lon;
      ++count[z];
    }
    double moved = 0.0;
    for (std::size_t z = 0; z < c.centroids.size(); ++z) {
      if (count[z] == 0) continue;
      const GeoPoint next{sum[z].lat / count[z], sum[z].lon / count[z]};
      moved = std::max(moved, std::sqrt(sq_dist(next, c.centroids[z])));
      c.centroids[z] = next;
    }
    if (moved < 1e-9) break;
  }
  for (std::size_t p = 0; p < points.size(); ++p) c.assignment[p] = c.nearest(points[p]);
  return c;
}

TimeWindow parse_window(const std::string& text) {
  if (text.size() != 11 || text[2] != ':' || text[5] != '-' || text[8] != ':')
    throw FormatError("malformed window '" + text + "', expected HH:MM-HH:MM");
  TimeWindow w;
  w.start_minute = parse_int(text, 0, 2, text) * 60 + parse_int(text, 3, 2, text);
  w.end_minute = parse_int(text, 6, 2, text) * 60 + parse_int(text, 9, 2, text);
  if (w.start_minute >= w.end_minute || w.end_minute > 24 * 60) throw FormatError("empty or invalid window '" + text + "'");
  return w;
}

const std::vector<std::string>& exogenous_names() {
  static const std::vector<std::string> names{"temperature", "dew_point", "day_of_week"};
  return names;
}

std::vector<DayInstance> build_instances(const std::vector<TripRecord>& trips, const std::vector<WeatherDay>& weather,
                                         const Clustering& zones, const BuildOptions& options) {
  if (trips.empty() || weather.empty() || zones.centroids.empty())
    throw std::invalid_argument("build_instances: empty input");
  if (options.soc_levels < 1 || options.soc_weights.size() != static_cast<std::size_t>(options.soc_levels))
    throw std::invalid_argument("build_instances: one SOC weight per level required");
  const std::size_t Z = zones.centroids.size();
  const std::size_t K = static_cast<std::size_t>(options.soc_levels);

  struct Counts {
    const WeatherDay* weather;
    Matrix<int> supply, demand;  // [zone,k]
    std::vector<int> dropoffs, pickups;
  };
  std::vector<WeatherDay> days = weather;
  std::sort(days.begin(), days.end(), [](const WeatherDay& a, const WeatherDay& b) { return a.day < b.day; });
  std::vector<Counts> counts;
  for (const WeatherDay& w : days) {
    Counts c{&w, Matrix<int>(Z, K), Matrix<int>(Z, K), std::vector<int>(Z, 0), std::vector<int>(Z, 0)};
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(w.day)));
    for (const TripRecord& t : trips) {
      if (t.dropoff.day == w.day && options.window.contains(t.dropoff.second_of_day)) {
        const auto z = static_cast<std::size_t>(zones.nearest({t.dropoff_lat, t.dropoff_lon}));
        ++c.dropoffs[z];
        ++c.supply(z, rng.categorical(options.soc_weights));
      }
      if (t.pickup.day == w.day && options.window.contains(t.pickup.second_of_day)) {
        const auto z = static_cast<std::size_t>(zones.nearest({t.pickup_lat, t.pickup_lon}));
        ++c.pickups[z];
        ++c.demand(z, rng.categorical(options.soc_weights));
      }
    }
    counts.push_back(std::move(c));
  }

  std::vector<int> deficient_days(Z, 0), active_days(Z, 0);
  int qualifying = 0;
  for (const Counts& c : counts) {
    bool any = false;
    for (std::size_t z = 0; z < Z; ++z) {
      if (c.pickups[z] + c.dropoffs[z] == 0) continue;
      any = true;
      ++active_days[z];
      if (c.pickups[z] > c.dropoffs[z]) ++deficient_days[z];
    }
    qualifying += any;
  }
  if (qualifying == 0) throw std::invalid_argument("build_instances: no trips inside the window");

  std::vector<DayInstance> out;
  for (const Counts& c : counts) {
    std::vector<int> I, J;
    for (std::size_t z = 0; z < Z; ++z) {
      bool demand_side, active;
      if (options.partition == Partition::PerDay) {
        active = c.pickups[z] + c.dropoffs[z] > 0;
        demand_side = c.pickups[z] > c.dropoffs[z];
      } else {
        active = active_days[z] > 0;
        demand_side = 2 * deficient_days[z] > qualifying;
      }
      if (active) (demand_side ? J : I).push_back(static_cast<int>(z));
    }
    if (I.empty() || J.empty()) continue;
    bool any = false;
    for (std::size_t z = 0; z < Z; ++z) any = any || c.pickups[z] + c.dropoffs[z] > 0;
    if (!any) continue;
    Matrix<int> S(I.size(), K), D(J.size(), K);
    Matrix<double> dist(I.size(), J.size());
    for (std::size_t a = 0; a < I.size(); ++a)
      for (std::size_t k = 0; k < K; ++k) S(a, k) = c.supply(static_cast<std::size_t>(I[a]), k);
    for (std::size_t b = 0; b < J.size(); ++b)
      for (std::size_t k = 0; k < K; ++k) D(b, k) = c.demand(static_cast<std::size_t>(J[b]), k);
    for (std::size_t a = 0; a < I.size(); ++a)
      for (std::size_t b = 0; b < J.size(); ++b)
        dist(a, b) = haversine_km(zones.centroids[static_cast<std::size_t>(I[a])],
                                  zones.centroids[static_cast<std::size_t>(J[b])]);
    DayInstance d;
    d.day = c.weather->day;
    d.instance = make_instance(I, J, std::move(S), std::move(D), std::move(dist));
    d.exogenous = {c.weather->temperature, c.weather->dew_point, static_cast<double>(day_of_week(c.weather->day))};
    out.push_back(std::move(d));
  }
  if (out.empty()) throw std::invalid_argument("build_instances: no day has both supply and demand areas");
  return out;
}

}  // namespace fleetopt::data
