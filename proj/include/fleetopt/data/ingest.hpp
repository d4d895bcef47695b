#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "fleetopt/fleet_model.hpp"

namespace fleetopt::data {

/// Days since 1970-01-01 for an ISO date "YYYY-MM-DD". Throws FormatError.
std::int64_t parse_date(const std::string& iso);
std::string format_date(std::int64_t days);
/// 0 = Monday ... 6 = Sunday.
int day_of_week(std::int64_t days);

/// Timestamp "YYYY-MM-DD HH:MM[:SS]" (a 'T' separator is accepted).
struct Timestamp {
  std::int64_t day = 0;
  int second_of_day = 0;
};
Timestamp parse_timestamp(const std::string& text);

struct TripRecord {
  Timestamp pickup, dropoff;
  double pickup_lat = 0.0, pickup_lon = 0.0;
  double dropoff_lat = 0.0, dropoff_lon = 0.0;
  double fare = 0.0;
};

struct WeatherDay {
  std::int64_t day = 0;
  double temperature = 0.0;
  double dew_point = 0.0;
  std::map<std::string, double> extra;
};

/// Header: pickup_time,dropoff_time,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon,fare
/// (any column order, extra columns ignored). Throws FormatError.
std::vector<TripRecord> read_trips_csv(std::istream& in);
/// Header: date,temperature,dew_point plus optional numeric columns.
std::vector<WeatherDay> read_weather_csv(std::istream& in);

struct GeoPoint {
  double lat = 0.0, lon = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

/// Great-circle distance.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

struct Clustering {
  std::vector<int> assignment;  // point -> zone
  std::vector<GeoPoint> centroids;
  int iterations = 0;

  int nearest(const GeoPoint& p) const;
};

/// Lloyd's k-means on (lat, lon) with k-means++ seeding from `seed`; stops
/// after 100 iterations or when no centroid moves by 1e-9. Empty zones keep
/// their centroid. Throws std::invalid_argument when k exceeds the number
/// of distinct points.
Clustering cluster_zones(const std::vector<GeoPoint>& points, int k, std::uint64_t seed);

/// Minutes after midnight, [start, end).
struct TimeWindow {
  int start_minute = 8 * 60;
  int end_minute = 8 * 60 + 30;

  bool contains(int second_of_day) const { return second_of_day >= start_minute * 60 && second_of_day < end_minute * 60; }
};

/// "HH:MM-HH:MM". Throws FormatError.
TimeWindow parse_window(const std::string& text);

struct DayInstance {
  std::int64_t day = 0;
  FleetInstance instance;
  std::vector<double> exogenous;  // temperature, dew point, day of week
};

const std::vector<std::string>& exogenous_names();

enum class Partition {
  PerDay,    // each day's deficient zones form J
  Majority,  // one partition for all days: zones deficient on more than half of the days
};

struct BuildOptions {
  TimeWindow window;
  Partition partition = Partition::PerDay;
  int soc_levels = 3;
  std::vector<double> soc_weights{0.3, 0.4, 0.3};  // low to high
  std::uint64_t seed = 1;
};

/// Per day with weather: supply from dropoffs and demand from pickups inside
/// the window, counted per zone (nearest centroid). A zone with more pickups
/// than dropoffs is a demand area; every other zone with trips is a supply
/// area. Each taxi and each request draws its SOC level from soc_weights.
/// Area ids are zone ids; distances are centroid haversine distances.
/// Days with no trips in the window or an empty side are skipped. Throws
/// std::invalid_argument when no day qualifies.
std::vector<DayInstance> build_instances(const std::vector<TripRecord>& trips, const std::vector<WeatherDay>& weather,
                                         const Clustering& zones, const BuildOptions& options = {});

}  // namespace fleetopt::data
