#include "fleetopt/common.hpp"
#include "fleetopt/dsl/dsl.hpp"

namespace fleetopt::dsl {

namespace {

const char* const kIdle = "minimize sum(i in I, k in K) (S[i,k] - sum(j in J) x[i,j,k])";
const char* const kIdleCost = "minimize sum(i in I, k in K) (k + 1) * (S[i,k] - sum(j in J) x[i,j,k])";
const char* const kHighPower = "maximize sum(i in I, j in J, k in K if k == 2) x[i,j,k]";
const char* const kFutureService = "maximize sum(i in I, j in J, k in K) k * x[i,j,k]";
const char* const kDistance = "minimize sum(i in I, j in J, k in K) dist[i,j] * x[i,j,k]";
const char* const kEfficiency = "maximize sum(i in I, j in J, k in K) (u[j,k] - w[i,j]) * x[i,j,k]";
const char* const kWeighted = "maximize sum(i in I, j in J, k in K) (k + 1) * x[i,j,k]";
const char* const kPrice = "minimize sum(j in J, k in K) u[j,k]";
const char* const kMatching =
    "minimize sum(i in I, k in K) (S[i,k] - sum(j in J) x[i,j,k])"
    " + sum(j in J) abs(avg(k in K) z[j,k] - avg(i in I, k in K) S[i,k] - sum(i in I, k in K) x[i,j,k])";
const char* const kCount = "maximize sum(i in I, j in J, k in K) x[i,j,k]";
const char* const kMarket = "maximize sum(i in I, j in J, k in K) u[j,k] * x[i,j,k]";

std::vector<CatalogEntry> make_catalog() {
  return {
      {"Proportion of idle taxis", kIdle, true,
       {"share of taxis left idle", "fraction of the fleet that stays unused"}},
      {"Idle taxis cost", kIdleCost, true, {"cost of keeping taxis idle", "expense of unused taxis weighted by charge"}},
      {"Number of high-powered taxis in demand areas", kHighPower, true,
       {"count of fully charged taxis sent to demand areas", "how many high-battery taxis reach demand zones"}},
      {"Future service level of taxis", kFutureService, true,
       {"service capability of taxis in the future", "remaining charge available for later service"}},
      {"Scheduled taxi response time", kDistance, true,
       {"response time of dispatched taxis", "how quickly scheduled taxis respond"}},
      {"Dispatching efficiency of taxis", kEfficiency, false,
       {"efficiency of taxi dispatching", "net gain per dispatched taxi"}},
      {"Complaint rate of taxis", kWeighted, true, {"taxi complaint ratio", "rate of passenger complaints"}},
      {"Service level of taxis", kWeighted, true, {"taxi service quality level", "level of service offered by taxis"}},
      {"Average travel price of taxis", kPrice, true, {"mean taxi fare for trips", "average price passengers pay"}},
      {"Order completion rate of taxis", kWeighted, true,
       {"share of orders completed by taxis", "taxi order fulfilment ratio"}},
      {"Average waiting time of taxis", kDistance, true,
       {"mean waiting time for a taxi", "how long passengers wait for taxis"}},
      {"Supply-demand matching degree of taxis", kMatching, false,
       {"balance between taxi supply and demand", "how well taxi supply matches demand"}},
      {"Number of pre-allocated taxis", kCount, true,
       {"count of taxis allocated in advance", "how many taxis are pre-positioned"}},
      {"Average passenger capacity of taxis", kWeighted, true,
       {"mean passenger capacity of the taxis", "average number of riders taxis can carry"}},
      {"Number of users covered by taxis", kWeighted, true,
       {"users reached by the taxi service", "how many users the taxis cover"}},
      {"User satisfaction of taxis", kWeighted, true,
       {"satisfaction of taxi users", "how satisfied riders are with taxis"}},
      {"Demand satisfaction rate", kWeighted, true,
       {"rate at which demand is satisfied", "share of demand that gets served"}},
      {"Market share of taxis", kMarket, false, {"taxi share of the market", "market portion captured by taxis"}},
  };
}

}  // namespace

const std::vector<CatalogEntry>& builtin_catalog() {
  static const std::vector<CatalogEntry> catalog = make_catalog();
  return catalog;
}

nlohmann::json catalog_to_json(const std::vector<CatalogEntry>& catalog) {
  nlohmann::json entries = nlohmann::json::array();
  for (const CatalogEntry& e : catalog)
    entries.push_back({{"query", e.query}, {"source", e.source}, {"linear", e.linear}, {"paraphrases", e.paraphrases}});
  return {{"schema", "fleetopt.catalog/1"}, {"entries", entries}};
}

std::vector<CatalogEntry> catalog_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != "fleetopt.catalog/1") throw FormatError("unknown catalog schema");
    std::vector<CatalogEntry> out;
    for (const auto& e : doc.at("entries")) {
      CatalogEntry entry;
      entry.query = e.at("query").get<std::string>();
      entry.source = e.at("source").get<std::string>();
      entry.linear = e.at("linear").get<bool>();
      if (e.contains("paraphrases")) entry.paraphrases = e.at("paraphrases").get<std::vector<std::string>>();
      out.push_back(std::move(entry));
    }
    return out;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("catalog: ") + ex.what());
  }
}

}  // namespace fleetopt::dsl
