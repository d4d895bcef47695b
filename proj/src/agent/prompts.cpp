#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "fleetopt/agent/agent.hpp"

namespace fleetopt::agent {

namespace {

const char* const kGrammar = R"G(objective := ("maximize" | "minimize") expr
expr      := term (("+" | "-") term)*
term      := unary ("*" unary)*
unary     := "-" unary | primary
primary   := number | "(" expr ")" | "abs" "(" expr ")"
           | ("sum" | "avg") "(" binding ("," binding)* ["if" cond ("and" cond)*] ")" term
           | name | name "[" index ("," index)* "]"
binding   := name "in" ("I" | "J" | "K")
cond      := index ("<" | "<=" | ">" | ">=" | "==" | "!=") index
Atoms: x[i,j,k] taxis moved from supply area i to demand area j at SOC level k (0 = lowest);
u_hat[j,k] passenger fare; u[j,k] platform revenue per trip; S[i,k] idle taxis; z[j,k] requests;
dist[i,j] distance in km; w[i,j] repositioning cost. Degree at most 2; abs only over affine terms.)G";

const char* const kIndicatorSystem =
    "You are the indicator generator of an electric taxi dispatching assistant. "
    "Translate the operator's request into one objective written in this language:\n\n{{grammar}}\n\n"
    "Answer with the objective only, inside one ``` block.";

const char* const kIndicatorUser = "Examples:\n{{examples}}\nRequest: {{query}}\nObjective:";

const char* const kTailorSystem =
    "You are the problem tailor of an electric taxi dispatching assistant. Fixing decision variables to their "
    "historical averages shrinks the optimization model. Choose which variables stay free.\n{{format}}";

const char* const kTailorUser =
    "Request: {{query}}\nObjective: {{objective}}\n"
    "Decision variables (historical optima statistics):\n{{variables}}\n"
    "Previous free set: {{previous_active}}\nPrevious satisfaction score: {{previous_score}}\n"
    "Fix about {{fixed_fraction}} of the variables; keep {{keep_count}} free.\n"
    "Infeasibility report: {{report}}";

const char* const kFormat =
    "Reply with one JSON object and nothing else: "
    "{\"active\": [\"<variable name>\", ...], \"rationale\": \"<one sentence>\"}";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

PromptTemplates PromptTemplates::defaults() {
  return {kIndicatorSystem, kIndicatorUser, kTailorSystem, kTailorUser};
}

std::string render(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::set<std::string> used;
  std::size_t pos = 0;
  while (true) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string::npos) {
      out += tmpl.substr(pos);
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) throw std::invalid_argument("template: unterminated placeholder");
    const std::string key = tmpl.substr(open + 2, close - open - 2);
    const auto it = values.find(key);
    if (it == values.end()) throw std::invalid_argument("template: no value for {{" + key + "}}");
    out += tmpl.substr(pos, open - pos);
    out += it->second;
    used.insert(key);
    pos = close + 2;
  }
  for (const auto& [k, v] : values)
    if (!used.count(k)) throw std::invalid_argument("template: value '" + k + "' has no placeholder");
  return out;
}

std::vector<ChatMessage> indicator_prompt(const PromptTemplates& templates, const Query& query,
                                          const std::vector<dsl::CatalogEntry>& examples, int few_shot) {
  std::string shots;
  const auto n = std::min(examples.size(), static_cast<std::size_t>(std::max(0, few_shot)));
  for (std::size_t e = 0; e < n; ++e)
    shots += "Request: " + examples[e].query + "\nObjective: " + examples[e].source + "\n\n";
  if (shots.empty()) shots = "(none)\n";
  return {{"system", render(templates.indicator_system, {{"grammar", kGrammar}})},
          {"user", render(templates.indicator_user, {{"examples", shots}, {"query", query.text}})}};
}

std::vector<ChatMessage> tailor_prompt(const PromptTemplates& templates, const GuideContext& ctx) {
  if (!ctx.history || !ctx.objective) throw std::invalid_argument("tailor_prompt: context lacks history or objective");
  const std::set<std::string> in_f = ctx.canonical ? objective_variables(*ctx.canonical) : std::set<std::string>{};
  std::string table;
  for (std::size_t v = 0; v < ctx.history->stats.size(); ++v) {
    const VariableStats& s = ctx.history->stats[v];
    table += s.name + " mean=" + fmt(s.mean) + " std=" + fmt(s.stddev) + " min=" + fmt(s.min) + " max=" + fmt(s.max) +
             (in_f.count(s.name) ? " in_objective" : "") + "\n";
  }
  std::string prev = "none";
  if (!ctx.previous_active.empty()) {
    prev.clear();
    for (const std::string& n : ctx.previous_active) prev += (prev.empty() ? "" : ", ") + n;
  }
  const auto n = ctx.history->stats.size();
  const auto keep = static_cast<std::size_t>(std::ceil((1.0 - ctx.fixed_fraction) * static_cast<double>(n) - 1e-9));
  std::string report = ctx.infeasibility_report.empty() ? "none" : ctx.infeasibility_report;
  return {{"system", render(templates.tailor_system, {{"format", kFormat}})},
          {"user", render(templates.tailor_user, {{"query", ctx.query},
                                                  {"objective", dsl::to_source(*ctx.objective)},
                                                  {"variables", table},
                                                  {"previous_active", prev},
                                                  {"previous_score", ctx.previous_score ? fmt(*ctx.previous_score) : "none"},
                                                  {"fixed_fraction", fmt(ctx.fixed_fraction)},
                                                  {"keep_count", std::to_string(keep)},
                                                  {"report", report}})}};
}

std::string extract_code(const std::string& reply) {
  const auto open = reply.find("```");
  if (open != std::string::npos) {
    auto start = reply.find('\n', open);
    const auto close = reply.find("```", open + 3);
    if (close != std::string::npos) {
      if (start == std::string::npos || start > close) start = open + 2;
      return trim(reply.substr(start + 1, close - start - 1));
    }
  }
  return trim(reply);
}

std::pair<std::vector<std::string>, std::string> parse_proposal_reply(const std::string& reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw FormatError("reply has no JSON object");
  const auto doc = nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw FormatError("reply JSON does not parse");
  if (!doc.contains("active") || !doc["active"].is_array()) throw FormatError("reply lacks an \"active\" list");
  std::vector<std::string> names;
  for (const auto& n : doc["active"]) {
    if (!n.is_string()) throw FormatError("\"active\" must list names");
    names.push_back(n.get<std::string>());
  }
  std::string why = doc.contains("rationale") && doc["rationale"].is_string() ? doc["rationale"].get<std::string>() : "";
  return {std::move(names), std::move(why)};
}

}  // namespace fleetopt::agent
