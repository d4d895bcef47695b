#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "fleetopt/agent/agent.hpp"

namespace fleetopt::agent {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::size_t keep_count(double fixed_fraction, std::size_t n) {
  const double keep = std::ceil((1.0 - fixed_fraction) * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, keep)));
}

}  // namespace

void Query::validate() const {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw std::invalid_argument("query text is empty");
}

std::vector<DomainAgent> default_registry() {
  return {{"taxi", {"taxi", "cab", "dispatch", "electric", "fleet", "charg", "soc", "fare", "passenger", "ride", "allocat",
                    "idle", "battery"}},
          {"delivery", {"parcel", "courier", "package", "shipment", "locker"}}};
}

MatchResult problem_match(const Query& query, const std::vector<DomainAgent>& registry) {
  if (registry.empty()) throw std::invalid_argument("problem_match: empty registry");
  const std::string q = lower(query.text);
  MatchResult best{registry.front().id, 0, true};
  for (const DomainAgent& a : registry) {
    int hits = 0;
    for (const std::string& kw : a.keywords) {
      if (kw.empty()) continue;
      for (auto pos = q.find(kw); pos != std::string::npos; pos = q.find(kw, pos + kw.size())) ++hits;
    }
    if (hits > best.hits) best = {a.id, hits, false};
  }
  return best;
}

std::set<std::string> objective_variables(const dsl::CanonicalForm& form) {
  std::set<std::string> names;
  for (const auto& [mono, c] : form.poly)
    for (const dsl::VarKey& k : mono) names.insert(k.str());
  for (const dsl::AbsTerm& t : form.abs_terms)
    for (const auto& [mono, c] : t.inner)
      for (const dsl::VarKey& k : mono) names.insert(k.str());
  return names;
}

std::vector<double> sensitivity_scores(const HistoryStore& history, const dsl::CanonicalForm* canonical) {
  double max_int = 0.0, max_cont = 0.0;
  for (const VariableStats& s : history.stats) {
    double& top = s.integer ? max_int : max_cont;
    top = std::max(top, s.stddev);
  }
  const std::set<std::string> in_f = canonical ? objective_variables(*canonical) : std::set<std::string>{};
  std::vector<double> scores;
  for (const VariableStats& s : history.stats) {
    const double top = s.integer ? max_int : max_cont;
    double score = top > 0.0 ? s.stddev / top : 0.0;
    if (in_f.count(s.name)) score += 0.5;
    scores.push_back(score);
  }
  return scores;
}

std::size_t DeterministicGuide::best_match(const std::string& query) const {
  if (catalog_.empty()) throw std::invalid_argument("deterministic guide: empty catalog");
  const std::string q = lower(query);
  std::size_t best = 0;
  double best_sim = -1.0;
  for (std::size_t e = 0; e < catalog_.size(); ++e) {
    const double sim = dsl::jaro_winkler(q, lower(catalog_[e].query));
    if (sim > best_sim) {
      best_sim = sim;
      best = e;
    }
  }
  return best;
}

std::string DeterministicGuide::generate(const Query& query, const FleetInstance&, int, int,
                                         const std::vector<IndicatorAttempt>&) {
  return catalog_[best_match(query.text)].source;
}

GuideProposal DeterministicGuide::propose(const GuideContext& ctx) {
  if (!ctx.history || ctx.history->stats.empty()) throw std::invalid_argument("deterministic guide: empty history");
  const auto& stats = ctx.history->stats;
  const std::vector<double> scores = sensitivity_scores(*ctx.history, ctx.canonical);
  std::vector<std::size_t> order(stats.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const std::size_t keep = keep_count(ctx.fixed_fraction, stats.size());
  std::vector<char> active(stats.size(), 0);
  for (std::size_t r = 0; r < keep; ++r) active[order[r]] = 1;
  int added = 0;
  for (const std::string& name : ctx.report_variables)
    if (const auto v = ctx.history->index_of(name); v && !active[*v]) {
      active[*v] = 1;
      ++added;
    }
  GuideProposal p;
  for (std::size_t v = 0; v < stats.size(); ++v)
    if (active[v]) p.active.push_back(stats[v].name);
  p.rationale = "kept the " + std::to_string(keep) + " variables with the highest historical variability" +
                std::string(ctx.canonical ? ", objective variables first" : "");
  if (added > 0) p.rationale += "; freed " + std::to_string(added) + " variables named in the conflict report";
  return p;
}

LlmGuide::LlmGuide(ChatTransport& transport, std::string model, PromptTemplates templates, int max_attempts,
                   std::vector<dsl::CatalogEntry> examples)
    : transport_(transport),
      model_(std::move(model)),
      templates_(std::move(templates)),
      max_attempts_(max_attempts),
      examples_(std::move(examples)) {
  if (max_attempts_ < 1) throw std::invalid_argument("LlmGuide: max_attempts must be positive");
}

std::string LlmGuide::generate(const Query& query, const FleetInstance&, int few_shot, int,
                               const std::vector<IndicatorAttempt>& previous) {
  ChatRequest req{model_, indicator_prompt(templates_, query, examples_, few_shot), 0.0};
  for (const IndicatorAttempt& a : previous) {
    req.messages.push_back({"assistant", a.reply});
    req.messages.push_back({"user", "The objective was rejected: " + a.diagnostic + "\nReturn a corrected objective."});
  }
  return transport_.complete(req);
}

GuideProposal LlmGuide::propose(const GuideContext& ctx) {
  if (!ctx.history) throw std::invalid_argument("LlmGuide: context lacks history");
  ChatRequest req{model_, tailor_prompt(templates_, ctx), 0.0};
  GuideProposal p;
  std::vector<std::string> errors;
  for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
    p.attempts = attempt;
    std::string reply;
    try {
      reply = transport_.complete(req);
    } catch (const TransportError& e) {
      errors.push_back("attempt " + std::to_string(attempt) + ": transport: " + e.what());
      continue;
    }
    try {
      auto [names, why] = parse_proposal_reply(reply);
      std::vector<std::string> kept;
      for (const std::string& n : names) {
        if (!ctx.history->index_of(n)) {
          p.warnings.push_back("unknown variable '" + n + "' dropped");
        } else if (std::find(kept.begin(), kept.end(), n) == kept.end()) {
          kept.push_back(n);
        }
      }
      if (kept.empty()) {
        p.warnings.push_back("no valid variable names; using the deterministic guide");
        break;
      }
      for (const std::string& n : ctx.report_variables)
        if (ctx.history->index_of(n) && std::find(kept.begin(), kept.end(), n) == kept.end()) kept.push_back(n);
      std::sort(kept.begin(), kept.end(), [&](const std::string& a, const std::string& b) {
        return *ctx.history->index_of(a) < *ctx.history->index_of(b);
      });
      p.active = std::move(kept);
      p.rationale = std::move(why);
      for (std::string& e : errors) p.warnings.push_back(std::move(e));
      return p;
    } catch (const FormatError& e) {
      errors.push_back("attempt " + std::to_string(attempt) + ": " + e.what());
      req.messages.push_back({"assistant", reply});
      req.messages.push_back({"user", std::string("That reply could not be read (") + e.what() +
                                          "). Reply with the JSON object only."});
    }
  }
  GuideProposal fb = fallback_.propose(ctx);
  fb.attempts = p.attempts;
  fb.fell_back = true;
  fb.warnings = std::move(p.warnings);
  for (std::string& e : errors) fb.warnings.push_back(std::move(e));
  return fb;
}

IndicatorResult indicator_generate(const Query& query, Guide& guide, const FleetInstance& instance, int few_shot,
                                   int max_attempts) {
  query.validate();
  if (max_attempts < 1) throw std::invalid_argument("indicator_generate: max_attempts must be positive");
  IndicatorResult result;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    IndicatorAttempt a;
    try {
      a.reply = guide.generate(query, instance, few_shot, attempt, result.attempts);
    } catch (const TransportError& e) {
      a.diagnostic = std::string("transport: ") + e.what();
      result.attempts.push_back(std::move(a));
      continue;
    }
    const std::string code = extract_code(a.reply);
    try {
      dsl::ObjectiveAst ast = dsl::parse(code);
      const dsl::Validation v = dsl::safeguard(ast, instance);
      if (!v.accepted) {
        a.diagnostic = v.report();
      } else {
        result.ast = std::move(ast);
        result.source = code;
        result.attempts.push_back(std::move(a));
        if (auto* det = dynamic_cast<DeterministicGuide*>(&guide)) result.catalog_index = det->best_match(query.text);
        return result;
      }
    } catch (const dsl::ParseError& e) {
      a.diagnostic = "line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) + ": " + e.what();
    }
    result.attempts.push_back(std::move(a));
  }
  throw IndicatorError("no valid objective after " + std::to_string(max_attempts) + " attempts", result.attempts);
}

}  // namespace fleetopt::agent
