#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetopt/agent/chat.hpp"
#include "fleetopt/agent/history.hpp"
#include "fleetopt/dsl/dsl.hpp"
#include "fleetopt/mip/problem.hpp"
#include "fleetopt/rf_encoder.hpp"

namespace fleetopt::agent {

struct Query {
  std::string text;
  std::string domain;  // optional tag

  void validate() const;
};

struct DomainAgent {
  std::string id;
  std::vector<std::string> keywords;  // lowercase
};

struct MatchResult {
  std::string id;
  int hits = 0;
  bool low_confidence = false;
};

/// The taxi agent first; it is also the fallback.
std::vector<DomainAgent> default_registry();

/// Counts keyword occurrences in the lowercased query; most hits wins, ties
/// to the earlier entry. No hits selects the first entry with
/// low_confidence set. Throws std::invalid_argument on an empty registry.
MatchResult problem_match(const Query& query, const std::vector<DomainAgent>& registry);

/// Placeholders are written {{name}}.
struct PromptTemplates {
  std::string indicator_system;  // {{grammar}}
  std::string indicator_user;    // {{examples}} {{query}}
  std::string tailor_system;     // {{format}}
  std::string tailor_user;       // {{query}} {{objective}} {{variables}} {{previous_active}} {{previous_score}} {{fixed_fraction}} {{keep_count}} {{report}}

  static PromptTemplates defaults();
};

/// Fills every {{name}} from `values`. Throws std::invalid_argument when a
/// placeholder has no value or a value is never used.
std::string render(const std::string& tmpl, const std::map<std::string, std::string>& values);

struct GuideContext {
  std::string query;
  const dsl::ObjectiveAst* objective = nullptr;
  const dsl::CanonicalForm* canonical = nullptr;
  const HistoryStore* history = nullptr;
  std::vector<std::string> previous_active;
  std::optional<double> previous_score;
  int iteration = 1;
  double fixed_fraction = 0.25;
  std::string infeasibility_report;  // non-empty when re-prompted after an infeasible fix
  std::vector<std::string> report_variables;
};

struct GuideProposal {
  std::vector<std::string> active;
  std::string rationale;
  std::vector<std::string> warnings;
  int attempts = 1;
  bool fell_back = false;  // LLM guide gave up and used the deterministic guide
};

struct IndicatorAttempt {
  std::string reply;
  std::string diagnostic;  // empty when accepted
};

struct IndicatorResult {
  dsl::ObjectiveAst ast;
  std::string source;
  std::vector<IndicatorAttempt> attempts;
  std::optional<std::size_t> catalog_index;  // deterministic guide only
};

class IndicatorError : public std::runtime_error {
 public:
  IndicatorError(const std::string& what, std::vector<IndicatorAttempt> attempts)
      : std::runtime_error(what), attempts_(std::move(attempts)) {}
  const std::vector<IndicatorAttempt>& attempts() const { return attempts_; }

 private:
  std::vector<IndicatorAttempt> attempts_;
};

class Guide {
 public:
  virtual ~Guide() = default;
  virtual std::string name() const = 0;
  /// Objective text for a query, before parsing and validation.
  virtual std::string generate(const Query& query, const FleetInstance& instance, int few_shot, int attempt,
                               const std::vector<IndicatorAttempt>& previous) = 0;
  virtual GuideProposal propose(const GuideContext& context) = 0;
};

/// Offline guide: catalog lookup for objectives, sensitivity ranking for
/// variable selection.
class DeterministicGuide : public Guide {
 public:
  explicit DeterministicGuide(std::vector<dsl::CatalogEntry> catalog = dsl::builtin_catalog())
      : catalog_(std::move(catalog)) {}
  std::string name() const override { return "deterministic"; }
  std::string generate(const Query& query, const FleetInstance& instance, int few_shot, int attempt,
                       const std::vector<IndicatorAttempt>& previous) override;
  GuideProposal propose(const GuideContext& context) override;

  /// Catalog entry with the highest Jaro-Winkler similarity between the
  /// lowercased query texts (ties to the lowest index).
  std::size_t best_match(const std::string& query) const;
  const std::vector<dsl::CatalogEntry>& catalog() const { return catalog_; }

 private:
  std::vector<dsl::CatalogEntry> catalog_;
};

/// Names of the decision variables with a nonzero coefficient, including
/// those inside abs terms.
std::set<std::string> objective_variables(const dsl::CanonicalForm& form);

/// Per-variable score used by the deterministic guide: standard deviation
/// divided by the largest one of the same kind (x or u_hat), plus 0.5 when
/// the variable appears in the objective's canonical form.
std::vector<double> sensitivity_scores(const HistoryStore& history, const dsl::CanonicalForm* canonical);

class LlmGuide : public Guide {
 public:
  LlmGuide(ChatTransport& transport, std::string model, PromptTemplates templates = PromptTemplates::defaults(),
           int max_attempts = 3, std::vector<dsl::CatalogEntry> examples = dsl::builtin_catalog());
  std::string name() const override { return "llm"; }
  std::string generate(const Query& query, const FleetInstance& instance, int few_shot, int attempt,
                       const std::vector<IndicatorAttempt>& previous) override;
  GuideProposal propose(const GuideContext& context) override;
  /// Few-shot pairs for generate(), used in order.
  void set_examples(std::vector<dsl::CatalogEntry> examples) { examples_ = std::move(examples); }

 private:
  ChatTransport& transport_;
  std::string model_;
  PromptTemplates templates_;
  int max_attempts_;
  std::vector<dsl::CatalogEntry> examples_;
  DeterministicGuide fallback_;
};

/// Rendered prompts, exposed for inspection and tests. The indicator prompt
/// shows the first `few_shot` examples.
std::vector<ChatMessage> indicator_prompt(const PromptTemplates& templates, const Query& query,
                                          const std::vector<dsl::CatalogEntry>& examples, int few_shot);
std::vector<ChatMessage> tailor_prompt(const PromptTemplates& templates, const GuideContext& context);

/// Extracts the DSL text from a reply: the first fenced block when present,
/// otherwise the trimmed reply.
std::string extract_code(const std::string& reply);

/// Parses {"active": [...], "rationale": "..."} from a reply (the outermost
/// braces). Throws FormatError.
std::pair<std::vector<std::string>, std::string> parse_proposal_reply(const std::string& reply);

/// Parse and safeguard each generated text; up to `max_attempts`, each retry
/// sees the previous diagnostics. Throws IndicatorError when all fail.
IndicatorResult indicator_generate(const Query& query, Guide& guide, const FleetInstance& instance, int few_shot = 8,
                                   int max_attempts = 3);

/// Improvement of f over the baseline, oriented by the sense; relative to
/// |f_hist| unless |f_hist| < 1e-9, where the absolute difference is used.
double satisfaction_score(mip::Sense sense, double f_new, double f_hist);
double satisfaction_score(const dsl::ObjectiveAst& objective, const FleetInstance& instance, const Decision& y_star,
                          const Decision& y_hist);

struct AgentConfig {
  int t_max = 5;
  int few_shot = 8;
  std::vector<double> fixed_schedule{0.25, 0.5, 0.75};  // last value repeats
  mip::SolveConfig solve = default_solve();
  EncoderConfig encoder;
  dsl::LowerOptions lower;

  static mip::SolveConfig default_solve();
  double fixed_fraction(int iteration) const;
  void validate() const;
};

struct IterationRecord {
  int t = 0;
  std::vector<std::string> active;
  std::vector<std::pair<std::string, double>> fixed;
  std::vector<std::string> events;  // re-prompts, fallbacks, warnings
  std::string status;               // solver status of the accepted model
  Decision decision;
  double g = 0.0;  // forest objective
  double f = 0.0;  // query objective
  double score = 0.0;
  long nodes = 0;
  double wall_seconds = 0.0;  // solver time
};

struct AgentTrace {
  std::string query;
  std::string objective_source;
  std::string guide;
  double f_hist = 0.0;
  Decision baseline;
  std::vector<IterationRecord> iterations;
  std::size_t best = 0;
  Decision y_best;
  double s_best = 0.0;

  /// Timing fields are left out unless asked for, so traces of equal runs
  /// serialize identically.
  nlohmann::json to_json(bool with_timing = false) const;
};

/// Forest model plus fleet rows plus the lowered query objective as the
/// secondary objective.
struct AgentModel {
  FeatureMip feature;
  dsl::DecisionVars vars;
  dsl::Lowered lowered;
  std::vector<std::string> names;  // decision variables, feature order
  std::vector<int> columns;        // MIP column per decision variable
};

AgentModel build_agent_model(const FleetInstance& instance, const Forest& forest, std::span<const double> exogenous,
                             const dsl::ObjectiveAst& objective, const AgentConfig& config = {});

/// Value a fixed variable takes: the historical mean, rounded half-up and
/// clamped for integers, clamped to the fare bounds and snapped to the
/// nearest grid fare (ties low) when the fare is grid-restricted.
double fixed_value(const AgentModel& model, const HistoryStore& history, std::size_t variable);

/// Fixes every variable outside `active`.
std::vector<std::pair<int, double>> fixing_for(const AgentModel& model, const HistoryStore& history,
                                               const std::vector<std::string>& active);

/// Supply rows violated by a fixing; empty when the fixed values fit.
std::vector<std::string> fixing_conflicts(const AgentModel& model, const FleetInstance& instance,
                                          const std::vector<std::pair<int, double>>& fixing,
                                          std::vector<std::string>* involved = nullptr);

struct SolvedModel {
  mip::Solution solution;
  Decision decision;
  double g = 0.0;
  double f = 0.0;
};

/// Lexicographic solve of the model with `fixing` applied.
SolvedModel solve_fixed(const AgentModel& model, const FleetInstance& instance, const dsl::ObjectiveAst& objective,
                        const std::vector<std::pair<int, double>>& fixing, const mip::SolveConfig& config);

/// One guided step for context.iteration: proposal, infeasible-fix recovery,
/// lexicographic solve and the score against f_hist. wall_seconds is solver
/// time only.
IterationRecord agent_step(const AgentModel& model, const FleetInstance& instance, const dsl::ObjectiveAst& objective,
                           const HistoryStore& history, Guide& guide, GuideContext context,
                           const mip::SolveConfig& solve, double f_hist);

/// Fix-and-resolve loop. Iteration t asks the guide for the active set,
/// fixes the rest, solves lexicographically and scores the query objective
/// against the historical baseline; it stops at t_max or the first time the
/// score fails to improve. An infeasible fixing re-prompts the guide once
/// with the conflict report, then falls back to the deterministic guide,
/// then to the full model.
AgentTrace run_agent(const Query& query, const dsl::ObjectiveAst& objective, const FleetInstance& instance,
                     std::span<const double> exogenous, const Forest& forest, const HistoryStore& history,
                     Guide& guide, const AgentConfig& config = {});

/// Plain-text summary of a finished trace.
std::string response_format(const AgentTrace& trace, const FleetInstance& instance);

}  // namespace fleetopt::agent
