#pragma once

// Adversarial correlation-query oracle. On a query phi it answers 0 and discards every member
// with |<f, phi>_D| >= tau; 0 is then a tau-accurate answer for each survivor. After the
// learner commits to a hypothesis h, the adversary picks a survivor whose correlation with the
// clamped hypothesis is at most tau.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hardness/bounds.hpp"
#include "hardness/family.hpp"
#include "hardness/variance.hpp"

namespace hardness {

/// Query psi(x, y) = y phi(x), with phi support-indexed and ||phi||_inf <= 1.
/// General statistical queries are deliberately not representable.
class CorrelationQuery {
public:
  explicit CorrelationQuery(RealTable phi) : phi_(std::move(phi)) { check_probe(phi_); }
  std::span<const double> phi() const { return phi_; }

private:
  RealTable phi_;
};

/// FNV-1a over the IEEE bytes of the table.
inline std::uint64_t table_digest(std::span<const double> table) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : table) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

struct TranscriptEntry {
  std::uint64_t digest = 0;
  double response = 0.0;
  std::size_t correlated = 0; // |A_phi| over the whole family
  std::size_t removed = 0;    // survivors discarded by this query
  std::size_t survivors = 0;  // after the query
  std::optional<RealTable> table;
};

class CsqOracle {
public:
  CsqOracle(const LabeledFamily& family, double tau, bool keep_tables = false)
      : family_(&family), tau_(tau), keep_tables_(keep_tables), alive_(family.size(), 1),
        survivors_(family.size()) {
    if (!(tau > 0.0))
      throw ParamError("tolerance tau must be positive");
  }

  /// Always answers 0. Members with |<f, phi>_D| >= tau (ties included) are eliminated.
  double answer(const CorrelationQuery& q) {
    if (q.phi().size() != family_->support_size())
      throw DimensionError("query length does not match the family support");
    TranscriptEntry e;
    e.digest = table_digest(q.phi());
    for (std::size_t i = 0; i < family_->size(); ++i) {
      if (std::abs(family_->inner(i, q.phi())) >= tau_) {
        ++e.correlated;
        if (alive_[i]) {
          alive_[i] = 0;
          ++e.removed;
        }
      }
    }
    survivors_ -= e.removed;
    e.survivors = survivors_;
    if (keep_tables_)
      e.table = RealTable(q.phi().begin(), q.phi().end());
    transcript_.push_back(std::move(e));
    return 0.0;
  }

  const LabeledFamily& family() const { return *family_; }
  double tau() const { return tau_; }
  std::size_t survivor_count() const { return survivors_; }
  bool alive(std::size_t i) const { return alive_.at(i) != 0; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }

  std::vector<std::size_t> survivors() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < alive_.size(); ++i)
      if (alive_[i])
        out.push_back(i);
    return out;
  }

private:
  const LabeledFamily* family_;
  double tau_;
  bool keep_tables_;
  std::vector<char> alive_;
  std::size_t survivors_;
  std::vector<TranscriptEntry> transcript_;
};

inline double oracle_answer(CsqOracle& state, const CorrelationQuery& q) { return state.answer(q); }

/// Sign of h for the zero-one loss, truncation to [-1, 1] otherwise.
inline RealTable clamp_hypothesis(std::span<const double> h, const LossSpec& loss) {
  RealTable out(h.size());
  for (std::size_t j = 0; j < h.size(); ++j)
    out[j] = loss.id == LossId::ZeroOne ? sign_of(h[j]) : std::clamp(h[j], -1.0, 1.0);
  return out;
}

inline double member_loss(const LabeledFamily& a, std::size_t i, std::span<const double> h,
                          const LossSpec& loss) {
  const Member& m = a.member(i);
  double acc = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j)
    acc += m.D[j] * loss.value(h[j], m.f[j]);
  return acc;
}

struct FinalReport {
  std::size_t worst_member = 0;
  double correlation = 0.0;     // <f, clamped h>_D of the chosen survivor
  double loss = 0.0;            // exact loss of h on it
  double clamped_loss = 0.0;    // exact loss of the clamped hypothesis
  double floor = 0.0;           // a - b tau
  bool satisfied = false;       // loss >= floor
  RealTable clamped_h;
};

/// Among survivors with |<f, clamped h>_D| <= tau, picks the one on which h does worst.
inline FinalReport finalize(const CsqOracle& state, std::span<const double> h,
                            const LossSpec& loss) {
  const LabeledFamily& a = state.family();
  if (h.size() != a.support_size())
    throw DimensionError("hypothesis length does not match the family support");
  FinalReport r;
  r.clamped_h = clamp_hypothesis(h, loss);
  r.floor = csq_loss_floor(loss, state.tau());
  bool found = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!state.alive(i))
      continue;
    const double c = a.inner(i, r.clamped_h);
    if (std::abs(c) > state.tau())
      continue;
    const double value = member_loss(a, i, h, loss);
    if (!found || value > r.loss) {
      found = true;
      r.worst_member = i;
      r.correlation = c;
      r.loss = value;
    }
  }
  if (!found)
    throw BudgetExceeded("no surviving member has correlation <= tau with the hypothesis");
  r.clamped_loss = member_loss(a, r.worst_member, r.clamped_h, loss);
  r.satisfied = r.loss >= r.floor - 1e-12;
  return r;
}

/// A learner interacting only through correlation queries.
class Learner {
public:
  virtual ~Learner() = default;
  /// The next query, or nullopt once done. `last_response` answers the previous query.
  virtual std::optional<RealTable> next_query(std::size_t round,
                                              std::optional<double> last_response) = 0;
  virtual RealTable hypothesis() = 0;
};

class ScriptedLearner : public Learner {
public:
  ScriptedLearner(std::vector<RealTable> queries, RealTable hypothesis)
      : queries_(std::move(queries)), hypothesis_(std::move(hypothesis)) {}

  std::optional<RealTable> next_query(std::size_t round, std::optional<double>) override {
    if (round >= queries_.size())
      return std::nullopt;
    return queries_[round];
  }
  RealTable hypothesis() override { return hypothesis_; }

private:
  std::vector<RealTable> queries_;
  RealTable hypothesis_;
};

struct LearnerReport {
  std::vector<TranscriptEntry> transcript;
  std::size_t queries = 0;
  bool truncated = false;
  double query_bound = 0.0; // tau^2 / Var - 1
  double var = 0.0;
  std::size_t certificate_violations = 0; // queries with |A_phi| > (Var / tau^2) |A|
  std::size_t survivors = 0;
  std::optional<FinalReport> final;
  bool budget_exceeded = false;
};

/// Drives the learner against the adversarial oracle. `var` is Var(A) or an upper bound.
inline LearnerReport run_learner(Learner& learner, const LabeledFamily& a, double tau,
                                 const LossSpec& loss, std::size_t max_queries, double var,
                                 bool keep_tables = false) {
  CsqOracle oracle(a, tau, keep_tables);
  LearnerReport r;
  r.var = var;
  r.query_bound = csq_query_bound(tau, var);
  const double cap = var / (tau * tau) * static_cast<double>(a.size());
  std::optional<double> last;
  for (std::size_t round = 0;; ++round) {
    std::optional<RealTable> q = learner.next_query(round, last);
    if (!q)
      break;
    if (round >= max_queries) {
      r.truncated = true;
      break;
    }
    last = oracle.answer(CorrelationQuery(std::move(*q)));
    if (static_cast<double>(oracle.transcript().back().correlated) > cap * (1.0 + 1e-12))
      ++r.certificate_violations;
  }
  r.queries = oracle.transcript().size();
  r.transcript = oracle.transcript();
  r.survivors = oracle.survivor_count();
  try {
    r.final = finalize(oracle, learner.hypothesis(), loss);
  } catch (const BudgetExceeded&) {
    r.budget_exceeded = true;
  }
  return r;
}

/// Survivor set obtained by replaying full query tables.
inline std::vector<std::size_t> replay(const LabeledFamily& a, double tau,
                                       std::span<const RealTable> queries) {
  CsqOracle oracle(a, tau);
  for (const auto& q : queries)
    oracle.answer(CorrelationQuery(q));
  return oracle.survivors();
}

} // namespace hardness
