#pragma once

// Existential linear arithmetic over the naturals: systems are boolean
// combinations (and/or) of integer-linear atoms. `solve` case-splits
// disjunctions lazily and decides each conjunctive core by branch-and-bound
// over an LP relaxation; every candidate model is checked exactly.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "machines.hpp"

namespace paramck {

enum class Rel : std::uint8_t { le, ge, eq };

/// Sparse integer combination of variables plus a constant.
struct LinearExpr {
  std::vector<std::pair<int, std::int64_t>> terms;
  std::int64_t constant = 0;

  LinearExpr() = default;
  explicit LinearExpr(std::int64_t c) : constant(c) {}

  static LinearExpr var(int v, std::int64_t coeff = 1) {
    LinearExpr e;
    e.terms.emplace_back(v, coeff);
    return e;
  }

  LinearExpr& add(int v, std::int64_t coeff = 1) {
    terms.emplace_back(v, coeff);
    return *this;
  }
  LinearExpr& operator+=(const LinearExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  LinearExpr& operator-=(const LinearExpr& o) {
    for (auto [v, c] : o.terms) terms.emplace_back(v, -c);
    constant -= o.constant;
    return *this;
  }
  friend LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
  friend LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }

  /// Merges duplicate variables and drops zero coefficients.
  LinearExpr normalized() const {
    std::map<int, std::int64_t> m;
    for (auto [v, c] : terms) m[v] += c;
    LinearExpr e(constant);
    for (auto [v, c] : m)
      if (c != 0) e.terms.emplace_back(v, c);
    return e;
  }
};

/// sum(terms) rel rhs
struct LinearAtom {
  std::vector<std::pair<int, std::int64_t>> terms;
  Rel rel = Rel::eq;
  std::int64_t rhs = 0;
};

class Constraint {
 public:
  enum class Kind : std::uint8_t { truth, falsity, atom, all, any };

  static Constraint truth() { return Constraint(Kind::truth); }
  static Constraint falsity() { return Constraint(Kind::falsity); }

  static Constraint compare(const LinearExpr& lhs, Rel rel, const LinearExpr& rhs) {
    auto e = (lhs - rhs).normalized();
    Constraint c(Kind::atom);
    c.atom_.terms = std::move(e.terms);
    c.atom_.rel = rel;
    c.atom_.rhs = -e.constant;
    if (c.atom_.terms.empty()) {
      const auto r = c.atom_.rhs;
      const bool ok = rel == Rel::le ? 0 <= r : rel == Rel::ge ? 0 >= r : r == 0;
      return ok ? truth() : falsity();
    }
    return c;
  }
  static Constraint eq(const LinearExpr& a, const LinearExpr& b) { return compare(a, Rel::eq, b); }
  static Constraint le(const LinearExpr& a, const LinearExpr& b) { return compare(a, Rel::le, b); }
  static Constraint ge(const LinearExpr& a, const LinearExpr& b) { return compare(a, Rel::ge, b); }

  static Constraint all(std::vector<Constraint> cs) { return junction(Kind::all, std::move(cs)); }
  static Constraint any(std::vector<Constraint> cs) { return junction(Kind::any, std::move(cs)); }

  Kind kind() const { return kind_; }
  const LinearAtom& atom() const { return atom_; }
  const std::vector<Constraint>& children() const { return children_; }

 private:
  explicit Constraint(Kind k) : kind_(k) {}

  static Constraint junction(Kind k, std::vector<Constraint> cs) {
    const Kind unit = k == Kind::all ? Kind::truth : Kind::falsity;
    const Kind zero = k == Kind::all ? Kind::falsity : Kind::truth;
    Constraint out(k);
    for (auto& c : cs) {
      if (c.kind_ == zero) return Constraint(zero);
      if (c.kind_ == unit) continue;
      if (c.kind_ == k) {
        for (auto& g : c.children_) out.children_.push_back(std::move(g));
      } else {
        out.children_.push_back(std::move(c));
      }
    }
    if (out.children_.empty()) return Constraint(unit);
    if (out.children_.size() == 1) return std::move(out.children_.front());
    return out;
  }

  Kind kind_;
  LinearAtom atom_;
  std::vector<Constraint> children_;
};

/// Natural-number variables and a conjunction of constraints over them.
class LinearSystem {
 public:
  int add_variable(std::string name) {
    names_.push_back(std::move(name));
    return static_cast<int>(names_.size()) - 1;
  }

  void require(Constraint c) {
    if (c.kind() == Constraint::Kind::truth) return;
    constraints_.push_back(std::move(c));
  }

  std::size_t variable_count() const { return names_.size(); }
  const std::string& name(int v) const { return names_.at(static_cast<std::size_t>(v)); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

 private:
  std::vector<std::string> names_;
  std::vector<Constraint> constraints_;
};

using Assignment = std::vector<std::int64_t>;

inline bool holds(const LinearAtom& a, const Assignment& x) {
  __int128 s = 0;
  for (auto [v, c] : a.terms) s += static_cast<__int128>(c) * x.at(static_cast<std::size_t>(v));
  switch (a.rel) {
    case Rel::le: return s <= a.rhs;
    case Rel::ge: return s >= a.rhs;
    case Rel::eq: return s == a.rhs;
  }
  return false;
}

inline bool holds(const Constraint& c, const Assignment& x) {
  switch (c.kind()) {
    case Constraint::Kind::truth: return true;
    case Constraint::Kind::falsity: return false;
    case Constraint::Kind::atom: return holds(c.atom(), x);
    case Constraint::Kind::all:
      return std::all_of(c.children().begin(), c.children().end(),
                         [&](const Constraint& g) { return holds(g, x); });
    case Constraint::Kind::any:
      return std::any_of(c.children().begin(), c.children().end(),
                         [&](const Constraint& g) { return holds(g, x); });
  }
  return false;
}

inline bool satisfies(const LinearSystem& sys, const Assignment& x) {
  if (x.size() != sys.variable_count()) return false;
  if (std::any_of(x.begin(), x.end(), [](std::int64_t v) { return v < 0; })) return false;
  return std::all_of(sys.constraints().begin(), sys.constraints().end(),
                     [&](const Constraint& c) { return holds(c, x); });
}

// ---------------------------------------------------------------------------
// SMT-LIB2 dump

namespace detail {

inline std::string smt_symbol(const std::string& s) {
  bool simple = !s.empty() && !std::isdigit(static_cast<unsigned char>(s[0]));
  for (char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.')) simple = false;
  return simple ? s : "|" + s + "|";
}

inline std::string smt_int(std::int64_t v) {
  if (v >= 0) return std::to_string(v);
  return "(- " + std::to_string(0 - static_cast<std::uint64_t>(v)) + ")";
}

inline void smt_constraint(std::ostream& os, const LinearSystem& sys, const Constraint& c) {
  switch (c.kind()) {
    case Constraint::Kind::truth: os << "true"; return;
    case Constraint::Kind::falsity: os << "false"; return;
    case Constraint::Kind::atom: {
      const auto& a = c.atom();
      os << "(" << (a.rel == Rel::le ? "<=" : a.rel == Rel::ge ? ">=" : "=") << " (+ 0";
      for (auto [v, k] : a.terms)
        os << " (* " << smt_int(k) << " " << smt_symbol(sys.name(v)) << ")";
      os << ") " << smt_int(a.rhs) << ")";
      return;
    }
    case Constraint::Kind::all:
    case Constraint::Kind::any:
      os << (c.kind() == Constraint::Kind::all ? "(and" : "(or");
      for (const auto& g : c.children()) {
        os << " ";
        smt_constraint(os, sys, g);
      }
      os << ")";
      return;
  }
}

}  // namespace detail

/// SMT-LIB2 script (QF_LIA) asserting the system; variables are declared Int
/// with explicit non-negativity.
inline std::string to_smtlib(const LinearSystem& sys) {
  std::ostringstream os;
  os << "(set-logic QF_LIA)\n";
  for (const auto& n : sys.names()) {
    const auto s = detail::smt_symbol(n);
    os << "(declare-fun " << s << " () Int)\n(assert (>= " << s << " 0))\n";
  }
  for (const auto& c : sys.constraints()) {
    os << "(assert ";
    detail::smt_constraint(os, sys, c);
    os << ")\n";
  }
  os << "(check-sat)\n(get-model)\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Solver

struct SolverOptions {
  /// Total LP relaxations solved before giving up with BudgetExceeded.
  std::size_t node_budget = 2'000'000;
};

struct SolverStats {
  std::size_t lp_solves = 0;
  std::size_t splits = 0;
};

namespace detail {

/// Dense simplex for: maximize c.x subject to A x <= b, x >= 0. Bland's rule
/// on both phases, so degenerate flow systems cannot cycle.
class Simplex {
 public:
  Simplex(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
          const std::vector<double>& c)
      : m_(b.size()), n_(c.size()), basis_(m_), nonbasis_(n_ + 1),
        t_(m_ + 2, std::vector<double>(n_ + 2, 0.0)) {
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) t_[i][j] = a[i][j];
      basis_[i] = static_cast<int>(n_ + i);
      t_[i][n_] = -1;
      t_[i][n_ + 1] = b[i];
    }
    for (std::size_t j = 0; j < n_; ++j) {
      nonbasis_[j] = static_cast<int>(j);
      t_[m_][j] = -c[j];
    }
    nonbasis_[n_] = -1;
    t_[m_ + 1][n_] = 1;
  }

  /// Returns nullopt when infeasible. Unbounded problems never arise here
  /// (callers minimize a non-negative objective).
  std::optional<std::vector<double>> solve() {
    std::size_t r = 0;
    for (std::size_t i = 1; i < m_; ++i)
      if (t_[i][n_ + 1] < t_[r][n_ + 1]) r = i;
    if (m_ > 0 && t_[r][n_ + 1] < -kEps) {
      pivot(r, n_);
      if (!run(true) || t_[m_ + 1][n_ + 1] < -kEps) return std::nullopt;
      for (std::size_t i = 0; i < m_; ++i)
        if (basis_[i] == -1) {
          std::size_t s = 0;
          for (std::size_t j = 1; j <= n_; ++j)
            if (t_[i][j] < t_[i][s] || (t_[i][j] == t_[i][s] && nonbasis_[j] < nonbasis_[s]))
              s = j;
          pivot(i, s);
        }
    }
    if (!run(false)) return std::nullopt;
    std::vector<double> x(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] >= 0 && static_cast<std::size_t>(basis_[i]) < n_)
        x[static_cast<std::size_t>(basis_[i])] = t_[i][n_ + 1];
    return x;
  }

 private:
  static constexpr double kEps = 1e-9;

  void pivot(std::size_t r, std::size_t s) {
    const double inv = 1.0 / t_[r][s];
    for (std::size_t i = 0; i < m_ + 2; ++i) {
      if (i == r) continue;
      const double f = t_[i][s] * inv;
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n_ + 2; ++j)
        if (j != s) t_[i][j] -= t_[r][j] * f;
    }
    for (std::size_t j = 0; j < n_ + 2; ++j)
      if (j != s) t_[r][j] *= inv;
    for (std::size_t i = 0; i < m_ + 2; ++i)
      if (i != r) t_[i][s] *= -inv;
    t_[r][s] = inv;
    std::swap(basis_[r], nonbasis_[s]);
  }

  bool run(bool phase_one) {
    const std::size_t row = phase_one ? m_ + 1 : m_;
    for (std::size_t iter = 0;; ++iter) {
      if (iter > 50'000) throw BudgetExceeded("simplex iteration limit");
      std::size_t s = n_ + 1;
      for (std::size_t j = 0; j <= n_; ++j) {
        if (!phase_one && nonbasis_[j] == -1) continue;
        if (t_[row][j] < -kEps && (s == n_ + 1 || nonbasis_[j] < nonbasis_[s])) s = j;
      }
      if (s == n_ + 1) return true;
      std::size_t r = m_;
      double best = 0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (t_[i][s] <= kEps) continue;
        const double ratio = t_[i][n_ + 1] / t_[i][s];
        if (r == m_ || ratio < best - kEps ||
            (ratio <= best + kEps && basis_[i] < basis_[r])) {
          r = i;
          best = ratio;
        }
      }
      if (r == m_) return false;
      pivot(r, s);
    }
  }

  std::size_t m_, n_;
  std::vector<int> basis_, nonbasis_;
  std::vector<std::vector<double>> t_;
};

/// log2 of the classic small-solution bound n(ma)^(2m+1), capped at 62.
inline int box_log2(const std::vector<const LinearAtom*>& atoms, std::size_t vars) {
  double a = 1;
  for (const auto* at : atoms) {
    a = std::max(a, std::fabs(static_cast<double>(at->rhs)));
    for (auto [v, c] : at->terms) a = std::max(a, std::fabs(static_cast<double>(c)));
  }
  const double m = static_cast<double>(std::max<std::size_t>(atoms.size(), 1));
  const double bits = std::log2(static_cast<double>(std::max<std::size_t>(vars, 1))) +
                      (2 * m + 1) * std::log2(m * a);
  return static_cast<int>(std::min(62.0, std::ceil(bits)));
}

class IlpSearch {
 public:
  IlpSearch(const LinearSystem& sys, const SolverOptions& opts, SolverStats& stats)
      : sys_(sys), opts_(opts), stats_(stats) {}

  std::optional<Assignment> run(const std::vector<const Constraint*>& roots) {
    std::vector<const LinearAtom*> committed;
    std::vector<const Constraint*> pending;
    for (const auto* c : roots) absorb(*c, committed, pending);
    if (failed_) return std::nullopt;
    return dpll(committed, pending);
  }

 private:
  // Atoms go to the committed core, nested junctions stay pending.
  void absorb(const Constraint& c, std::vector<const LinearAtom*>& committed,
              std::vector<const Constraint*>& pending) {
    switch (c.kind()) {
      case Constraint::Kind::truth: return;
      case Constraint::Kind::falsity: failed_ = true; return;
      case Constraint::Kind::atom: committed.push_back(&c.atom()); return;
      case Constraint::Kind::all:
        for (const auto& g : c.children()) absorb(g, committed, pending);
        return;
      case Constraint::Kind::any: pending.push_back(&c); return;
    }
  }

  static std::size_t violations(const Constraint& c, const Assignment& x) {
    switch (c.kind()) {
      case Constraint::Kind::truth: return 0;
      case Constraint::Kind::falsity: return 1;
      case Constraint::Kind::atom: return holds(c.atom(), x) ? 0 : 1;
      case Constraint::Kind::all: {
        std::size_t n = 0;
        for (const auto& g : c.children()) n += violations(g, x);
        return n;
      }
      case Constraint::Kind::any: return holds(c, x) ? 0 : 1;
    }
    return 1;
  }

  std::optional<Assignment> dpll(std::vector<const LinearAtom*> committed,
                                 std::vector<const Constraint*> pending) {
    auto sol = ilp(committed);
    if (!sol) return std::nullopt;
    auto it = std::find_if(pending.begin(), pending.end(),
                           [&](const Constraint* c) { return !holds(*c, *sol); });
    if (it == pending.end()) return sol;
    const Constraint* split = *it;
    pending.erase(it);
    ++stats_.splits;

    std::vector<const Constraint*> order;
    for (const auto& g : split->children()) order.push_back(&g);
    std::stable_sort(order.begin(), order.end(), [&](const Constraint* a, const Constraint* b) {
      return violations(*a, *sol) < violations(*b, *sol);
    });
    for (const auto* g : order) {
      auto c2 = committed;
      auto p2 = pending;
      failed_ = false;
      absorb(*g, c2, p2);
      if (failed_) continue;
      if (auto r = dpll(std::move(c2), std::move(p2))) return r;
    }
    return std::nullopt;
  }

  struct Bound {
    int var;
    bool upper;
    std::int64_t value;
  };

  std::optional<Assignment> ilp(const std::vector<const LinearAtom*>& atoms) {
    // Only variables mentioned by the core enter the LP; the rest stay 0.
    std::vector<int> cols;
    std::vector<int> col_of(sys_.variable_count(), -1);
    for (const auto* a : atoms)
      for (auto [v, c] : a->terms)
        if (col_of[static_cast<std::size_t>(v)] < 0) {
          col_of[static_cast<std::size_t>(v)] = static_cast<int>(cols.size());
          cols.push_back(v);
        }
    const std::int64_t box = std::int64_t{1} << box_log2(atoms, cols.size());

    std::vector<std::vector<Bound>> stack{{}};
    while (!stack.empty()) {
      auto bounds = std::move(stack.back());
      stack.pop_back();
      if (++stats_.lp_solves > opts_.node_budget)
        throw BudgetExceeded("solver node budget exceeded");
      auto x = relax(atoms, cols, col_of, bounds);
      if (!x) continue;

      std::size_t frac = cols.size();
      double worst = 1e-6;
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const double d = std::fabs((*x)[j] - std::round((*x)[j]));
        if (d > worst) {
          worst = d;
          frac = j;
          break;
        }
      }
      if (frac == cols.size()) {
        Assignment out(sys_.variable_count(), 0);
        bool in_box = true;
        for (std::size_t j = 0; j < cols.size(); ++j) {
          const double r = std::max(0.0, std::round((*x)[j]));
          if (r > static_cast<double>(box)) in_box = false;
          out[static_cast<std::size_t>(cols[j])] = static_cast<std::int64_t>(r);
        }
        if (!in_box) continue;
        if (std::all_of(atoms.begin(), atoms.end(),
                        [&](const LinearAtom* a) { return holds(*a, out); }))
          return out;
        throw Error("solver lost precision on an integral relaxation");
      }
      const double v = (*x)[frac];
      const auto lo = static_cast<std::int64_t>(std::floor(v));
      auto up = bounds;
      up.push_back({cols[frac], false, lo + 1});
      if (lo + 1 <= box) stack.push_back(std::move(up));
      bounds.push_back({cols[frac], true, lo});
      stack.push_back(std::move(bounds));
    }
    return std::nullopt;
  }

  std::optional<std::vector<double>> relax(const std::vector<const LinearAtom*>& atoms,
                                           const std::vector<int>& cols,
                                           const std::vector<int>& col_of,
                                           const std::vector<Bound>& bounds) {
    const std::size_t n = cols.size();
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    auto row = [&](const std::vector<std::pair<int, std::int64_t>>& terms, double sign,
                   double rhs) {
      std::vector<double> r(n, 0.0);
      for (auto [v, c] : terms)
        r[static_cast<std::size_t>(col_of[static_cast<std::size_t>(v)])] +=
            sign * static_cast<double>(c);
      a.push_back(std::move(r));
      b.push_back(sign * rhs);
    };
    for (const auto* at : atoms) {
      const double rhs = static_cast<double>(at->rhs);
      if (at->rel != Rel::ge) row(at->terms, 1.0, rhs);
      if (at->rel != Rel::le) row(at->terms, -1.0, rhs);
    }
    for (const auto& bd : bounds) row({{bd.var, 1}}, bd.upper ? 1.0 : -1.0,
                                      static_cast<double>(bd.value));
    std::vector<double> c(n, -1.0);
    return Simplex(a, b, c).solve();
  }

  const LinearSystem& sys_;
  const SolverOptions& opts_;
  SolverStats& stats_;
  bool failed_ = false;
};

}  // namespace detail

/// A natural-number model of `sys`, or nullopt if none exists. Throws
/// BudgetExceeded when the node budget runs out; never guesses.
inline std::optional<Assignment> solve(const LinearSystem& sys, const SolverOptions& opts = {},
                                       SolverStats* stats = nullptr) {
  SolverStats local;
  SolverStats& st = stats ? *stats : local;
  std::vector<const Constraint*> roots;
  for (const auto& c : sys.constraints()) roots.push_back(&c);
  detail::IlpSearch search(sys, opts, st);
  auto r = search.run(roots);
  if (r && !satisfies(sys, *r)) throw Error("solver produced a non-model");
  return r;
}

}  // namespace paramck
