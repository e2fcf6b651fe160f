#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "minsuff/common.hpp"

namespace minsuff::expr {

// Surface grammar (see README for the full sketch):
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := unary ('^' factor)?
//   unary  := '-'? atom
//   atom   := number | 'pi' | 'x[' index ']' | 'theta[' int ']' | 'n'
//           | func '(' expr ')' | agg '{' ident '}' '(' expr ')'
//           | 'ind' '(' cond ')' | '(' expr ')'
//   func   in {exp, log, abs, sqrt}
//   agg    in {sum, prod, min, max}
//   cond   := expr cmp expr (('and'|'or') cond)*
//   cmp    in {<, <=, >, >=, ==}
//
// 'n' and 'pi' fold to literals at parse time.  An x[] index is either a
// literal integer in [0, sample_dim) or an aggregate binder in scope.

enum class NodeKind { literal, sample_var, param_var, binary, unary, aggregate, indicator, compare, bool_op };
enum class BinaryOp { add, sub, mul, div, pow };
enum class UnaryFn { neg, exp, log, abs, sqrt };
enum class AggKind { sum, prod, min, max };
enum class CmpOp { lt, le, gt, ge, eq };
enum class BoolOp { conj, disj };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0;    // literal
    int index = -1;        // sample_var / param_var; -1 when bound by an aggregate
    std::string binder;    // binder name: sample_var (when index < 0) or aggregate
    BinaryOp bop{};
    UnaryFn ufn{};
    AggKind agg{};
    CmpOp cmp{};
    BoolOp bconn{};
    std::vector<NodePtr> kids;
};

struct ParseError : std::runtime_error {
    int line, column;
    ParseError(const std::string& what, int line_, int col_)
        : std::runtime_error(what + " at " + std::to_string(line_) + ":" + std::to_string(col_)),
          line(line_), column(col_) {}
};

struct EvalResult {
    double value;
    bool nan_seen;  // NaN was produced somewhere during evaluation
};

// Log-scale result; log_value is -inf exactly when the linear value is 0.
struct LogEvalResult {
    double log_value;
    bool nan_seen;
};

class Expr {
  public:
    Expr() = default;
    Expr(NodePtr root, int sample_dim, int param_dim)
        : root_(std::move(root)), sample_dim_(sample_dim), param_dim_(param_dim) {}

    const NodePtr& root() const { return root_; }
    int sample_dim() const { return sample_dim_; }
    int param_dim() const { return param_dim_; }
    bool valid() const { return root_ != nullptr; }

    bool references_sample() const;
    bool references_param() const;

    friend bool operator==(const Expr& a, const Expr& b);

  private:
    NodePtr root_;
    int sample_dim_ = 0;
    int param_dim_ = 0;
};

// Lexical pre-scan: the largest literal x[]/theta[] indices and whether the
// text uses the sample-dimension atom 'n'.  Used to infer dimensions for
// documents that do not declare them.
struct TextScan {
    int max_x_index = -1;
    int max_theta_index = -1;
    bool uses_n = false;
};
TextScan scan_indices(const std::string& text);

// Total over the grammar; throws ParseError with position info on syntax
// errors, unknown identifiers, and indices outside the declared dimensions.
Expr parse(const std::string& text, int sample_dim, int param_dim);

// Same, with extra x[] binder names pre-bound (used for the elementwise
// expressions of sorted statistic components).
Expr parse_with_binders(const std::string& text, int sample_dim, int param_dim,
                        const std::vector<std::string>& binders);

// Canonical text form; parse(unparse(e)) is structurally equal to e.
std::string unparse(const Expr& e);

// IEEE-style total evaluation.  A zero factor annihilates a product even
// against an infinity; indicators yield exactly 0 or 1.
EvalResult eval(const Expr& e, const Vec& x, const Vec& theta);

// eval with one extra binder pre-bound to a coordinate index (sorted
// statistic components are elementwise expressions over such a binder).
EvalResult eval_bound(const Expr& e, const Vec& x, const Vec& theta,
                      const std::string& binder, int index);

// log of eval(e,x,theta), rewriting exp/mul/div/pow/sqrt/abs nodes and
// sum/prod/min/max aggregates exactly on the log scale; -inf encodes 0.
// Throws NegativeDensityError when the expression value is negative.
LogEvalResult eval_log(const Expr& e, const Vec& x, const Vec& theta);

}  // namespace minsuff::expr
