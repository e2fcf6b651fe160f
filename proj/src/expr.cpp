#include "minsuff/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>

namespace minsuff::expr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Lexer

struct Token {
    enum Type { number, ident, symbol, end } type = end;
    double num = 0.0;
    std::string text;
    int line = 1, col = 1;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            if (src_[pos_] == '\n') { ++line_; col_ = 1; } else { ++col_; }
            ++pos_;
        }
        tok_ = Token{};
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src_.size()) { tok_.type = Token::end; return; }
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                bump();
            tok_.type = Token::ident;
            tok_.text = src_.substr(start, pos_ - start);
            return;
        }
        auto two = [&](const char* s) {
            if (pos_ + 1 < src_.size() && src_[pos_] == s[0] && src_[pos_ + 1] == s[1]) {
                tok_.type = Token::symbol;
                tok_.text = s;
                bump();
                bump();
                return true;
            }
            return false;
        };
        if (two("<=") || two(">=") || two("==")) return;
        if (std::string("+-*/^()[]{}<>").find(c) != std::string::npos) {
            tok_.type = Token::symbol;
            tok_.text = std::string(1, c);
            bump();
            return;
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "'", line_, col_);
    }

    void lex_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            bump();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            int save_col = col_;
            bump();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) bump();
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
            } else {
                pos_ = save;  // 'e' belongs to an identifier context; not part of the number
                col_ = save_col;
            }
        }
        std::string text = src_.substr(start, pos_ - start);
        double v = 0.0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size())
            throw ParseError("malformed number '" + text + "'", tok_.line, tok_.col);
        tok_.type = Token::number;
        tok_.num = v;
        tok_.text = text;
    }

    void bump() { ++pos_; ++col_; }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

// ---------------------------------------------------------------------------
// Parser

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

NodePtr literal(double v) {
    Node n;
    n.kind = NodeKind::literal;
    n.value = v;
    return make(std::move(n));
}

class Parser {
  public:
    Parser(const std::string& text, int sample_dim, int param_dim, std::vector<std::string> binders)
        : lex_(text), sample_dim_(sample_dim), param_dim_(param_dim), scope_(std::move(binders)) {}

    NodePtr run() {
        NodePtr e = parse_expr();
        if (lex_.peek().type != Token::end)
            fail("unexpected trailing input '" + lex_.peek().text + "'");
        return e;
    }

  private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, lex_.peek().line, lex_.peek().col);
    }

    bool accept_sym(const char* s) {
        if (lex_.peek().type == Token::symbol && lex_.peek().text == s) {
            lex_.take();
            return true;
        }
        return false;
    }

    void expect_sym(const char* s) {
        if (!accept_sym(s)) fail(std::string("expected '") + s + "'");
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            BinaryOp op;
            if (accept_sym("+")) op = BinaryOp::add;
            else if (accept_sym("-")) op = BinaryOp::sub;
            else break;
            Node n;
            n.kind = NodeKind::binary;
            n.bop = op;
            n.kids = {lhs, parse_term()};
            lhs = make(std::move(n));
        }
        return lhs;
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_factor();
        for (;;) {
            BinaryOp op;
            if (accept_sym("*")) op = BinaryOp::mul;
            else if (accept_sym("/")) op = BinaryOp::div;
            else break;
            Node n;
            n.kind = NodeKind::binary;
            n.bop = op;
            n.kids = {lhs, parse_factor()};
            lhs = make(std::move(n));
        }
        return lhs;
    }

    NodePtr parse_factor() {
        NodePtr base = parse_unary();
        if (accept_sym("^")) {
            Node n;
            n.kind = NodeKind::binary;
            n.bop = BinaryOp::pow;
            n.kids = {base, parse_factor()};  // right-associative
            return make(std::move(n));
        }
        return base;
    }

    NodePtr parse_unary() {
        if (accept_sym("-")) {
            Node n;
            n.kind = NodeKind::unary;
            n.ufn = UnaryFn::neg;
            n.kids = {parse_atom()};
            return make(std::move(n));
        }
        return parse_atom();
    }

    NodePtr parse_atom() {
        const Token& t = lex_.peek();
        if (t.type == Token::number) return literal(lex_.take().num);
        if (t.type == Token::symbol && t.text == "(") {
            lex_.take();
            NodePtr e = parse_expr();
            expect_sym(")");
            return e;
        }
        if (t.type != Token::ident) fail("expected expression, got '" + t.text + "'");
        Token id = lex_.take();
        const std::string& name = id.text;

        if (name == "pi") return literal(M_PI);
        if (name == "n") return literal(static_cast<double>(sample_dim_));
        if (name == "x") return parse_sample_var(id);
        if (name == "theta") return parse_param_var(id);
        if (name == "exp" || name == "log" || name == "abs" || name == "sqrt") {
            Node n;
            n.kind = NodeKind::unary;
            n.ufn = name == "exp" ? UnaryFn::exp
                  : name == "log" ? UnaryFn::log
                  : name == "abs" ? UnaryFn::abs
                                  : UnaryFn::sqrt;
            expect_sym("(");
            n.kids = {parse_expr()};
            expect_sym(")");
            return make(std::move(n));
        }
        if (name == "sum" || name == "prod" || name == "min" || name == "max") {
            Node n;
            n.kind = NodeKind::aggregate;
            n.agg = name == "sum" ? AggKind::sum
                  : name == "prod" ? AggKind::prod
                  : name == "min" ? AggKind::min
                                  : AggKind::max;
            expect_sym("{");
            if (lex_.peek().type != Token::ident) fail("expected aggregate binder name");
            n.binder = lex_.take().text;
            expect_sym("}");
            expect_sym("(");
            scope_.push_back(n.binder);
            n.kids = {parse_expr()};
            scope_.pop_back();
            expect_sym(")");
            return make(std::move(n));
        }
        if (name == "ind") {
            Node n;
            n.kind = NodeKind::indicator;
            expect_sym("(");
            n.kids = {parse_cond()};
            expect_sym(")");
            return make(std::move(n));
        }
        throw ParseError("unknown identifier '" + name + "'", id.line, id.col);
    }

    NodePtr parse_sample_var(const Token& at) {
        expect_sym("[");
        Node n;
        n.kind = NodeKind::sample_var;
        const Token& t = lex_.peek();
        if (t.type == Token::number) {
            Token num = lex_.take();
            double v = num.num;
            if (v != std::floor(v) || v < 0)
                throw ParseError("sample index must be a non-negative integer", num.line, num.col);
            int i = static_cast<int>(v);
            if (i >= sample_dim_)
                throw ParseError("sample index " + std::to_string(i) + " out of range [0, " +
                                     std::to_string(sample_dim_) + ")",
                                 num.line, num.col);
            n.index = i;
        } else if (t.type == Token::ident) {
            Token id = lex_.take();
            if (std::find(scope_.begin(), scope_.end(), id.text) == scope_.end())
                throw ParseError("unknown identifier '" + id.text + "'", id.line, id.col);
            n.index = -1;
            n.binder = id.text;
        } else {
            throw ParseError("expected sample index", at.line, at.col);
        }
        expect_sym("]");
        return make(std::move(n));
    }

    NodePtr parse_param_var(const Token& at) {
        expect_sym("[");
        const Token& t = lex_.peek();
        if (t.type != Token::number) throw ParseError("expected parameter index", at.line, at.col);
        Token num = lex_.take();
        double v = num.num;
        if (v != std::floor(v) || v < 0)
            throw ParseError("parameter index must be a non-negative integer", num.line, num.col);
        int j = static_cast<int>(v);
        if (j >= param_dim_)
            throw ParseError("parameter index " + std::to_string(j) + " out of range [0, " +
                                 std::to_string(param_dim_) + ")",
                             num.line, num.col);
        expect_sym("]");
        Node n;
        n.kind = NodeKind::param_var;
        n.index = j;
        return make(std::move(n));
    }

    NodePtr parse_cond() {
        NodePtr lhs = parse_expr();
        CmpOp op;
        if (accept_sym("<=")) op = CmpOp::le;
        else if (accept_sym(">=")) op = CmpOp::ge;
        else if (accept_sym("==")) op = CmpOp::eq;
        else if (accept_sym("<")) op = CmpOp::lt;
        else if (accept_sym(">")) op = CmpOp::gt;
        else { fail("expected comparison operator"); }
        Node cmpn;
        cmpn.kind = NodeKind::compare;
        cmpn.cmp = op;
        cmpn.kids = {lhs, parse_expr()};
        NodePtr left = make(std::move(cmpn));

        // and/or chain, right-associative per the grammar
        if (lex_.peek().type == Token::ident &&
            (lex_.peek().text == "and" || lex_.peek().text == "or")) {
            Token conn = lex_.take();
            Node b;
            b.kind = NodeKind::bool_op;
            b.bconn = conn.text == "and" ? BoolOp::conj : BoolOp::disj;
            b.kids = {left, parse_cond()};
            return make(std::move(b));
        }
        return left;
    }

    Lexer lex_;
    int sample_dim_, param_dim_;
    std::vector<std::string> scope_;
};

// ---------------------------------------------------------------------------
// Structural equality

bool node_equal(const NodePtr& a, const NodePtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case NodeKind::literal:
            if (a->value != b->value) return false;
            break;
        case NodeKind::sample_var:
            if (a->index != b->index || a->binder != b->binder) return false;
            break;
        case NodeKind::param_var:
            if (a->index != b->index) return false;
            break;
        case NodeKind::binary:
            if (a->bop != b->bop) return false;
            break;
        case NodeKind::unary:
            if (a->ufn != b->ufn) return false;
            break;
        case NodeKind::aggregate:
            if (a->agg != b->agg || a->binder != b->binder) return false;
            break;
        case NodeKind::compare:
            if (a->cmp != b->cmp) return false;
            break;
        case NodeKind::bool_op:
            if (a->bconn != b->bconn) return false;
            break;
        case NodeKind::indicator:
            break;
    }
    if (a->kids.size() != b->kids.size()) return false;
    for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (!node_equal(a->kids[i], b->kids[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Evaluation

struct Env {
    std::vector<std::pair<const std::string*, int>> binders;

    int lookup(const std::string& name) const {
        for (auto it = binders.rbegin(); it != binders.rend(); ++it)
            if (*it->first == name) return it->second;
        throw SpecError("unbound aggregate index '" + name + "'");
    }
};

struct Ctx {
    const Vec& x;
    const Vec& theta;
    Env env;
    bool nan = false;
};

double eval_lin(const NodePtr& n, Ctx& ctx);

bool eval_cond(const NodePtr& n, Ctx& ctx) {
    if (n->kind == NodeKind::compare) {
        double a = eval_lin(n->kids[0], ctx);
        double b = eval_lin(n->kids[1], ctx);
        if (std::isnan(a) || std::isnan(b)) ctx.nan = true;
        switch (n->cmp) {
            case CmpOp::lt: return a < b;
            case CmpOp::le: return a <= b;
            case CmpOp::gt: return a > b;
            case CmpOp::ge: return a >= b;
            case CmpOp::eq: return a == b;
        }
    }
    if (n->kind == NodeKind::bool_op) {
        bool a = eval_cond(n->kids[0], ctx);
        bool b = eval_cond(n->kids[1], ctx);
        return n->bconn == BoolOp::conj ? (a && b) : (a || b);
    }
    throw SpecError("malformed condition node");
}

double eval_lin(const NodePtr& n, Ctx& ctx) {
    switch (n->kind) {
        case NodeKind::literal:
            return n->value;
        case NodeKind::sample_var: {
            int i = n->index >= 0 ? n->index : ctx.env.lookup(n->binder);
            return ctx.x[i];
        }
        case NodeKind::param_var:
            return ctx.theta[n->index];
        case NodeKind::binary: {
            double a = eval_lin(n->kids[0], ctx);
            double b = eval_lin(n->kids[1], ctx);
            double r = kNaN;
            switch (n->bop) {
                case BinaryOp::add: r = a + b; break;
                case BinaryOp::sub: r = a - b; break;
                case BinaryOp::mul:
                    if (std::isnan(a) || std::isnan(b)) r = kNaN;
                    else if (a == 0.0 || b == 0.0) r = 0.0;  // zero annihilates, even vs inf
                    else r = a * b;
                    break;
                case BinaryOp::div: r = a / b; break;
                case BinaryOp::pow: r = std::pow(a, b); break;
            }
            if (std::isnan(r)) ctx.nan = true;
            return r;
        }
        case NodeKind::unary: {
            double a = eval_lin(n->kids[0], ctx);
            double r = kNaN;
            switch (n->ufn) {
                case UnaryFn::neg: r = -a; break;
                case UnaryFn::exp: r = std::exp(a); break;
                case UnaryFn::log: r = std::log(a); break;  // log(0) = -inf, log(<0) = NaN
                case UnaryFn::abs: r = std::abs(a); break;
                case UnaryFn::sqrt: r = std::sqrt(a); break;
            }
            if (std::isnan(r)) ctx.nan = true;
            return r;
        }
        case NodeKind::aggregate: {
            const int dim = static_cast<int>(ctx.x.size());
            std::vector<double> vals(static_cast<std::size_t>(dim));
            ctx.env.binders.emplace_back(&n->binder, 0);
            for (int i = 0; i < dim; ++i) {
                ctx.env.binders.back().second = i;
                vals[static_cast<std::size_t>(i)] = eval_lin(n->kids[0], ctx);
            }
            ctx.env.binders.pop_back();
            bool any_nan = std::any_of(vals.begin(), vals.end(), [](double v) { return std::isnan(v); });
            if (any_nan) { ctx.nan = true; return kNaN; }
            switch (n->agg) {
                case AggKind::sum: {
                    double s = 0.0;
                    for (double v : vals) s += v;
                    if (std::isnan(s)) ctx.nan = true;
                    return s;
                }
                case AggKind::prod: {
                    for (double v : vals)
                        if (v == 0.0) return 0.0;
                    double p = 1.0;
                    for (double v : vals) p *= v;
                    return p;
                }
                case AggKind::min: return *std::min_element(vals.begin(), vals.end());
                case AggKind::max: return *std::max_element(vals.begin(), vals.end());
            }
            return kNaN;
        }
        case NodeKind::indicator:
            return eval_cond(n->kids[0], ctx) ? 1.0 : 0.0;
        case NodeKind::compare:
        case NodeKind::bool_op:
            return eval_cond(n, ctx) ? 1.0 : 0.0;
    }
    return kNaN;
}

// Signed log-scale value: sign in {-1,0,+1}, log_abs = log|v| (-inf for 0).
// NaN is encoded by log_abs = NaN.
struct SLog {
    double l;
    int s;
};

SLog slog_nan(Ctx& ctx) {
    ctx.nan = true;
    return {kNaN, 1};
}

SLog slog_of(double v, Ctx& ctx) {
    if (std::isnan(v)) return slog_nan(ctx);
    if (v == 0.0) return {-kInf, 0};
    return {std::log(std::abs(v)), v > 0 ? 1 : -1};
}

bool slog_is_nan(const SLog& a) { return std::isnan(a.l); }

double slog_to_double(const SLog& a) {
    if (slog_is_nan(a)) return kNaN;
    if (a.s == 0) return 0.0;
    return a.s * std::exp(a.l);
}

double lse2(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    if (a == kInf || b == kInf) return kInf;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

SLog slog_add(const SLog& a, const SLog& b, Ctx& ctx) {
    if (slog_is_nan(a) || slog_is_nan(b)) return slog_nan(ctx);
    if (a.s == 0) return b;
    if (b.s == 0) return a;
    if (a.s == b.s) return {lse2(a.l, b.l), a.s};
    if (a.l == b.l) return {-kInf, 0};  // exact cancellation
    if (a.l == kInf && b.l == kInf) return slog_nan(ctx);  // inf - inf
    const SLog& hi = a.l > b.l ? a : b;
    const SLog& lo = a.l > b.l ? b : a;
    double l = hi.l + std::log1p(-std::exp(lo.l - hi.l));
    if (l == -kInf) return {-kInf, 0};
    return {l, hi.s};
}

SLog slog_mul(const SLog& a, const SLog& b, Ctx& ctx) {
    if (slog_is_nan(a) || slog_is_nan(b)) return slog_nan(ctx);
    if (a.s == 0 || b.s == 0) return {-kInf, 0};  // zero annihilates
    return {a.l + b.l, a.s * b.s};
}

SLog slog_div(const SLog& a, const SLog& b, Ctx& ctx) {
    if (slog_is_nan(a) || slog_is_nan(b)) return slog_nan(ctx);
    if (b.s == 0) {
        if (a.s == 0) return slog_nan(ctx);  // 0/0
        return {kInf, a.s};                  // x/0 = signed infinity
    }
    if (a.s == 0) return {-kInf, 0};
    return {a.l - b.l, a.s * b.s};
}

// value(a) < value(b), for exact min/max selection on the log scale
bool slog_less(const SLog& a, const SLog& b) {
    if (a.s != b.s) return a.s < b.s;
    if (a.s == 0) return false;
    return a.s > 0 ? a.l < b.l : a.l > b.l;
}

SLog eval_slog(const NodePtr& n, Ctx& ctx) {
    switch (n->kind) {
        case NodeKind::literal:
            return slog_of(n->value, ctx);
        case NodeKind::sample_var: {
            int i = n->index >= 0 ? n->index : ctx.env.lookup(n->binder);
            return slog_of(ctx.x[i], ctx);
        }
        case NodeKind::param_var:
            return slog_of(ctx.theta[n->index], ctx);
        case NodeKind::binary: {
            switch (n->bop) {
                case BinaryOp::add:
                    return slog_add(eval_slog(n->kids[0], ctx), eval_slog(n->kids[1], ctx), ctx);
                case BinaryOp::sub: {
                    SLog b = eval_slog(n->kids[1], ctx);
                    b.s = -b.s;
                    return slog_add(eval_slog(n->kids[0], ctx), b, ctx);
                }
                case BinaryOp::mul:
                    return slog_mul(eval_slog(n->kids[0], ctx), eval_slog(n->kids[1], ctx), ctx);
                case BinaryOp::div:
                    return slog_div(eval_slog(n->kids[0], ctx), eval_slog(n->kids[1], ctx), ctx);
                case BinaryOp::pow: {
                    SLog base = eval_slog(n->kids[0], ctx);
                    double e = eval_lin(n->kids[1], ctx);
                    if (slog_is_nan(base) || std::isnan(e)) return slog_nan(ctx);
                    if (e == 0.0) return {0.0, 1};  // pow(x, 0) = 1
                    if (base.s == 0) {
                        if (e > 0) return {-kInf, 0};
                        return {kInf, 1};  // pow(+0, negative)
                    }
                    if (base.s > 0) {
                        if (base.l == 0.0) return {0.0, 1};  // 1^e, even for e = inf
                        return {base.l * e, 1};
                    }
                    // negative base: fall back to linear pow
                    return slog_of(std::pow(slog_to_double(base), e), ctx);
                }
            }
            return slog_nan(ctx);
        }
        case NodeKind::unary: {
            switch (n->ufn) {
                case UnaryFn::neg: {
                    SLog a = eval_slog(n->kids[0], ctx);
                    a.s = -a.s;
                    return a;
                }
                case UnaryFn::exp: {
                    double a = eval_lin(n->kids[0], ctx);
                    if (std::isnan(a)) return slog_nan(ctx);
                    if (a == -kInf) return {-kInf, 0};
                    return {a, 1};  // log(exp(a)) = a, exactly
                }
                case UnaryFn::log: {
                    SLog a = eval_slog(n->kids[0], ctx);
                    if (slog_is_nan(a) || a.s < 0) return slog_nan(ctx);
                    if (a.s == 0) return {kInf, -1};  // log(0) = -inf as a value
                    return slog_of(a.l, ctx);         // log of the log-scale value
                }
                case UnaryFn::abs: {
                    SLog a = eval_slog(n->kids[0], ctx);
                    if (slog_is_nan(a)) return a;
                    return {a.l, a.s == 0 ? 0 : 1};
                }
                case UnaryFn::sqrt: {
                    SLog a = eval_slog(n->kids[0], ctx);
                    if (slog_is_nan(a) || a.s < 0) return slog_nan(ctx);
                    if (a.s == 0) return {-kInf, 0};
                    return {a.l * 0.5, 1};
                }
            }
            return slog_nan(ctx);
        }
        case NodeKind::aggregate: {
            const int dim = static_cast<int>(ctx.x.size());
            std::vector<SLog> vals;
            vals.reserve(static_cast<std::size_t>(dim));
            ctx.env.binders.emplace_back(&n->binder, 0);
            for (int i = 0; i < dim; ++i) {
                ctx.env.binders.back().second = i;
                vals.push_back(eval_slog(n->kids[0], ctx));
            }
            ctx.env.binders.pop_back();
            for (const SLog& v : vals)
                if (slog_is_nan(v)) return slog_nan(ctx);
            switch (n->agg) {
                case AggKind::sum: {
                    SLog acc = vals[0];
                    for (std::size_t i = 1; i < vals.size(); ++i) acc = slog_add(acc, vals[i], ctx);
                    return acc;
                }
                case AggKind::prod: {
                    SLog acc = vals[0];
                    for (std::size_t i = 1; i < vals.size(); ++i) acc = slog_mul(acc, vals[i], ctx);
                    return acc;
                }
                case AggKind::min: {
                    SLog best = vals[0];
                    for (std::size_t i = 1; i < vals.size(); ++i)
                        if (slog_less(vals[i], best)) best = vals[i];
                    return best;
                }
                case AggKind::max: {
                    SLog best = vals[0];
                    for (std::size_t i = 1; i < vals.size(); ++i)
                        if (slog_less(best, vals[i])) best = vals[i];
                    return best;
                }
            }
            return slog_nan(ctx);
        }
        case NodeKind::indicator:
            return eval_cond(n->kids[0], ctx) ? SLog{0.0, 1} : SLog{-kInf, 0};
        case NodeKind::compare:
        case NodeKind::bool_op:
            return eval_cond(n, ctx) ? SLog{0.0, 1} : SLog{-kInf, 0};
    }
    return slog_nan(ctx);
}

// ---------------------------------------------------------------------------
// Unparse

std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

void unparse_node(const NodePtr& n, std::string& out);

void unparse_cond(const NodePtr& n, std::string& out) {
    if (n->kind == NodeKind::compare) {
        unparse_node(n->kids[0], out);
        switch (n->cmp) {
            case CmpOp::lt: out += " < "; break;
            case CmpOp::le: out += " <= "; break;
            case CmpOp::gt: out += " > "; break;
            case CmpOp::ge: out += " >= "; break;
            case CmpOp::eq: out += " == "; break;
        }
        unparse_node(n->kids[1], out);
        return;
    }
    // bool chains come out of the parser right-nested, so no grouping is lost
    unparse_cond(n->kids[0], out);
    out += n->bconn == BoolOp::conj ? " and " : " or ";
    unparse_cond(n->kids[1], out);
}

void unparse_node(const NodePtr& n, std::string& out) {
    switch (n->kind) {
        case NodeKind::literal:
            out += fmt_double(n->value);
            return;
        case NodeKind::sample_var:
            out += "x[" + (n->index >= 0 ? std::to_string(n->index) : n->binder) + "]";
            return;
        case NodeKind::param_var:
            out += "theta[" + std::to_string(n->index) + "]";
            return;
        case NodeKind::binary: {
            out += "(";
            unparse_node(n->kids[0], out);
            switch (n->bop) {
                case BinaryOp::add: out += " + "; break;
                case BinaryOp::sub: out += " - "; break;
                case BinaryOp::mul: out += " * "; break;
                case BinaryOp::div: out += " / "; break;
                case BinaryOp::pow: out += "^"; break;
            }
            unparse_node(n->kids[1], out);
            out += ")";
            return;
        }
        case NodeKind::unary: {
            switch (n->ufn) {
                case UnaryFn::neg:
                    out += "(-";
                    unparse_node(n->kids[0], out);
                    out += ")";
                    return;
                case UnaryFn::exp: out += "exp("; break;
                case UnaryFn::log: out += "log("; break;
                case UnaryFn::abs: out += "abs("; break;
                case UnaryFn::sqrt: out += "sqrt("; break;
            }
            unparse_node(n->kids[0], out);
            out += ")";
            return;
        }
        case NodeKind::aggregate: {
            switch (n->agg) {
                case AggKind::sum: out += "sum"; break;
                case AggKind::prod: out += "prod"; break;
                case AggKind::min: out += "min"; break;
                case AggKind::max: out += "max"; break;
            }
            out += "{" + n->binder + "}(";
            unparse_node(n->kids[0], out);
            out += ")";
            return;
        }
        case NodeKind::indicator:
            out += "ind(";
            unparse_cond(n->kids[0], out);
            out += ")";
            return;
        case NodeKind::compare:
        case NodeKind::bool_op:
            unparse_cond(n, out);
            return;
    }
}

void check_dims(const Expr& e, const Vec& x, const Vec& theta) {
    if (static_cast<int>(x.size()) != e.sample_dim())
        throw SpecError("sample vector has length " + std::to_string(x.size()) + ", expected " +
                        std::to_string(e.sample_dim()));
    if (static_cast<int>(theta.size()) != e.param_dim())
        throw SpecError("parameter vector has length " + std::to_string(theta.size()) +
                        ", expected " + std::to_string(e.param_dim()));
}

bool walk_any(const NodePtr& n, NodeKind kind) {
    if (n->kind == kind) return true;
    for (const NodePtr& k : n->kids)
        if (walk_any(k, kind)) return true;
    return false;
}

}  // namespace

bool operator==(const Expr& a, const Expr& b) { return node_equal(a.root(), b.root()); }

TextScan scan_indices(const std::string& text) {
    TextScan out;
    Lexer lex(text);
    std::string prev_ident;
    bool prev_was_bracket = false;
    std::string before_bracket;
    while (lex.peek().type != Token::end) {
        Token t = lex.take();
        if (t.type == Token::ident) {
            if (t.text == "n") out.uses_n = true;
            prev_ident = t.text;
            prev_was_bracket = false;
        } else if (t.type == Token::symbol && t.text == "[") {
            before_bracket = prev_ident;
            prev_was_bracket = true;
        } else if (t.type == Token::number && prev_was_bracket) {
            int idx = static_cast<int>(t.num);
            if (before_bracket == "x") out.max_x_index = std::max(out.max_x_index, idx);
            if (before_bracket == "theta") out.max_theta_index = std::max(out.max_theta_index, idx);
            prev_was_bracket = false;
        } else {
            prev_was_bracket = false;
        }
    }
    return out;
}

bool Expr::references_sample() const { return root_ && walk_any(root_, NodeKind::sample_var); }
bool Expr::references_param() const { return root_ && walk_any(root_, NodeKind::param_var); }

Expr parse(const std::string& text, int sample_dim, int param_dim) {
    return parse_with_binders(text, sample_dim, param_dim, {});
}

Expr parse_with_binders(const std::string& text, int sample_dim, int param_dim,
                        const std::vector<std::string>& binders) {
    if (text.empty()) throw ParseError("empty expression", 1, 1);
    if (sample_dim < 1 || param_dim < 0) throw SpecError("dimensions must be positive");
    Parser p(text, sample_dim, param_dim, binders);
    return Expr(p.run(), sample_dim, param_dim);
}

std::string unparse(const Expr& e) {
    std::string out;
    unparse_node(e.root(), out);
    return out;
}

EvalResult eval(const Expr& e, const Vec& x, const Vec& theta) {
    check_dims(e, x, theta);
    Ctx ctx{x, theta, {}, false};
    double v = eval_lin(e.root(), ctx);
    return {v, ctx.nan || std::isnan(v)};
}

EvalResult eval_bound(const Expr& e, const Vec& x, const Vec& theta, const std::string& binder,
                      int index) {
    check_dims(e, x, theta);
    Ctx ctx{x, theta, {}, false};
    ctx.env.binders.emplace_back(&binder, index);
    double v = eval_lin(e.root(), ctx);
    return {v, ctx.nan || std::isnan(v)};
}

LogEvalResult eval_log(const Expr& e, const Vec& x, const Vec& theta) {
    check_dims(e, x, theta);
    Ctx ctx{x, theta, {}, false};
    SLog v = eval_slog(e.root(), ctx);
    if (slog_is_nan(v)) return {kNaN, true};
    if (v.s < 0)
        throw NegativeDensityError("expression evaluated to a negative value (log scale requested)");
    if (v.s == 0) return {-kInf, ctx.nan};
    return {v.l, ctx.nan};
}

}  // namespace minsuff::expr
