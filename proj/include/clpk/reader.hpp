#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clpk/store.hpp"
#include "clpk/term.hpp"

namespace clpk {

struct SourcePos {
    std::string file;
    int line = 1;
    int column = 1;
    std::string str() const;
};

class SyntaxError : public PrologError {
public:
    SyntaxError(const std::string &what, SourcePos pos);
    const SourcePos &pos() const { return pos_; }

private:
    SourcePos pos_;
};

enum class OpType { xfx, xfy, yfx, fy, fx, xf, yf };

struct OpDef {
    int priority = 0;
    OpType type = OpType::xfx;
};

std::optional<OpType> op_type_from_name(std::string_view name);

class OpTable {
public:
    // ISO defaults plus the constraint and loop operators.
    static OpTable standard();

    // Priority 0 removes the definition.
    void declare(int priority, OpType type, const std::string &name);
    std::optional<OpDef> prefix(const std::string &name) const;
    std::optional<OpDef> infix(const std::string &name) const;
    std::optional<OpDef> postfix(const std::string &name) const;
    bool is_op(const std::string &name) const;

private:
    std::unordered_map<std::string, OpDef> prefix_, infix_, postfix_;
};

enum class TokKind { Name, Var, Number, String, BackQuote, Punct, End, Eof };

struct Token {
    TokKind kind = TokKind::Eof;
    // Atom name, variable name, punctuation, or the raw numeric literal.
    std::string text;
    SourcePos pos;
    bool layout_before = false;
};

std::vector<Token> tokenize(std::string_view text, const std::string &file = "");

// Builds the number denoted by a numeric literal, negated if requested.
Term number_from_literal(const std::string &text, bool negative);

struct ReadHooks {
    std::function<Term()> new_var;
    // Applied to every compound as soon as it is built (bottom-up).
    std::function<std::optional<Term>(const Term &)> term_macro;
};

struct ReadResult {
    Term term;
    std::vector<std::pair<std::string, Term>> var_names;
    std::vector<std::string> singletons;
    SourcePos pos;
};

// Reads clause after clause from a token vector.
class Parser {
public:
    Parser(std::vector<Token> tokens, const OpTable &ops, ReadHooks hooks);

    bool at_eof() const;
    // One term terminated by an end token.
    ReadResult next();
    // Ops may change between clauses (directives).
    void set_ops(const OpTable &ops) { ops_ = &ops; }
    // Skips to just after the next end token (error recovery).
    void skip_clause();
    SourcePos position() const { return peek().pos; }

private:
    struct Parsed {
        Term term;
        int priority;
    };

    const Token &peek(std::size_t k = 0) const;
    Token take();
    [[noreturn]] void fail(const std::string &what, const Token &at) const;
    void expect(std::string_view punct);
    bool is_punct(const Token &t, std::string_view p) const;
    bool term_start(const Token &t) const;
    bool is_terminator(const Token &t, bool arg_mode) const;

    Parsed parse(int max_priority, bool arg_mode);
    Parsed primary(int max_priority, bool arg_mode);
    Term variable(const std::string &name);
    std::vector<Term> arglist(std::string_view close);
    Term list_rest();
    Term build(Atom name, std::vector<Term> args);

    std::vector<Token> toks_;
    std::size_t i_ = 0;
    const OpTable *ops_;
    ReadHooks hooks_;
    std::vector<std::pair<std::string, Term>> vars_;
    std::unordered_map<std::string, int> var_uses_;
};

struct WriteOptions {
    bool quoted = true;
    // Raw functor notation: no operators, no output transforms.
    bool canonical = false;
    const OpTable *ops = nullptr;
    // Output transforms; returning a term prints it instead.
    std::function<std::optional<Term>(const Term &)> portray;
    // Custom text for attributed variables (e.g. domains).
    std::function<std::optional<std::string>(VarRef)> var_text;
    std::unordered_map<std::uint32_t, std::string> var_names;
};

std::string write_term(const Store &store, const Term &t, const WriteOptions &opts);
std::string format_float(double d);
std::string quote_atom_if_needed(const std::string &name);

} // namespace clpk
