#include "clpk/reader.hpp"

namespace clpk {

std::optional<OpType> op_type_from_name(std::string_view name) {
    if (name == "xfx")
        return OpType::xfx;
    if (name == "xfy")
        return OpType::xfy;
    if (name == "yfx")
        return OpType::yfx;
    if (name == "fy")
        return OpType::fy;
    if (name == "fx")
        return OpType::fx;
    if (name == "xf")
        return OpType::xf;
    if (name == "yf")
        return OpType::yf;
    return std::nullopt;
}

OpTable OpTable::standard() {
    OpTable t;
    auto many = [&](int p, OpType ty, std::initializer_list<const char *> names) {
        for (auto n : names)
            t.declare(p, ty, n);
    };
    many(1200, OpType::xfx, {":-", "-->"});
    many(1200, OpType::fx, {":-", "?-"});
    many(1150, OpType::fx, {"local", "export", "import", "demon", "dynamic", "global"});
    many(1100, OpType::xfy, {";", "do"});
    many(1050, OpType::xfy, {"->"});
    t.infix_[","] = OpDef{1000, OpType::xfy};
    many(900, OpType::fy, {"\\+"});
    many(700, OpType::xfx,
         {"=", "\\=", "==", "\\==", "@<", "@>", "@=<", "@>=", "=..", "is", "=:=", "=\\=", "<", ">", "=<", ">=",
          "::", "#=", "#\\=", "#<", "#>", "#=<", "#>=", "$=", "$\\=", "$<", "$>", "$=<", "$>="});
    many(650, OpType::xfx, {"of"});
    many(600, OpType::xfx, {".."});
    many(500, OpType::yfx, {"+", "-", "/\\", "\\/", "xor"});
    many(400, OpType::yfx, {"*", "/", "//", "rem", "mod", "div", "<<", ">>"});
    many(200, OpType::xfx, {"**"});
    many(200, OpType::xfy, {"^", ":"});
    many(200, OpType::fy, {"-", "+", "\\"});
    return t;
}

void OpTable::declare(int priority, OpType type, const std::string &name) {
    if (priority < 0 || priority > 1200)
        throw_domain_error("operator_priority", Term::integer(priority));
    if (name == "," || name == "[]" || name == "{}" || name == "|")
        if (priority != 0 && name != "|")
            throw PrologError(error_term(mk_struct("permission_error",
                                                   {Term::atom("create"), Term::atom("operator"), Term::atom(name)})),
                              "cannot redefine operator " + name);
    auto &table = (type == OpType::fy || type == OpType::fx)   ? prefix_
                  : (type == OpType::xf || type == OpType::yf) ? postfix_
                                                               : infix_;
    if (priority == 0) {
        table.erase(name);
        return;
    }
    // An atom is either an infix or a postfix operator, not both.
    if (&table == &infix_)
        postfix_.erase(name);
    else if (&table == &postfix_)
        infix_.erase(name);
    table[name] = OpDef{priority, type};
}

static std::optional<OpDef> lookup(const std::unordered_map<std::string, OpDef> &m, const std::string &n) {
    auto it = m.find(n);
    if (it == m.end())
        return std::nullopt;
    return it->second;
}

std::optional<OpDef> OpTable::prefix(const std::string &name) const { return lookup(prefix_, name); }
std::optional<OpDef> OpTable::infix(const std::string &name) const { return lookup(infix_, name); }
std::optional<OpDef> OpTable::postfix(const std::string &name) const { return lookup(postfix_, name); }

bool OpTable::is_op(const std::string &name) const {
    return prefix_.count(name) || infix_.count(name) || postfix_.count(name);
}

Parser::Parser(std::vector<Token> tokens, const OpTable &ops, ReadHooks hooks)
    : toks_(std::move(tokens)), ops_(&ops), hooks_(std::move(hooks)) {
    if (toks_.empty() || toks_.back().kind != TokKind::Eof)
        toks_.push_back(Token{});
}

const Token &Parser::peek(std::size_t k) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }

Token Parser::take() {
    Token t = peek();
    if (i_ < toks_.size() - 1)
        ++i_;
    return t;
}

void Parser::fail(const std::string &what, const Token &at) const { throw SyntaxError(what, at.pos); }

bool Parser::is_punct(const Token &t, std::string_view p) const { return t.kind == TokKind::Punct && t.text == p; }

void Parser::expect(std::string_view punct) {
    if (!is_punct(peek(), punct))
        fail("expected " + std::string(punct), peek());
    take();
}

bool Parser::at_eof() const { return peek().kind == TokKind::Eof; }

void Parser::skip_clause() {
    while (peek().kind != TokKind::Eof) {
        if (take().kind == TokKind::End)
            return;
    }
}

bool Parser::term_start(const Token &t) const {
    switch (t.kind) {
    case TokKind::Number: case TokKind::Var: case TokKind::String: case TokKind::BackQuote: case TokKind::Name:
        return true;
    case TokKind::Punct:
        return t.text == "(" || t.text == "[" || t.text == "{";
    default:
        return false;
    }
}

bool Parser::is_terminator(const Token &t, bool arg_mode) const {
    if (t.kind == TokKind::End || t.kind == TokKind::Eof)
        return true;
    if (t.kind != TokKind::Punct)
        return false;
    if (t.text == ")" || t.text == "]" || t.text == "}")
        return true;
    return arg_mode && (t.text == "," || t.text == "|");
}

ReadResult Parser::next() {
    vars_.clear();
    var_uses_.clear();
    ReadResult r;
    r.pos = peek().pos;
    if (peek().kind == TokKind::End || peek().kind == TokKind::Eof)
        fail("unexpected end of clause", peek());
    Parsed p = parse(1200, false);
    if (peek().kind != TokKind::End)
        fail("operator expected", peek());
    take();
    r.term = p.term;
    r.var_names = vars_;
    for (const auto &[name, _] : vars_)
        if (name[0] != '_' && var_uses_[name] == 1)
            r.singletons.push_back(name);
    return r;
}

Term Parser::variable(const std::string &name) {
    if (name == "_")
        return hooks_.new_var();
    for (const auto &[n, v] : vars_) {
        if (n == name) {
            ++var_uses_[name];
            return v;
        }
    }
    Term v = hooks_.new_var();
    vars_.emplace_back(name, v);
    var_uses_[name] = 1;
    return v;
}

Term Parser::build(Atom name, std::vector<Term> args) {
    Term t = mk_struct(name, std::move(args));
    if (hooks_.term_macro)
        if (auto r = hooks_.term_macro(t))
            return *r;
    return t;
}

std::vector<Term> Parser::arglist(std::string_view close) {
    std::vector<Term> items;
    for (;;) {
        items.push_back(parse(1200, true).term);
        if (is_punct(peek(), ",")) {
            take();
            continue;
        }
        expect(close);
        return items;
    }
}

Term Parser::list_rest() {
    std::vector<Term> items;
    Term tail = Term(Atom("[]"));
    for (;;) {
        items.push_back(parse(1200, true).term);
        if (is_punct(peek(), ",")) {
            take();
            continue;
        }
        if (is_punct(peek(), "|")) {
            take();
            tail = parse(1200, true).term;
        }
        expect("]");
        return mk_list(items, tail);
    }
}

Parser::Parsed Parser::primary(int max_priority, bool arg_mode) {
    static const Atom kSubscript("subscript");
    static const Atom kWith("with");
    Token t = take();
    switch (t.kind) {
    case TokKind::Number:
        return {number_from_literal(t.text, false), 0};
    case TokKind::String:
    case TokKind::BackQuote:
        return {Term::string(t.text), 0};
    case TokKind::Var: {
        Term v = variable(t.text);
        while (is_punct(peek(), "[") && !peek().layout_before) {
            take();
            auto idx = arglist("]");
            v = build(kSubscript, {v, mk_list(idx)});
        }
        return {v, 0};
    }
    case TokKind::Punct: {
        if (t.text == "(") {
            Parsed p = parse(1200, false);
            expect(")");
            return {p.term, 0};
        }
        if (t.text == "[") {
            if (is_punct(peek(), "]")) {
                take();
                if (is_punct(peek(), "(") && !peek().layout_before) {
                    take();
                    return {build(Atom("[]"), arglist(")")), 0};
                }
                return {Term(Atom("[]")), 0};
            }
            return {list_rest(), 0};
        }
        if (t.text == "{") {
            if (is_punct(peek(), "}")) {
                take();
                return {Term::atom("{}"), 0};
            }
            Parsed p = parse(1200, false);
            expect("}");
            return {build(Atom("{}"), {p.term}), 0};
        }
        fail("unexpected " + t.text, t);
    }
    case TokKind::Name: {
        const std::string &name = t.text;
        if (is_punct(peek(), "(") && !peek().layout_before) {
            take();
            return {build(Atom(name), arglist(")")), 0};
        }
        if (is_punct(peek(), "{") && !peek().layout_before) {
            take();
            std::vector<Term> fields;
            if (is_punct(peek(), "}"))
                take();
            else
                fields = arglist("}");
            return {build(kWith, {Term::atom(name), mk_list(fields)}), 0};
        }
        if (name == "-" && peek().kind == TokKind::Number && !peek().layout_before)
            return {number_from_literal(take().text, true), 0};
        if (auto pre = ops_->prefix(name)) {
            const Token &nxt = peek();
            bool operand = !is_terminator(nxt, arg_mode) && term_start(nxt);
            if (operand && nxt.kind == TokKind::Name && !ops_->prefix(nxt.text) &&
                (ops_->infix(nxt.text) || ops_->postfix(nxt.text)) &&
                !(is_punct(peek(1), "(") && !peek(1).layout_before))
                operand = false;
            if (!operand)
                return {Term::atom(name), 0};
            int p = pre->priority;
            int argmax = pre->type == OpType::fy ? p : p - 1;
            if (p > max_priority) {
                p = max_priority;
                argmax = std::min(argmax, max_priority);
            }
            Parsed arg = parse(argmax, arg_mode);
            return {build(Atom(name), {arg.term}), p};
        }
        return {Term::atom(name), 0};
    }
    default:
        fail("unexpected end of clause", t);
    }
}

Parser::Parsed Parser::parse(int max_priority, bool arg_mode) {
    Parsed left = primary(max_priority, arg_mode);
    for (;;) {
        const Token &t = peek();
        std::string name;
        if (t.kind == TokKind::Name)
            name = t.text;
        else if (!arg_mode && is_punct(t, ","))
            name = ",";
        else if (!arg_mode && is_punct(t, "|"))
            name = "|";
        else
            break;
        std::optional<OpDef> in = name == "|" ? std::optional<OpDef>(OpDef{1100, OpType::xfy}) : ops_->infix(name);
        if (in) {
            int p = in->priority;
            int la = in->type == OpType::yfx ? p : p - 1;
            int ra = in->type == OpType::xfy ? p : p - 1;
            if (p <= max_priority && left.priority <= la) {
                take();
                Parsed right = parse(ra, arg_mode);
                left = {build(Atom(name == "|" ? ";" : name), {left.term, right.term}), p};
                continue;
            }
        }
        if (auto post = ops_->postfix(name)) {
            int p = post->priority;
            int la = post->type == OpType::yf ? p : p - 1;
            if (p <= max_priority && left.priority <= la) {
                take();
                left = {build(Atom(name), {left.term}), p};
                continue;
            }
        }
        break;
    }
    return left;
}

} // namespace clpk
