#include "clpk/reader.hpp"

#include <charconv>
#include <cmath>

namespace clpk {

namespace {

bool symbol_char(char c) { return std::string_view("+-*/\\^<>=~:.?@#&$").find(c) != std::string_view::npos; }
bool alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string escape_text(const std::string &s, char q) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default:
            if (c == q)
                out += std::string("\\") + q;
            else
                out += c;
        }
    }
    return out;
}

class Writer {
public:
    Writer(const Store &store, const WriteOptions &opts) : store_(store), o_(opts) {
        if (!o_.ops) {
            fallback_ = OpTable::standard();
            ops_ = &fallback_;
        } else {
            ops_ = o_.ops;
        }
    }

    std::string write(const Term &in, int max_priority, bool portray = true) {
        Term t = store_.deref(in);
        switch (t.kind()) {
        case Term::Kind::Var: return var(t.var());
        case Term::Kind::Atom: return atom(t.atom());
        case Term::Kind::Int: return t.as_integer().str();
        case Term::Kind::Rat: {
            const auto &q = t.as_rational();
            return numerator(q).str() + "_" + denominator(q).str();
        }
        case Term::Kind::Float: return format_float(t.as_float());
        case Term::Kind::Breal: return format_float(t.as_breal().lo) + "__" + format_float(t.as_breal().hi);
        case Term::Kind::Str: return o_.quoted ? "\"" + escape_text(t.as_str(), '"') + "\"" : t.as_str();
        case Term::Kind::Susp: return "'SUSP-" + std::to_string(t.susp().id) + "'";
        case Term::Kind::Struct: break;
        }
        if (!o_.canonical && portray && o_.portray) {
            if (auto r = o_.portray(t))
                return write(*r, max_priority, false);
        }
        return compound(t, max_priority);
    }

private:
    std::string var(VarRef v) {
        // A source name wins over an attribute rendering.
        auto it = o_.var_names.find(v.id);
        if (it != o_.var_names.end())
            return it->second;
        if (!o_.canonical && o_.var_text && store_.has_attrs(v))
            if (auto s = o_.var_text(v))
                return *s;
        return "_" + std::to_string(v.id);
    }

    std::string atom(Atom a) { return o_.quoted ? quote_atom_if_needed(a.name()) : a.name(); }

    std::string args(const StructPtr &s) {
        std::string out;
        for (std::size_t i = 0; i < s->args.size(); ++i) {
            if (i)
                out += ", ";
            out += write(s->args[i], 999);
        }
        return out;
    }

    std::string list(Term t) {
        static const Atom kDot(".");
        std::string out = "[";
        bool first = true;
        while (t.is_struct(kDot, 2)) {
            if (!first)
                out += ", ";
            first = false;
            out += write(t.arg(0), 999);
            t = store_.deref(t.arg(1));
        }
        if (!t.is_atom("[]"))
            out += "|" + write(t, 999);
        return out + "]";
    }

    static std::string join(const std::string &l, const std::string &op, const std::string &r, bool spaced) {
        if (spaced)
            return l + " " + op + " " + r;
        std::string out = l;
        auto glue = [&](const std::string &a, const std::string &b) {
            if (a.empty() || b.empty())
                return;
            char x = a.back(), y = b.front();
            if ((symbol_char(x) && symbol_char(y)) || (alnum(x) && alnum(y)))
                out += ' ';
        };
        glue(l, op);
        out += op;
        glue(op, r);
        return out + r;
    }

    std::string compound(const Term &t, int max_priority) {
        static const Atom kDot("."), kSubscript("subscript"), kCurly("{}");
        const StructPtr &s = t.as_struct();
        const std::string &name = s->name.name();
        std::size_t n = s->args.size();
        if (t.is_struct(kDot, 2))
            return list(t);
        if (o_.canonical)
            return atom(s->name) + "(" + args(s) + ")";
        if (s->name == kSubscript && n == 2) {
            Term base = store_.deref(s->args[0]);
            if (base.is_var() && is_index_list(s->args[1])) {
                std::string l = list(store_.deref(s->args[1]));
                return var(base.var()) + l;
            }
        }
        if (s->name == kCurly && n == 1)
            return "{" + write(s->args[0], 1200) + "}";
        if (n == 2) {
            if (auto op = ops_->infix(name)) {
                int p = op->priority;
                int la = op->type == OpType::yfx ? p : p - 1;
                int ra = op->type == OpType::xfy ? p : p - 1;
                std::string l = operand(s->args[0], la), r = operand(s->args[1], ra);
                std::string text;
                if (name == ",")
                    text = l + ", " + r;
                else
                    text = join(l, atom(s->name), r, !(name == ":" || name == ".." || name == "^"));
                return p > max_priority ? "(" + text + ")" : text;
            }
        }
        if (n == 1) {
            auto op = ops_->prefix(name);
            // -(1) must not print as the literal -1
            bool numeric = (name == "-" || name == "+") && store_.deref(s->args[0]).is_number();
            if (op && !numeric) {
                int p = op->priority;
                int am = op->type == OpType::fy ? p : p - 1;
                std::string a = operand(s->args[0], am);
                std::string o = atom(s->name);
                bool space = alnum(o.back()) || a.empty() || a.front() == '(' || symbol_char(a.front());
                std::string text = o + (space ? " " : "") + a;
                return p > max_priority ? "(" + text + ")" : text;
            }
            if (auto op = ops_->postfix(name)) {
                int p = op->priority;
                int am = op->type == OpType::yf ? p : p - 1;
                std::string text = operand(s->args[0], am) + " " + atom(s->name);
                return p > max_priority ? "(" + text + ")" : text;
            }
        }
        return atom(s->name) + "(" + args(s) + ")";
    }

    // An operator atom as an operand needs brackets to read back.
    std::string operand(const Term &a, int max_priority) {
        Term t = store_.deref(a);
        if (t.is_atom()) {
            const std::string &name = t.atom().name();
            if (ops_->infix(name) || ops_->prefix(name) || ops_->postfix(name))
                return "(" + atom(t.atom()) + ")";
        }
        return write(t, max_priority);
    }

    bool is_index_list(const Term &l) const {
        static const Atom kDot(".");
        Term t = store_.deref(l);
        if (!t.is_struct(kDot, 2))
            return false;
        while (t.is_struct(kDot, 2))
            t = store_.deref(t.arg(1));
        return t.is_atom("[]");
    }

    const Store &store_;
    const WriteOptions &o_;
    OpTable fallback_;
    const OpTable *ops_;
};

} // namespace

std::string format_float(double d) {
    if (std::isnan(d))
        return "1.5NaN";
    if (std::isinf(d))
        return d > 0 ? "1.0Inf" : "-1.0Inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, d);
    std::string s(buf, res.ptr);
    if (s.find('.') == std::string::npos) {
        auto e = s.find('e');
        if (e == std::string::npos)
            s += ".0";
        else
            s.insert(e, ".0");
    }
    return s;
}

std::string quote_atom_if_needed(const std::string &name) {
    if (name == "[]" || name == "{}" || name == "!" || name == ";")
        return name;
    bool plain = false;
    if (!name.empty() && std::islower(static_cast<unsigned char>(name[0]))) {
        plain = true;
        for (char c : name)
            plain = plain && alnum(c);
    } else if (!name.empty() && name != ".") {
        plain = true;
        for (char c : name)
            plain = plain && symbol_char(c);
    }
    if (plain)
        return name;
    return "'" + escape_text(name, '\'') + "'";
}

std::string write_term(const Store &store, const Term &t, const WriteOptions &opts) {
    Writer w(store, opts);
    return w.write(t, 1200);
}

} // namespace clpk
