#include <algorithm>
#include <cmath>
#include <ostream>

#include "clpk/arith.hpp"
#include "clpk/engine.hpp"

namespace clpk {

using namespace arith;

namespace {

const Atom kDot("."), kNil("[]"), kArrowCond("->"), kColon(":"), kMinus("-"), kArray("[]");

std::int64_t get_int(const Store &s, const Term &t_in) {
    Term t = s.deref(t_in);
    if (t.is_var())
        throw_instantiation_error();
    if (!t.is_small_int())
        throw_type_error("integer", t);
    return t.small_int();
}

Atom get_atom(const Store &s, const Term &t_in) {
    Term t = s.deref(t_in);
    if (t.is_var())
        throw_instantiation_error();
    if (!t.is_atom())
        throw_type_error("atom", t);
    return t.atom();
}

Term make_codes(const std::string &text) {
    std::vector<Term> items;
    for (unsigned char c : text)
        items.push_back(Term::integer(c));
    return mk_list(items);
}

Term make_chars(const std::string &text) {
    std::vector<Term> items;
    for (char c : text)
        items.push_back(Term::atom(std::string(1, c)));
    return mk_list(items);
}

std::string codes_text(const Store &s, const Term &list) {
    std::string out;
    for (const auto &c : list_to_vector(s, list)) {
        Term d = s.deref(c);
        if (d.is_small_int())
            out += static_cast<char>(d.small_int());
        else if (d.is_atom() && d.atom().name().size() == 1)
            out += d.atom().name();
        else if (d.is_var())
            throw_instantiation_error();
        else
            throw_type_error("character_code", d);
    }
    return out;
}

Term parse_number(const std::string &text) {
    auto toks = tokenize(text + " .");
    bool neg = false;
    std::size_t i = 0;
    if (toks.size() > i && toks[i].kind == TokKind::Name && toks[i].text == "-") {
        neg = true;
        ++i;
    }
    if (toks.size() != i + 3 || toks[i].kind != TokKind::Number || toks[i + 1].kind != TokKind::End)
        throw PrologError(error_term(mk_struct("syntax_error", {Term::atom("illegal_number")})), "illegal number");
    return number_from_literal(toks[i].text, neg);
}

std::string plain_text(Engine &e, const Term &t_in) {
    Term t = e.store().deref(t_in);
    if (t.is_atom())
        return t.atom().name();
    if (t.is_str())
        return t.as_str();
    if (t.is_number())
        return e.format(t);
    if (t.is_var())
        throw_instantiation_error();
    throw_type_error("atomic", t);
}

bool unify_int(Engine &e, const Term &t, std::int64_t v) { return e.store().unify(t, Term::integer(v)); }

// Attaches a suspension according to Vars->Cond or a list of those.
void attach_spec(Engine &e, SuspRef s, const Term &spec_in) {
    Store &st = e.store();
    Term spec = st.deref(spec_in);
    if (spec.is_atom(kNil))
        return;
    if (spec.is_struct(kDot, 2)) {
        for (const auto &x : list_to_vector(st, spec))
            attach_spec(e, s, x);
        return;
    }
    if (spec.is_var())
        throw_instantiation_error();
    if (!spec.is_struct(kArrowCond, 2))
        throw_type_error("suspension_condition", spec);
    Term cond = st.deref(spec.arg(1));
    WakingCondition wc;
    if (cond.is_atom("inst"))
        wc = WakingCondition::inst();
    else if (cond.is_atom("bound"))
        wc = WakingCondition::bound();
    else if (cond.is_atom("constrained"))
        wc = WakingCondition::constrained();
    else if (cond.is_struct(kColon, 2) && st.deref(cond.arg(0)).is_atom() && st.deref(cond.arg(1)).is_atom())
        wc = WakingCondition{st.deref(cond.arg(0)).atom().name(), st.deref(cond.arg(1)).atom().name()};
    else
        throw_domain_error("suspension_condition", cond);
    for (auto v : term_vars(st, spec.arg(0)))
        e.k.attrs.attach(s, Term(v), wc);
}

SuspRef get_susp(const Store &s, const Term &t_in) {
    Term t = s.deref(t_in);
    if (t.is_var())
        throw_instantiation_error();
    if (!t.is_susp())
        throw_type_error("suspension", t);
    return t.susp();
}

std::vector<Term> sort_terms(const Store &s, std::vector<Term> items, const std::function<Term(const Term &)> &key,
                             bool descending, bool dedup) {
    std::vector<std::pair<Term, Term>> kv;
    kv.reserve(items.size());
    for (auto &x : items)
        kv.emplace_back(key(x), x);
    std::stable_sort(kv.begin(), kv.end(), [&](const auto &a, const auto &b) {
        int c = compare_terms(s, a.first, b.first);
        return descending ? c > 0 : c < 0;
    });
    std::vector<Term> out;
    for (std::size_t i = 0; i < kv.size(); ++i) {
        if (dedup && i > 0 && compare_terms(s, kv[i - 1].first, kv[i].first) == 0)
            continue;
        out.push_back(kv[i].second);
    }
    return out;
}

// format/2 directives: ~w ~p ~q ~a ~d ~n ~~.
std::string run_format(Engine &e, const std::string &fmt, const std::vector<Term> &args) {
    std::string out;
    std::size_t ai = 0;
    auto next_arg = [&]() -> Term {
        if (ai >= args.size())
            throw PrologError(error_term(mk_struct("format", {Term::string("not enough arguments")})),
                              "format: not enough arguments");
        return args[ai++];
    };
    for (std::size_t i = 0; i < fmt.size(); ++i) {
        if (fmt[i] != '~' || i + 1 == fmt.size()) {
            out += fmt[i];
            continue;
        }
        switch (char d = fmt[++i]) {
        case 'w': case 'p': case 'a': case 'd': out += e.format(next_arg(), false, {}, nullptr, false); break;
        case 'q': out += e.format(next_arg()); break;
        case 'n': out += '\n'; break;
        case '~': out += '~'; break;
        default: out += std::string("~") + d;
        }
    }
    return out;
}

Term list_or_array_items(const Store &s, const Term &t_in, std::vector<Term> &out) {
    Term t = s.deref(t_in);
    if (t.is_struct() && t.functor() == kArray) {
        for (const auto &a : t.as_struct()->args)
            list_or_array_items(s, a, out);
    } else if (t.is_struct(kDot, 2) || t.is_atom(kNil)) {
        for (const auto &x : list_to_vector(s, t))
            list_or_array_items(s, x, out);
    } else {
        out.push_back(t);
    }
    return t;
}

} // namespace

// Variables and elements of a list, or of a (nested) array, flattened.
std::vector<Term> collection_items(const Store &s, const Term &t) {
    std::vector<Term> out;
    list_or_array_items(s, t, out);
    return out;
}

void Engine::install_builtins() {
    using Args = std::span<const Term>;
    auto type_check = [this](const std::string &name, std::function<bool(const Term &)> pred) {
        add_builtin(name, 1, [pred](Engine &e, Args a) { return pred(e.store().deref(a[0])); });
    };
    type_check("var", [](const Term &t) { return t.is_var(); });
    type_check("nonvar", [](const Term &t) { return !t.is_var(); });
    type_check("atom", [](const Term &t) { return t.is_atom(); });
    type_check("number", [](const Term &t) { return t.is_number(); });
    type_check("integer", [](const Term &t) { return t.is_int(); });
    type_check("float", [](const Term &t) { return t.is_float(); });
    type_check("rational", [](const Term &t) { return t.is_rat(); });
    type_check("breal", [](const Term &t) { return t.is_breal(); });
    type_check("string", [](const Term &t) { return t.is_str(); });
    type_check("atomic", [](const Term &t) { return t.is_atomic(); });
    type_check("compound", [](const Term &t) { return t.is_struct(); });
    type_check("callable", [](const Term &t) { return t.is_callable(); });
    type_check("is_suspension", [](const Term &t) { return t.is_susp(); });
    add_builtin("meta", 1, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        return t.is_var() && e.store().has_attrs(t.var());
    });
    add_builtin("is_list", 1, [](Engine &e, Args a) { return is_proper_list(e.store(), a[0]); });
    add_builtin("ground", 1, [](Engine &e, Args a) { return term_vars(e.store(), a[0]).empty(); });

    // Unification and comparison.
    add_builtin("=", 2, [](Engine &e, Args a) { return e.store().unify(a[0], a[1]); });
    add_builtin("\\=", 2, [](Engine &e, Args a) {
        Store &s = e.store();
        Store::Mark m = s.push_choicepoint();
        bool ok = s.unify(a[0], a[1]);
        s.backtrack_to(m);
        s.pop_choicepoint();
        return !ok;
    });
    auto order = [this](const std::string &name, std::function<bool(int)> test) {
        add_builtin(name, 2, [test](Engine &e, Args a) { return test(compare_terms(e.store(), a[0], a[1])); });
    };
    order("==", [](int c) { return c == 0; });
    order("\\==", [](int c) { return c != 0; });
    order("@<", [](int c) { return c < 0; });
    order("@>", [](int c) { return c > 0; });
    order("@=<", [](int c) { return c <= 0; });
    order("@>=", [](int c) { return c >= 0; });
    add_builtin("compare", 3, [](Engine &e, Args a) {
        int c = compare_terms(e.store(), a[1], a[2]);
        return e.store().unify(a[0], Term::atom(c < 0 ? "<" : c > 0 ? ">" : "="));
    });

    // Arithmetic.
    add_builtin("is", 2, [](Engine &e, Args a) {
        Evaluator ev(e.store());
        return e.store().unify(a[0], to_term(ev.eval(a[1])));
    });
    for (const char *op : {"=:=", "=\\=", "<", ">", "=<", ">="}) {
        Rel rel = *rel_from_name(op);
        add_builtin(op, 2, [rel](Engine &e, Args a) {
            Evaluator ev(e.store());
            return compare_numeric(rel, ev.eval(a[0]), ev.eval(a[1]));
        });
    }
    add_builtin("succ", 2, [](Engine &e, Args a) {
        Term x = e.store().deref(a[0]);
        if (!x.is_var()) {
            auto v = get_int(e.store(), x);
            if (v < 0)
                throw_type_error("not_less_than_zero", x);
            return unify_int(e, a[1], v + 1);
        }
        auto v = get_int(e.store(), a[1]);
        return v > 0 && unify_int(e, x, v - 1);
    });

    // Term construction and inspection.
    add_builtin("functor", 3, [](Engine &e, Args a) {
        Store &s = e.store();
        Term t = s.deref(a[0]);
        if (!t.is_var()) {
            if (t.is_struct())
                return s.unify(a[1], Term(t.functor())) && unify_int(e, a[2], static_cast<std::int64_t>(t.arity()));
            return s.unify(a[1], t) && unify_int(e, a[2], 0);
        }
        Term name = s.deref(a[1]);
        std::int64_t n = get_int(s, a[2]);
        if (n < 0)
            throw_domain_error("not_less_than_zero", a[2]);
        if (n == 0)
            return s.unify(t, name);
        if (name.is_var())
            throw_instantiation_error();
        if (!name.is_atom())
            throw_type_error("atomic", name);
        std::vector<Term> args;
        for (std::int64_t i = 0; i < n; ++i)
            args.push_back(s.new_var());
        return s.unify(t, mk_struct(name.atom(), std::move(args)));
    });
    add_builtin("arg", 3, [](Engine &e, Args a) {
        Store &s = e.store();
        std::int64_t i = get_int(s, a[0]);
        Term t = s.deref(a[1]);
        if (t.is_var())
            throw_instantiation_error();
        if (!t.is_struct())
            throw_type_error("compound", t);
        if (i < 1 || static_cast<std::size_t>(i) > t.arity())
            return false;
        return s.unify(a[2], t.arg(static_cast<std::size_t>(i - 1)));
    });
    add_builtin("=..", 2, [](Engine &e, Args a) {
        Store &s = e.store();
        Term t = s.deref(a[0]);
        if (!t.is_var()) {
            std::vector<Term> items;
            if (t.is_struct()) {
                items.push_back(Term(t.functor()));
                for (const auto &x : t.as_struct()->args)
                    items.push_back(x);
            } else {
                items.push_back(t);
            }
            return s.unify(a[1], mk_list(items));
        }
        auto items = list_to_vector(s, a[1]);
        if (items.empty())
            throw_domain_error("non_empty_list", a[1]);
        Term head = s.deref(items[0]);
        if (items.size() == 1)
            return s.unify(t, head);
        if (head.is_var())
            throw_instantiation_error();
        if (!head.is_atom())
            throw_type_error("atom", head);
        return s.unify(t, mk_struct(head.atom(), std::vector<Term>(items.begin() + 1, items.end())));
    });
    add_builtin("copy_term", 2, [](Engine &e, Args a) { return e.store().unify(a[1], e.k.attrs.copy_term(a[0])); });
    add_builtin("setarg", 3, [](Engine &e, Args a) {
        Store &s = e.store();
        std::int64_t i = get_int(s, a[0]);
        Term t = s.deref(a[1]);
        if (t.is_var())
            throw_instantiation_error();
        if (!t.is_struct())
            throw_type_error("compound", t);
        if (i < 1 || static_cast<std::size_t>(i) > t.arity())
            throw_range_error(a[0]);
        s.set_arg(static_cast<std::size_t>(i), t, s.deref(a[2]));
        return true;
    });
    add_builtin("term_variables", 2, [](Engine &e, Args a) {
        std::vector<Term> vs;
        for (auto v : term_vars(e.store(), a[0]))
            vs.push_back(Term(v));
        return e.store().unify(a[1], mk_list(vs));
    });

    // Arrays.
    add_builtin("subscript", 3, [](Engine &e, Args a) {
        Store &s = e.store();
        auto idx = list_to_vector(s, a[1]);
        return s.unify(a[2], subscript(s, a[0], idx));
    });
    add_builtin("dim", 2, [](Engine &e, Args a) {
        Store &s = e.store();
        Term t = s.deref(a[0]);
        if (t.is_var()) {
            Term d = s.deref(a[1]);
            if (d.is_var() || !is_proper_list(s, d))
                throw_instantiation_error();
            std::vector<std::int64_t> dims;
            for (const auto &x : list_to_vector(s, d))
                dims.push_back(get_int(s, x));
            return s.unify(t, make_array(s, dims));
        }
        std::vector<Term> dims;
        for (auto n : array_dims(s, t))
            dims.push_back(Term::integer(n));
        return s.unify(a[1], mk_list(dims));
    });
    add_builtin("arity", 2, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        if (t.is_var())
            throw_instantiation_error();
        return unify_int(e, a[1], static_cast<std::int64_t>(t.arity()));
    });

    // Loop support: bounds are evaluated once before the loop.
    add_builtin("$loop_arity", 2, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        if (t.is_var())
            throw_instantiation_error();
        // An atomic term (the empty array among them) has no arguments.
        if (!t.is_struct())
            return unify_int(e, a[1], 1);
        return unify_int(e, a[1], static_cast<std::int64_t>(t.arity()) + 1);
    });
    auto loop_int = [](Engine &e, const Term &x) -> Integer {
        Evaluator ev(e.store());
        Number n = ev.eval(x);
        if (!std::holds_alternative<Integer>(n))
            throw_type_error("integer", to_term(n));
        return std::get<Integer>(n);
    };
    add_builtin("$loop_for", 4, [loop_int](Engine &e, Args a) {
        Integer f = loop_int(e, a[0]), t = loop_int(e, a[1]);
        Integer stop = std::max(f, Integer(t + 1));
        return e.store().unify(a[2], Term::integer(f)) && e.store().unify(a[3], Term::integer(stop));
    });
    add_builtin("$loop_for", 6, [loop_int](Engine &e, Args a) {
        Integer f = loop_int(e, a[0]), t = loop_int(e, a[1]), st = loop_int(e, a[2]);
        if (st == 0)
            throw_domain_error("nonzero_step", Term::integer(st));
        // Number of iterations, then the value just past the last one.
        Integer count = 0;
        if ((st > 0 && t >= f) || (st < 0 && t <= f))
            count = (t - f) / st + 1;
        Integer stop = f + count * st;
        return e.store().unify(a[3], Term::integer(f)) && e.store().unify(a[4], Term::integer(stop)) &&
               e.store().unify(a[5], Term::integer(st));
    });
    add_builtin("update_struct", 4, [](Engine &e, Args a) {
        Store &s = e.store();
        Atom name = get_atom(s, a[0]);
        Module *m = e.context_module();
        const StructTable *tab = m->structs.find(name) ? &m->structs : nullptr;
        for (Module *imp : m->imports)
            if (!tab && imp->structs.find(name))
                tab = &imp->structs;
        if (!tab)
            throw_expansion_error("unknown struct", Term(name));
        return e.once(expand_update_struct(s, *tab, Term(name), a[1], a[2], a[3]), m);
    });

    // Atoms and strings.
    add_builtin("atom_codes", 2, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        if (!t.is_var())
            return e.store().unify(a[1], make_codes(plain_text(e, t)));
        return e.store().unify(t, Term::atom(codes_text(e.store(), a[1])));
    });
    add_builtin("atom_chars", 2, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        if (!t.is_var())
            return e.store().unify(a[1], make_chars(plain_text(e, t)));
        return e.store().unify(t, Term::atom(codes_text(e.store(), a[1])));
    });
    add_builtin("char_code", 2, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        if (t.is_atom())
            return unify_int(e, a[1], static_cast<unsigned char>(t.atom().name()[0]));
        return e.store().unify(t, Term::atom(std::string(1, static_cast<char>(get_int(e.store(), a[1])))));
    });
    add_builtin("atom_length", 2, [](Engine &e, Args a) {
        return unify_int(e, a[1], static_cast<std::int64_t>(plain_text(e, a[0]).size()));
    });
    add_builtin("string_length", 2, [](Engine &e, Args a) {
        return unify_int(e, a[1], static_cast<std::int64_t>(plain_text(e, a[0]).size()));
    });
    add_builtin("atom_concat", 3, [](Engine &e, Args a) {
        return e.store().unify(a[2], Term::atom(plain_text(e, a[0]) + plain_text(e, a[1])));
    });
    add_builtin("string_concat", 3, [](Engine &e, Args a) {
        return e.store().unify(a[2], Term::string(plain_text(e, a[0]) + plain_text(e, a[1])));
    });
    add_builtin("atom_string", 2, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        if (!t.is_var())
            return e.store().unify(a[1], Term::string(plain_text(e, t)));
        return e.store().unify(t, Term::atom(plain_text(e, a[1])));
    });
    add_builtin("number_codes", 2, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        if (!t.is_var())
            return e.store().unify(a[1], make_codes(plain_text(e, t)));
        return e.store().unify(t, parse_number(codes_text(e.store(), a[1])));
    });
    add_builtin("atom_number", 2, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        if (t.is_var())
            return e.store().unify(t, Term::atom(plain_text(e, a[1])));
        try {
            return e.store().unify(a[1], parse_number(plain_text(e, t)));
        } catch (const PrologError &) {
            return false;
        }
    });
    add_builtin("term_string", 2, [](Engine &e, Args a) {
        Term t = e.store().deref(a[0]);
        if (!t.is_var())
            return e.store().unify(a[1], Term::string(e.format(t)));
        return e.store().unify(t, e.read_term(plain_text(e, a[1]), e.context_module()).term);
    });

    // Sorting.
    add_builtin("msort", 2, [](Engine &e, Args a) {
        auto items = list_to_vector(e.store(), a[0]);
        return e.store().unify(a[1], mk_list(sort_terms(e.store(), items, [](const Term &x) { return x; }, false, false)));
    });
    add_builtin("sort", 2, [](Engine &e, Args a) {
        auto items = list_to_vector(e.store(), a[0]);
        return e.store().unify(a[1], mk_list(sort_terms(e.store(), items, [](const Term &x) { return x; }, false, true)));
    });
    add_builtin("keysort", 2, [](Engine &e, Args a) {
        Store &s = e.store();
        auto items = list_to_vector(s, a[0]);
        auto key = [&s](const Term &x) {
            Term d = s.deref(x);
            if (!d.is_struct(kMinus, 2))
                throw_type_error("pair", d);
            return d.arg(0);
        };
        return s.unify(a[1], mk_list(sort_terms(s, items, key, false, false)));
    });
    // sort(Key, Order, List, Sorted): Key 0 sorts whole terms.
    add_builtin("sort", 4, [](Engine &e, Args a) {
        Store &s = e.store();
        std::int64_t k = get_int(s, a[0]);
        Atom ord = get_atom(s, a[1]);
        const std::string &o = ord.name();
        if (o != "<" && o != "=<" && o != ">" && o != ">=")
            throw_domain_error("order", Term(ord));
        auto items = list_to_vector(s, a[2]);
        auto key = [&s, k](const Term &x) -> Term {
            if (k == 0)
                return x;
            return arg_at(static_cast<std::size_t>(k), s.deref(x));
        };
        bool desc = o[0] == '>';
        bool dedup = o.size() == 1;
        return s.unify(a[3], mk_list(sort_terms(s, items, key, desc, dedup)));
    });
    add_builtin("$length_make", 2, [](Engine &e, Args a) {
        std::int64_t n = get_int(e.store(), a[0]);
        std::vector<Term> items;
        for (std::int64_t i = 0; i < n; ++i)
            items.push_back(e.store().new_var());
        return e.store().unify(a[1], mk_list(items));
    });

    // Output.
    auto emit = [](Engine &e, const std::string &s) {
        if (e.out)
            *e.out << s;
        return true;
    };
    add_builtin("write", 1, [emit](Engine &e, Args a) { return emit(e, e.format(a[0], false, {}, nullptr, false)); });
    add_builtin("print", 1, [emit](Engine &e, Args a) { return emit(e, e.format(a[0], false, {}, nullptr, false)); });
    add_builtin("writeln", 1,
                [emit](Engine &e, Args a) { return emit(e, e.format(a[0], false, {}, nullptr, false) + "\n"); });
    add_builtin("writeq", 1, [emit](Engine &e, Args a) { return emit(e, e.format(a[0])); });
    add_builtin("write_canonical", 1, [emit](Engine &e, Args a) { return emit(e, e.format(a[0], true)); });
    add_builtin("nl", 0, [emit](Engine &e, Args) { return emit(e, "\n"); });
    add_builtin("tab", 1, [emit](Engine &e, Args a) {
        return emit(e, std::string(static_cast<std::size_t>(std::max<std::int64_t>(0, get_int(e.store(), a[0]))), ' '));
    });
    add_builtin("format", 1, [emit](Engine &e, Args a) { return emit(e, run_format(e, plain_text(e, a[0]), {})); });
    add_builtin("format", 2, [emit](Engine &e, Args a) {
        Term args = e.store().deref(a[1]);
        std::vector<Term> items = is_proper_list(e.store(), args) ? list_to_vector(e.store(), args)
                                                                  : std::vector<Term>{args};
        return emit(e, run_format(e, plain_text(e, a[0]), items));
    });
    add_builtin("halt", 0, [](Engine &, Args) -> bool { throw Halt{0}; });
    add_builtin("halt", 1, [](Engine &e, Args a) -> bool { throw Halt{static_cast<int>(get_int(e.store(), a[0]))}; });

    // Loading and syntax.
    add_builtin("consult", 1, [](Engine &e, Args a) {
        e.consult_file(plain_text(e, a[0]));
        return true;
    });
    add_builtin("op", 3, [](Engine &e, Args a) {
        Store &s = e.store();
        std::int64_t p = get_int(s, a[0]);
        auto type = op_type_from_name(get_atom(s, a[1]).name());
        if (!type)
            throw_domain_error("operator_specifier", a[1]);
        Term names = s.deref(a[2]);
        std::vector<Term> items = names.is_atom() ? std::vector<Term>{names} : list_to_vector(s, names);
        for (const auto &n : items)
            e.context_module()->ops.declare(static_cast<int>(p), *type, get_atom(s, n).name());
        return true;
    });

    // Suspensions.
    auto make = [](Engine &e, const Term &goal_in, const Term &prio_t) -> SuspRef {
        Store &s = e.store();
        Term goal = s.deref(goal_in);
        if (goal.is_var())
            throw_instantiation_error();
        if (!goal.is_callable())
            throw_type_error("callable", goal);
        std::int64_t prio = get_int(s, prio_t);
        if (prio < Scheduler::kMinPriority || prio > Scheduler::kMaxPriority)
            throw_domain_error("priority", prio_t);
        Module *m = e.context_module();
        Term inner = goal;
        Module *home = m;
        while (inner.is_struct(kColon, 2)) {
            Term mod = s.deref(inner.arg(0));
            if (mod.is_atom())
                if (Module *mm = e.module(mod.atom(), false))
                    home = mm;
            inner = s.deref(inner.arg(1));
        }
        bool demon = false;
        if (inner.is_callable()) {
            auto it = home->preds.find(pred_key(inner.functor(), inner.arity()));
            if (it != home->preds.end())
                demon = it->second.demon;
            else
                for (Module *imp : home->imports)
                    if (auto jt = imp->preds.find(pred_key(inner.functor(), inner.arity())); jt != imp->preds.end())
                        demon = demon || jt->second.demon;
        }
        return e.sched().make(goal, static_cast<int>(prio), demon, m->name.id());
    };
    add_builtin("make_suspension", 3, [make](Engine &e, Args a) {
        return e.store().unify(a[2], Term(make(e, a[0], a[1])));
    });
    add_builtin("suspend", 3, [make](Engine &e, Args a) {
        SuspRef s = make(e, a[0], a[1]);
        attach_spec(e, s, a[2]);
        return true;
    });
    add_builtin("suspend", 4, [make](Engine &e, Args a) {
        SuspRef s = make(e, a[0], a[1]);
        attach_spec(e, s, a[2]);
        return e.store().unify(a[3], Term(s));
    });
    add_builtin("insert_suspension", 3, [](Engine &e, Args a) {
        SuspRef s = get_susp(e.store(), a[1]);
        attach_spec(e, s, mk_struct(kArrowCond, {a[0], a[2]}));
        return true;
    });
    add_builtin("kill_suspension", 1, [](Engine &e, Args a) {
        e.sched().kill(get_susp(e.store(), a[0]));
        return true;
    });
    add_builtin("schedule_suspension", 1, [](Engine &e, Args a) {
        e.sched().schedule(get_susp(e.store(), a[0]));
        return true;
    });
    add_builtin("current_suspension", 1, [](Engine &e, Args a) {
        auto s = e.current_suspension();
        return s && e.store().unify(a[0], Term(*s));
    });
    add_builtin("current_priority", 1, [](Engine &e, Args a) { return unify_int(e, a[0], e.current_priority()); });
    add_builtin("suspension_goal", 2, [](Engine &e, Args a) {
        return e.store().unify(a[1], e.sched().get(get_susp(e.store(), a[0])).goal);
    });
    add_builtin("suspension_priority", 2, [](Engine &e, Args a) {
        return unify_int(e, a[1], e.sched().get(get_susp(e.store(), a[0])).priority);
    });
    add_builtin("suspension_state", 2, [](Engine &e, Args a) {
        SuspState st = e.sched().get(get_susp(e.store(), a[0])).state;
        const char *name = st == SuspState::Suspended ? "suspended" : st == SuspState::Scheduled ? "scheduled" : "executed";
        return e.store().unify(a[1], Term::atom(name));
    });
    add_builtin("delayed_goals", 1, [](Engine &e, Args a) {
        std::vector<Term> goals;
        for (auto s : e.sched().suspended())
            goals.push_back(e.sched().get(s).goal);
        return e.store().unify(a[0], mk_list(goals));
    });
    add_builtin("delayed_goals", 2, [](Engine &e, Args a) {
        std::vector<Term> goals;
        Term t = e.store().deref(a[0]);
        std::vector<VarRef> vars = term_vars(e.store(), t);
        for (auto s : e.sched().suspended()) {
            const Suspension &su = e.sched().get(s);
            for (const auto &[v, _] : su.attachments) {
                Term d = e.store().deref(v);
                if (d.is_var() && std::find(vars.begin(), vars.end(), d.var()) != vars.end()) {
                    goals.push_back(su.goal);
                    break;
                }
            }
        }
        return e.store().unify(a[1], mk_list(goals));
    });
    add_builtin("notify_constrained", 1, [](Engine &e, Args a) {
        e.k.attrs.notify_constrained(a[0]);
        return true;
    });
    add_builtin("add_attr", 3, [](Engine &e, Args a) {
        Term v = e.store().deref(a[0]);
        if (!v.is_var())
            throw_instantiation_error();
        e.k.attrs.add_attr(v, get_atom(e.store(), a[1]).name(), e.store().deref(a[2]));
        return true;
    });
    add_builtin("get_attr", 3, [](Engine &e, Args a) {
        auto r = e.k.attrs.get_attr(a[0], get_atom(e.store(), a[1]).name());
        return r && e.store().unify(a[2], *r);
    });
    add_builtin("get_var_bounds", 3, [](Engine &e, Args a) {
        Term v = e.store().deref(a[0]);
        if (v.is_number()) {
            Number n = to_number(v);
            Breal b = to_breal(n);
            return e.store().unify(a[1], Term::floating(b.lo)) && e.store().unify(a[2], Term::floating(b.hi));
        }
        auto [lo, hi] = e.k.attrs.get_var_bounds(v);
        return e.store().unify(a[1], Term::floating(lo)) && e.store().unify(a[2], Term::floating(hi));
    });
    add_builtin("set_var_bounds", 3, [](Engine &e, Args a) {
        Evaluator ev(e.store());
        double lo = to_breal(ev.eval(a[1])).lo, hi = to_breal(ev.eval(a[2])).hi;
        return e.k.attrs.set_var_bounds(a[0], lo, hi);
    });
    // undo(Goal): Goal runs when execution backtracks over this point.
    add_builtin("undo", 1, [](Engine &e, Args a) {
        Term frozen = e.freeze(a[0]);
        e.store().register_undo([&e, frozen] { e.pending_undo_.push_back(frozen); });
        return true;
    });
}

} // namespace clpk
