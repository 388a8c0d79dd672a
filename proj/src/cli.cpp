#include "clpk/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace clpk {

namespace {

using Names = std::vector<std::pair<std::string, Term>>;

Names visible_names(const Names &vars) {
    Names out;
    for (const auto &nv : vars)
        if (!nv.first.empty() && nv.first[0] != '_')
            out.push_back(nv);
    return out;
}

// Unnamed plain variables print as "_", as the toplevel does.
Names with_anonymous(Engine &e, const Names &names, const Term &t) {
    Names out = names;
    for (auto v : term_vars(e.store(), t)) {
        bool named = false;
        for (const auto &[n, x] : names) {
            Term d = e.store().deref(x);
            named = named || (d.is_var() && d.var() == v);
        }
        if (!named && !e.store().has_attrs(v))
            out.emplace_back("_", Term(v));
    }
    return out;
}

// Values binding tighter than '=' can stand on the right of "X = ".
bool needs_brackets(Engine &e, const Term &t) {
    if (!t.is_struct() || t.is_struct(".", 2))
        return false;
    const OpTable &ops = e.user()->ops;
    const std::string &name = t.functor().name();
    std::optional<OpDef> op;
    if (t.arity() == 2)
        op = ops.infix(name);
    else if (t.arity() == 1)
        op = ops.prefix(name) ? ops.prefix(name) : ops.postfix(name);
    return op && op->priority >= 700;
}

struct Session {
    Engine &e;
    std::istream &in;
    std::ostream &out;
    std::ostream &err;
    bool canonical;
    std::optional<std::string> pushed_back;

    bool getline(std::string &line) {
        if (pushed_back) {
            line = *pushed_back;
            pushed_back.reset();
            return true;
        }
        return static_cast<bool>(std::getline(in, line));
    }

    // Accumulates lines until the text ends with a full stop.
    std::optional<std::string> read_query() {
        std::string text, line;
        while (true) {
            if (text.empty())
                out << "?- " << std::flush;
            if (!getline(line))
                return text.empty() ? std::nullopt : std::optional<std::string>(text);
            text += line + "\n";
            auto pos = text.find_last_not_of(" \t\r\n");
            if (pos == std::string::npos) {
                text.clear();
                continue;
            }
            if (text[pos] == '.')
                return text;
        }
    }

    void print_answer(const Query &q) {
        auto lines = answer_lines(e, q, canonical);
        for (const auto &l : lines)
            out << l << "\n";
    }

    // Runs one query interactively; ';' on the next line asks for more.
    void run_query(const std::string &text_in) {
        std::string text = text_in;
        auto start = text.find_first_not_of(" \t\r\n");
        if (start != std::string::npos && text.compare(start, 2, "?-") == 0)
            text = text.substr(start + 2);
        ReadResult rr = e.read_term(text);
        Term goal = e.expand_goal(rr.term, e.user(), rr.term);
        Query q(e, goal, e.user(), rr.var_names);
        while (q.next()) {
            print_answer(q);
            std::string line;
            if (getline(line)) {
                auto p = line.find_first_not_of(" \t\r");
                if (p != std::string::npos && line[p] == ';') {
                    out << "\n";
                    continue;
                }
                pushed_back = line;
            }
            out << "yes\n";
            return;
        }
        out << "no\n";
    }

    int repl() {
        while (auto text = read_query()) {
            try {
                run_query(*text);
            } catch (const PrologError &ex) {
                err << format_error(e, ex) << "\n";
            } catch (const Halt &) {
                throw;
            } catch (const std::exception &ex) {
                err << "error: " << ex.what() << "\n";
            }
        }
        return 0;
    }
};

} // namespace

std::vector<std::string> answer_lines(Engine &e, const Query &q, bool canonical) {
    Store &s = e.store();
    Names names = visible_names(q.vars());
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto &[name, v] = names[i];
        Term d = s.deref(v);
        if (d.is_var()) {
            std::optional<std::string> alias;
            for (std::size_t j = 0; j < i && !alias; ++j) {
                Term dj = s.deref(names[j].second);
                if (dj.is_var() && dj.var() == d.var())
                    alias = names[j].first;
            }
            if (alias) {
                lines.push_back(name + " = " + *alias);
                continue;
            }
            if (!s.has_attrs(d.var()) || canonical)
                continue;
            // Show the attribute rendering rather than the name.
            Names others;
            for (const auto &nv : names)
                if (Term dn = s.deref(nv.second); !(dn.is_var() && dn.var() == d.var()))
                    others.push_back(nv);
            std::string text = e.format(d, false, others);
            if (text != name && text.rfind("_", 0) == 0 && text.size() > 1 && text[1] == '{')
                lines.push_back(name + " = " + text);
            continue;
        }
        std::string text = e.format(d, canonical, with_anonymous(e, names, d));
        if (!canonical && needs_brackets(e, d))
            text = "(" + text + ")";
        lines.push_back(name + " = " + text);
    }
    auto delayed = q.delayed();
    if (!delayed.empty()) {
        lines.push_back("");
        lines.push_back("Delayed goals:");
        for (auto su : delayed)
            lines.push_back("    " + e.format(e.sched().get(su).goal, canonical, names));
    }
    return lines;
}

int run_cli(const CliOptions &opts, std::istream &in, std::ostream &out, std::ostream &err) {
    Engine e;
    e.out = &out;
    e.warn = [&err](const std::string &msg) { err << "warning: " << msg << "\n"; };
    try {
        for (const auto &f : opts.files)
            e.consult_file(f);
        if (!opts.goal) {
            Session s{e, in, out, err, opts.canonical, std::nullopt};
            return s.repl();
        }
        ReadResult rr = e.read_term(*opts.goal);
        Term goal = e.expand_goal(rr.term, e.user(), rr.term);
        if (opts.count) {
            std::size_t n = e.count_solutions(goal, e.user());
            out << n << "\n";
            return 0;
        }
        Query q(e, goal, e.user(), rr.var_names);
        std::size_t found = 0;
        while (q.next()) {
            if (found++ && opts.all)
                out << "\n";
            for (const auto &l : answer_lines(e, q, opts.canonical))
                out << l << "\n";
            if (!opts.all)
                break;
        }
        if (!found) {
            out << "no\n";
            return 1;
        }
        return 0;
    } catch (const Halt &h) {
        return h.code;
    } catch (const PrologError &ex) {
        err << format_error(e, ex) << "\n";
        return 2;
    } catch (const std::exception &ex) {
        err << "error: " << ex.what() << "\n";
        return 2;
    }
}

int cli_main(int argc, char **argv) {
    CLI::App app{"clpk: a small constraint logic programming system"};
    CliOptions opts;
    std::string goal;
    app.add_option("files", opts.files, "Program files to load");
    auto *g = app.add_option("-g,--goal", goal, "Run a goal instead of the toplevel");
    app.add_flag("-c,--count", opts.count, "Print the number of solutions of the goal");
    app.add_flag("-a,--all", opts.all, "Print every solution of the goal");
    app.add_flag("--canonical", opts.canonical, "Print terms without operators or transforms");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError &ex) {
        app.exit(ex);
        return 2;
    }
    if (g->count())
        opts.goal = goal;
    if ((opts.count || opts.all) && !opts.goal) {
        std::cerr << "error: --count and --all need a goal (-g)\n";
        return 2;
    }
    return run_cli(opts, std::cin, std::cout, std::cerr);
}

} // namespace clpk
