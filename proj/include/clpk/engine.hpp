#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "clpk/attvar.hpp"
#include "clpk/expand.hpp"
#include "clpk/reader.hpp"

namespace clpk {

class Engine;
struct Module;

using PredKey = std::uint64_t;
inline PredKey pred_key(Atom name, std::size_t arity) { return (std::uint64_t(name.id()) << 16) | arity; }

struct Clause {
    // Variables are encoded as '$LV'(I) placeholders.
    Term head;
    Term body;
    std::uint32_t nvars = 0;
    // First-argument index key; 0 matches anything.
    std::uint64_t key = 0;
};

struct Pred {
    Atom name;
    std::size_t arity = 0;
    std::vector<Clause> clauses;
    Module *home = nullptr;
    bool demon = false;
    bool exported = false;
};

// A transformation attached to a functor.
struct Transform {
    Atom pred;
    std::size_t arity = 2; // transformer arity: 2 or 3
    Module *module = nullptr;
    bool exported = false;
};

struct Module {
    Atom name;
    std::unordered_map<PredKey, Pred> preds;
    std::vector<Module *> imports;
    OpTable ops = OpTable::standard();
    StructTable structs;
    std::unordered_set<std::uint32_t> exported_structs;
    std::unordered_map<PredKey, Transform> term_macros, clause_macros, goal_expansions, portrays;
};

using Builtin = std::function<bool(Engine &, std::span<const Term>)>;

// Thrown by halt/0,1.
struct Halt {
    int code = 0;
};

struct Answer {
    std::vector<std::pair<std::string, Term>> bindings;
};

class Engine;

// A top-level query enumerating answers on demand. Queries nest
// strictly: destroy the inner one first.
class Query {
public:
    Query(Engine &e, const Term &goal, Module *m, std::vector<std::pair<std::string, Term>> vars = {});
    Query(const Query &) = delete;
    Query &operator=(const Query &) = delete;
    ~Query();

    bool next();
    const std::vector<std::pair<std::string, Term>> &vars() const { return vars_; }
    // Suspensions left pending after the current answer.
    std::vector<SuspRef> delayed() const;

private:
    Engine &e_;
    std::size_t base_;
    std::size_t first_susp_;
    bool started_ = false;
    bool done_ = false;
    Term goal_;
    Module *module_;
    std::vector<std::pair<std::string, Term>> vars_;
};

class Engine {
public:
    Engine();
    ~Engine();
    Engine(const Engine &) = delete;
    Engine &operator=(const Engine &) = delete;

    Kernel k;
    Store &store() { return k.store; }
    Scheduler &sched() { return k.sched; }

    Module *module(Atom name, bool create = true);
    Module *user() { return user_; }
    Module *sys() { return sys_; }

    void consult_file(const std::string &path);
    void load_string(const std::string &text, const std::string &file = "", Module *m = nullptr);

    // Reads one term (without the final '.') in the context of a module.
    ReadResult read_term(const std::string &text, Module *m = nullptr);

    // Runs a goal to its first solution and keeps the bindings.
    bool once(const Term &goal, Module *m = nullptr);
    // Counts solutions; errors out if any solution flounders.
    std::size_t count_solutions(const Term &goal, Module *m = nullptr);

    std::string format(const Term &t, bool canonical = false,
                       const std::vector<std::pair<std::string, Term>> &names = {}, Module *m = nullptr,
                       bool quoted = true);
    std::string format_goal(SuspRef s, const std::vector<std::pair<std::string, Term>> &names = {});
    std::string describe_suspension(SuspRef s, const std::vector<std::pair<std::string, Term>> &names = {});

    void add_builtin(const std::string &name, std::size_t arity, Builtin fn);
    bool is_builtin(Atom name, std::size_t arity) const;
    // Custom text for variables carrying a given attribute.
    void add_var_printer(const std::string &attribute, std::function<std::optional<std::string>(Engine &, VarRef)> fn);
    void add_goal_expander(const std::string &name, std::size_t arity,
                           std::function<std::optional<Term>(Engine &, const Term &, Module *)> fn);
    void add_portray(const std::string &name, std::size_t arity, std::function<std::optional<Term>(Engine &, const Term &)> fn);

    // Compile-time body rewriting (goal expansion, loops, struct updates).
    // `clause` is the enclosing clause, used to spot loop variables that leak.
    Term expand_goal(const Term &goal, Module *m, const Term &clause);
    void add_clause(Module *m, const Term &clause, bool expand = true);

    std::optional<SuspRef> current_suspension() const { return cur_susp_; }
    int current_priority() const { return prio_; }

    std::function<void(const std::string &)> warn;
    std::ostream *out = nullptr;

    // Error-ball helpers used by builtins.
    Module *context_module() const { return ctx_module_; }

private:
    friend class Query;
    struct Frame;
    using Cont = std::shared_ptr<const Frame>;
    struct ChoicePoint;

    void install_builtins();
    void load_prelude();

    Term read_hooked(Parser &p, Module *m, ReadResult &rr);
    void handle_clause(Module *&m, const ReadResult &rr, const std::string &file);
    void run_directive(Module *&m, const Term &d, const std::string &file);
    void declare(Module *m, const Term &spec, bool exported);
    void register_transform(Module *m, const Term &spec, bool exported, bool portray);
    const StructTable *struct_table(Module *m, Atom name);
    Term expand_term_macros(Module *m, const Term &t);
    Module *lookup_module_term(const Term &t);
    std::optional<Term> apply_transform(const Transform &tr, const Term &in, Module *m);

    Clause compile_clause(const Term &head, const Term &body);
    Term instantiate(const Term &tmpl, std::vector<std::optional<Term>> &frame);
    std::uint64_t index_key(const Term &t) const;

    // Machine.
    bool run(std::size_t base);
    bool backtrack(std::size_t base);
    bool step(const Term &goal, std::size_t cutb, Module *m);
    bool call_pred(Pred *p, const Term &goal, Module *m);
    bool try_clause(Pred *p, std::size_t i, const Term &goal, std::size_t cutb);
    std::size_t next_clause(const Pred *p, std::size_t from, std::uint64_t key) const;
    // Removes the barrier at `index` and everything above it; `keep` retains the bindings.
    void drop_barrier(std::size_t index, bool keep);
    const Transform *visible_transform(Module *m, std::unordered_map<PredKey, Transform> Module::*table, PredKey key);
    Pred *resolve(Module *m, Atom name, std::size_t arity);
    void push_cp(ChoicePoint cp);
    void pop_cp();
    void cut_to(std::size_t height);
    bool handle_error(const Term &ball, std::size_t base);
    bool solve_nested(const Term &goal, Module *m, const std::function<bool()> &on_solution);

    Term freeze(const Term &t);
    Term thaw(const Term &t);

    Module *user_ = nullptr;
    Module *sys_ = nullptr;
    std::unordered_map<std::uint32_t, std::unique_ptr<Module>> modules_;
    std::unordered_map<PredKey, Builtin> builtins_;
    std::vector<std::pair<Atom, std::function<std::optional<std::string>(Engine &, VarRef)>>> var_printers_;

    using GoalExpander = std::function<std::optional<Term>(Engine &, const Term &, Module *)>;
    using Portray = std::function<std::optional<Term>(Engine &, const Term &)>;
    std::unordered_map<PredKey, GoalExpander> cxx_goal_expanders_;
    std::unordered_map<PredKey, Portray> cxx_portrays_;
    std::vector<std::pair<std::string, Term>> cur_names_;

    std::vector<ChoicePoint> cps_;
    Cont cont_;
    int prio_ = 13;
    std::optional<SuspRef> cur_susp_;
    Module *ctx_module_ = nullptr;
    std::uint64_t aux_counter_ = 0;
    std::unordered_set<const Pred *> *load_seen_ = nullptr;
    // Frozen goals registered by undo/1, run once the trail has been unwound.
    std::vector<Term> pending_undo_;
    void run_undos();

    friend struct EngineAccess;
};

std::string format_error(Engine &e, const PrologError &err);

// Elements of a list or of a (nested) array, flattened.
std::vector<Term> collection_items(const Store &s, const Term &t);

} // namespace clpk
