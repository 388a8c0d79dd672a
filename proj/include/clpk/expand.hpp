#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clpk/store.hpp"
#include "clpk/term.hpp"

namespace clpk {

[[noreturn]] void throw_expansion_error(const std::string &what, const Term &culprit);

struct StructDecl {
    Atom name;
    std::vector<Atom> fields;
};

class StructTable {
public:
    // Redeclaration replaces the old layout.
    void declare(const Store &store, const Term &decl);
    const StructDecl *find(Atom name) const;
    // 1-based field position; expansion error when unknown.
    std::size_t field_index(Atom name, Atom field) const;

private:
    std::unordered_map<std::uint32_t, StructDecl> decls_;
};

// Struct syntax: with(emp, [age:A]) => emp(_, A, _).
Term expand_with(Store &store, const StructTable &structs, const Term &with);
// age of emp => 2.
Term expand_of(const Store &store, const StructTable &structs, const Term &of);
// Old = emp(A1, A2, _), New = emp(A1, A2, NS).
Term expand_update_struct(Store &store, const StructTable &structs, const Term &name, const Term &updates,
                          const Term &old_t, const Term &new_t);

struct LoopExpansion {
    Term call;
    std::vector<Term> clauses;
    // Body variables shared with the enclosing clause but not passed in.
    std::vector<VarRef> leaked;
};

// Translates (Specs do Body) into a call of a fresh tail-recursive
// auxiliary `aux` plus its two clauses.
LoopExpansion expand_do_loop(Store &store, const Term &specs, const Term &body, Atom aux,
                             const std::vector<VarRef> &outer_vars);

// Variables of a term in depth-first left-to-right order.
std::vector<VarRef> term_vars(const Store &store, const Term &t);

// Flattens a ','/2 chain.
std::vector<Term> conj_to_vector(const Store &store, const Term &t);
Term vector_to_conj(const std::vector<Term> &goals);

} // namespace clpk
