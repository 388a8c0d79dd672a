#include "clpk/engine.hpp"

namespace clpk {

namespace {

// Library predicates written in the language itself. Loaded into sys.
const char *kPrelude = R"PL(
member(X, [X|_]).
member(X, [_|T]) :- member(X, T).

memberchk(X, L) :- member(X, L), !.

append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).

reverse(L, R) :- '$reverse'(L, [], R).
'$reverse'([], A, A).
'$reverse'([H|T], A, R) :- '$reverse'(T, [H|A], R).

select(X, [X|T], T).
select(X, [H|T], [H|R]) :- select(X, T, R).

nth1(I, L, X) :- integer(I), !, I >= 1, '$nth'(I, L, X).
nth1(I, L, X) :- '$nth_enum'(L, X, 1, I).
'$nth'(1, [X|_], X) :- !.
'$nth'(I, [_|T], X) :- I1 is I-1, '$nth'(I1, T, X).
'$nth_enum'([X|_], X, I, I).
'$nth_enum'([_|T], X, I0, I) :- I1 is I0+1, '$nth_enum'(T, X, I1, I).

last([X], X) :- !.
last([_|T], X) :- last(T, X).

length(L, N) :- integer(N), !, N >= 0, '$length_make'(N, L0), L = L0.
length(L, N) :- '$skel_length'(L, 0, N).
'$skel_length'([], N, N).
'$skel_length'([_|T], N0, N) :- N1 is N0+1, '$skel_length'(T, N1, N).

between(L, H, L) :- L =< H.
between(L, H, X) :- L < H, L1 is L+1, between(L1, H, X).

sum_list(L, S) :- '$sum'(L, 0, S).
'$sum'([], S, S).
'$sum'([X|T], S0, S) :- S1 is S0+X, '$sum'(T, S1, S).

maplist(_, []).
maplist(G, [A|As]) :- call(G, A), maplist(G, As).
maplist(_, [], []).
maplist(G, [A|As], [B|Bs]) :- call(G, A, B), maplist(G, As, Bs).
maplist(_, [], [], []).
maplist(G, [A|As], [B|Bs], [C|Cs]) :- call(G, A, B, C), maplist(G, As, Bs, Cs).

count_solutions(G, N) :- findall(x, G, L), length(L, N).

dif(X, Y) :-
    ( X == Y -> fail
    ; \+ X = Y -> true
    ; term_variables(X-Y, Vs), suspend(dif(X, Y), 3, Vs->bound)
    ).

indomain(X) :- integer(X), !.
indomain(X) :- get_domain_as_list(X, L), member(X, L).

labeling(Vs) :- labeling(Vs, input_order).
labeling(Vs, Opts) :-
    '$collection_list'(Vs, L),
    ( Opts = [_|_] -> ( memberchk(first_fail, Opts) -> S = first_fail ; S = input_order ) ; S = Opts ),
    '$label'(S, L).
'$label'(input_order, L) :- !, '$label_io'(L).
'$label'(first_fail, L) :- !, '$label_ff'(L).
'$label'(S, _) :- throw(error(domain_error(labeling_option, S), labeling/2)).
'$label_io'([]).
'$label_io'([X|Xs]) :- indomain(X), '$label_io'(Xs).
'$label_ff'(L) :- ( '$select_ff'(L, X, Rest) -> indomain(X), '$label_ff'(Rest) ; true ).
)PL";

} // namespace

void Engine::load_prelude() { load_string(kPrelude, "prelude", sys_); }

} // namespace clpk
