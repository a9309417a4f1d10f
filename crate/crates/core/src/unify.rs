//! Syntactic unification with an eager occurs check.

use std::collections::BTreeMap;

use crate::formula::{Func, Literal, Term, Var};

/// Why a set of equations has no unifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Unsat {
    /// Two different head symbols had to be equal.
    Clash(Func, Func),
    /// A variable had to equal a proper term containing it.
    Occurs(Var, Term),
}

pub type Substitution = BTreeMap<Var, Term>;

/// Bindings `x_k ↦ t_k`, sorted by variable, where no bound variable occurs
/// in any right-hand side.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolvedForm {
    bindings: Substitution,
}

impl SolvedForm {
    pub fn bindings(&self) -> impl Iterator<Item = (Var, &Term)> {
        self.bindings.iter().map(|(v, t)| (*v, t))
    }

    pub fn substitution(&self) -> &Substitution {
        &self.bindings
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.bindings.get(&v)
    }

    pub fn is_bound(&self, v: Var) -> bool {
        self.bindings.contains_key(&v)
    }

    pub fn apply(&self, t: &Term) -> Term {
        apply_subst(&self.bindings, t)
    }

    /// `μ(v)` as a term.
    pub fn resolve(&self, v: Var) -> Term {
        self.bindings.get(&v).cloned().unwrap_or(Term::Var(v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

/// Replaces every bound variable of `t` by its image.
pub fn apply_subst(mu: &Substitution, t: &Term) -> Term {
    match t {
        Term::Var(v) => mu.get(v).cloned().unwrap_or(Term::Var(*v)),
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| apply_subst(mu, a)).collect()),
    }
}

pub fn occurs(v: Var, t: &Term) -> bool {
    match t {
        Term::Var(w) => *w == v,
        Term::App(_, args) => args.iter().any(|a| occurs(v, a)),
    }
}

/// Most general unifier of `eqs`.
///
/// Variable-variable equations bind the variable with the larger id to the
/// one with the smaller id. Bindings are kept fully applied, so the result is
/// idempotent.
pub fn unify(eqs: &[(Term, Term)]) -> Result<SolvedForm, Unsat> {
    let mut mu = Substitution::new();
    let mut work: Vec<(Term, Term)> = eqs.iter().rev().cloned().collect();
    while let Some((s, t)) = work.pop() {
        let s = apply_subst(&mu, &s);
        let t = apply_subst(&mu, &t);
        match (s, t) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), Term::Var(y)) => {
                let (from, to) = if x.id > y.id { (x, y) } else { (y, x) };
                bind(&mut mu, from, Term::Var(to));
            }
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if occurs(x, &t) {
                    return Err(Unsat::Occurs(x, t));
                }
                bind(&mut mu, x, t);
            }
            (Term::App(f, fa), Term::App(g, ga)) => {
                if f != g || fa.len() != ga.len() {
                    return Err(Unsat::Clash(f, g));
                }
                work.extend(fa.into_iter().zip(ga).rev());
            }
        }
    }
    Ok(SolvedForm { bindings: mu })
}

fn bind(mu: &mut Substitution, x: Var, t: Term) {
    let single: Substitution = [(x, t.clone())].into_iter().collect();
    for rhs in mu.values_mut() {
        if occurs(x, rhs) {
            *rhs = apply_subst(&single, rhs);
        }
    }
    mu.insert(x, t);
}

/// True iff `μ(v)` and `μ(w)` differ syntactically for every pair.
pub fn check_disequalities(mu: &SolvedForm, diseqs: &[(Var, Var)]) -> bool {
    diseqs.iter().all(|(v, w)| mu.resolve(*v) != mu.resolve(*w))
}

/// Equations contributed by the `x = y` and `x = c(ȳ)` literals of a cube.
pub fn equations_of(cube: &[Literal]) -> Vec<(Term, Term)> {
    cube.iter()
        .filter_map(|l| match l {
            Literal::VarEq(x, y) => Some((Term::Var(*x), Term::Var(*y))),
            Literal::ConsEq(x, c, args) => Some((Term::Var(*x), Term::ctor(*c, args))),
            _ => None,
        })
        .collect()
}

pub fn disequalities_of(cube: &[Literal]) -> Vec<(Var, Var)> {
    cube.iter()
        .filter_map(|l| match l {
            Literal::VarDiseq(x, y) => Some((*x, *y)),
            _ => None,
        })
        .collect()
}

/// Maximal constructor nesting of a term; variables have depth 0.
pub fn term_depth(t: &Term) -> usize {
    match t {
        Term::Var(_) => 0,
        Term::App(_, args) => 1 + args.iter().map(term_depth).max().unwrap_or(0),
    }
}
