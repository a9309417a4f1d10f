//! Satisfiability of flat datatype cubes by reduction to syntactic
//! unification.
//!
//! Selectors and testers are eliminated by guessing the root constructor of
//! every variable they are applied to, finite-sorted variables are saturated
//! with constructor guesses, and each resulting cube is decided by computing a
//! most general unifier and checking the disequalities against it. A model is
//! read off the unifier by sending its free structure variables to trees whose
//! depths are spread far enough apart that no two distinct terms collide.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::formula::{cube_vars, Context, Cube, Interpretation, Literal, SelectorMode, Term, Var};
use crate::sig::{CtorId, ElemDomain, ElemValue, SelectorId, Signature, SortId, Tree};
use crate::unify::{check_disequalities, term_depth, unify, SolvedForm, Unsat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("guess budget of {0} cubes exhausted")]
    ResourceOut(usize),
    #[error("selector literal on an unconstructed variable survived the reduction")]
    MalformedResidual,
    #[error("conflicting selector table entries")]
    ConflictingSelectorEntries,
    #[error("foreign function literal in a datatype cube")]
    ForeignLiteral,
    #[error("constructed model does not satisfy the input cube")]
    ModelCheckFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecideOptions {
    /// Maximum number of reduced cubes examined per call.
    pub max_guesses: usize,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            max_guesses: 1 << 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionResult {
    Sat(Interpretation),
    Unsat,
}

impl DecisionResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, DecisionResult::Sat(_))
    }
}

/// A root-constructor choice for each variable of a set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsConstraint {
    pub assignment: Vec<(Var, CtorId)>,
}

impl IsConstraint {
    pub fn get(&self, x: Var) -> Option<CtorId> {
        self.assignment
            .iter()
            .find(|(v, _)| *v == x)
            .map(|(_, c)| *c)
    }
}

/// `x = c(y₁ … yₙ)` for each entry of an is-constraint, with fresh `yᵢ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoEq {
    pub literals: Vec<Literal>,
}

impl RhoEq {
    fn args_of(&self, x: Var) -> Option<(CtorId, &[Var])> {
        self.literals.iter().find_map(|l| match l {
            Literal::ConsEq(y, c, args) if *y == x => Some((*c, args.as_slice())),
            _ => None,
        })
    }
}

/// Variables whose root constructor must be guessed: arguments of testers
/// and selectors, except selector arguments already built by a different
/// constructor in the cube.
pub fn compute_gv(phi: &[Literal]) -> Vec<Var> {
    let excluded: BTreeSet<Var> = phi
        .iter()
        .filter_map(|l| match l {
            Literal::SelEq(_, s, x) => phi
                .iter()
                .any(|m| matches!(m, Literal::ConsEq(y, d, _) if y == x && *d != s.ctor))
                .then_some(*x),
            _ => None,
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for l in phi {
        let x = match l {
            Literal::Tester(_, _, x) | Literal::SelEq(_, _, x) => *x,
            _ => continue,
        };
        if !excluded.contains(&x) && seen.insert(x) {
            out.push(x);
        }
    }
    out
}

/// Fresh argument variables, one tuple per `(variable, constructor)` pair.
/// Alternative guesses never coexist, so sharing names across them is safe.
#[derive(Default)]
struct FreshArgs {
    memo: HashMap<(Var, CtorId), Vec<Var>>,
}

impl FreshArgs {
    fn get(&mut self, ctx: &mut Context, sig: &Signature, x: Var, c: CtorId) -> Vec<Var> {
        self.memo
            .entry((x, c))
            .or_insert_with(|| {
                sig.ctor(c)
                    .fields
                    .iter()
                    .map(|f| ctx.fresh_var(f.sort))
                    .collect()
            })
            .clone()
    }
}

/// All total constructor assignments over `vars`, with their fresh `ρ_eq`.
/// Variables vary in the given order (the last fastest), constructors in
/// declaration order.
pub fn guess_is_constraints(ctx: &mut Context, sig: &Signature, vars: &[Var]) -> IsGuesses {
    let mut fresh = FreshArgs::default();
    guesses_with(ctx, sig, vars, &mut fresh)
}

fn guesses_with(
    ctx: &mut Context,
    sig: &Signature,
    vars: &[Var],
    fresh: &mut FreshArgs,
) -> IsGuesses {
    let options: Vec<Vec<(CtorId, Vec<Var>)>> = vars
        .iter()
        .map(|x| {
            sig.ctors_of(x.sort)
                .iter()
                .map(|c| (*c, fresh.get(ctx, sig, *x, *c)))
                .collect()
        })
        .collect();
    IsGuesses {
        vars: vars.to_vec(),
        options,
        counter: vec![0; vars.len()],
        done: false,
    }
}

pub struct IsGuesses {
    vars: Vec<Var>,
    options: Vec<Vec<(CtorId, Vec<Var>)>>,
    counter: Vec<usize>,
    done: bool,
}

impl Iterator for IsGuesses {
    type Item = (IsConstraint, RhoEq);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done || self.options.iter().any(Vec::is_empty) {
            return None;
        }
        let mut assignment = Vec::new();
        let mut literals = Vec::new();
        for ((x, opts), i) in self.vars.iter().zip(&self.options).zip(&self.counter) {
            let (c, args) = &opts[*i];
            assignment.push((*x, *c));
            literals.push(Literal::ConsEq(*x, *c, args.clone()));
        }
        self.done = true;
        for k in (0..self.counter.len()).rev() {
            self.counter[k] += 1;
            if self.counter[k] < self.options[k].len() {
                self.done = false;
                break;
            }
            self.counter[k] = 0;
        }
        Some((IsConstraint { assignment }, RhoEq { literals }))
    }
}

/// The rewrite system eliminating testers and matching selectors for
/// variables constrained by `rho`. `None` stands for ⊥.
pub fn rewrite_w(phi: &[Literal], rho: &RhoEq) -> Option<Cube> {
    rewrite_with(phi, |x| rho.args_of(x))
}

/// Same rules, driven by the cube's own constructor equations for variables
/// that were left out of the guess set.
fn normalize_residual(phi: &[Literal]) -> Option<Cube> {
    let cons: Vec<(Var, CtorId, Vec<Var>)> = phi
        .iter()
        .filter_map(|l| match l {
            Literal::ConsEq(x, c, args) => Some((*x, *c, args.clone())),
            _ => None,
        })
        .collect();
    rewrite_with(phi, |x| {
        cons.iter()
            .find(|(y, _, _)| *y == x)
            .map(|(_, c, args)| (*c, args.as_slice()))
    })
}

fn rewrite_with<'a>(
    phi: &[Literal],
    root: impl Fn(Var) -> Option<(CtorId, &'a [Var])>,
) -> Option<Cube> {
    let mut out = Vec::with_capacity(phi.len());
    for lit in phi {
        match lit {
            Literal::Tester(pol, c, x) => match root(*x) {
                Some((d, _)) if (d == *c) == *pol => {}
                Some(_) => return None,
                None => out.push(lit.clone()),
            },
            Literal::SelEq(y, s, x) => match root(*x) {
                Some((d, args)) if d == s.ctor => out.push(Literal::VarEq(*y, args[s.index])),
                _ => out.push(lit.clone()),
            },
            _ => out.push(lit.clone()),
        }
    }
    Some(out)
}

/// `x = x` for a fresh `x` of every element sort without variables in `phi`.
pub fn trivial_elem_equalities(ctx: &mut Context, sig: &Signature, phi: &[Literal]) -> Cube {
    let present: BTreeSet<SortId> = cube_vars(phi).iter().map(|v| v.sort).collect();
    sig.elem_sorts()
        .filter(|s| !present.contains(s))
        .map(|s| {
            let v = ctx.fresh_var(s);
            Literal::VarEq(v, v)
        })
        .collect()
}

/// Finite-sorted variables with no constructor equation.
fn minimal_finite(sig: &Signature, phi: &[Literal]) -> Vec<Var> {
    let constructed: BTreeSet<Var> = phi
        .iter()
        .filter_map(|l| match l {
            Literal::ConsEq(x, _, _) => Some(*x),
            _ => None,
        })
        .collect();
    cube_vars(phi)
        .into_iter()
        .filter(|v| sig.is_finite(v.sort) && !constructed.contains(v))
        .collect()
}

/// Guesses constructors for minimal finite-sorted variables until every
/// finite-sorted variable is constructed; returns all resulting cubes.
pub fn saturate_finite(
    ctx: &mut Context,
    sig: &Signature,
    phi: &[Literal],
    max_cubes: usize,
) -> Result<Vec<Cube>, ReduceError> {
    let mut fresh = FreshArgs::default();
    let mut out = Vec::new();
    let flow = saturate_dfs(
        ctx,
        sig,
        phi.to_vec(),
        &mut fresh,
        &mut |_| true,
        &mut |cube| {
            if out.len() >= max_cubes {
                return ControlFlow::Break(Err::<(), _>(ReduceError::ResourceOut(max_cubes)));
            }
            out.push(cube);
            ControlFlow::Continue(())
        },
    );
    match flow {
        ControlFlow::Break(Err(e)) => Err(e),
        _ => Ok(out),
    }
}

fn saturate_dfs<T>(
    ctx: &mut Context,
    sig: &Signature,
    cube: Cube,
    fresh: &mut FreshArgs,
    keep: &mut dyn FnMut(&Cube) -> bool,
    leaf: &mut dyn FnMut(Cube) -> ControlFlow<T>,
) -> ControlFlow<T> {
    if !keep(&cube) {
        return ControlFlow::Continue(());
    }
    let min = minimal_finite(sig, &cube);
    if min.is_empty() {
        return leaf(cube);
    }
    let guesses: Vec<RhoEq> = guesses_with(ctx, sig, &min, fresh)
        .map(|(_, r)| r)
        .collect();
    for rho in guesses {
        let mut next = cube.clone();
        next.extend(rho.literals);
        saturate_dfs(ctx, sig, next, fresh, keep, leaf)?;
    }
    ControlFlow::Continue(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeCheck {
    Sat(SolvedForm),
    Unsat(Option<Unsat>),
}

/// Decides a reduced cube: constructor literals and variable (dis)equalities,
/// plus selector literals whose argument is built by another constructor.
///
/// Such a selector application is unconstrained except that it is a
/// function: two of them on the same selector and unifier-equal arguments
/// must agree, so their results are equated and unification repeated.
pub fn check_cube_tree_sat(psi: &[Literal]) -> Result<TreeCheck, ReduceError> {
    let mut eqs = crate::unify::equations_of(psi);
    let diseqs = crate::unify::disequalities_of(psi);
    let residual: Vec<(Var, SelectorId, Var)> = psi
        .iter()
        .filter_map(|l| match l {
            Literal::SelEq(y, s, x) => Some((*y, *s, *x)),
            _ => None,
        })
        .collect();
    if psi
        .iter()
        .any(|l| matches!(l, Literal::Tester(..) | Literal::FunEq(..)))
    {
        return Err(ReduceError::MalformedResidual);
    }
    loop {
        let mu = match unify(&eqs) {
            Ok(mu) => mu,
            Err(reason) => return Ok(TreeCheck::Unsat(Some(reason))),
        };
        let mut points: BTreeMap<(SelectorId, Term), Var> = BTreeMap::new();
        let mut added = false;
        for (y, s, x) in &residual {
            let arg = mu.resolve(*x);
            match &arg {
                Term::App(crate::formula::Func::Ctor(d), _) if *d != s.ctor => {}
                _ => return Err(ReduceError::MalformedResidual),
            }
            match points.get(&(*s, arg.clone())) {
                Some(other) if mu.resolve(*other) != mu.resolve(*y) => {
                    eqs.push((Term::Var(*other), Term::Var(*y)));
                    added = true;
                }
                Some(_) => {}
                None => {
                    points.insert((*s, arg), *y);
                }
            }
        }
        if !added {
            return Ok(if check_disequalities(&mu, &diseqs) {
                TreeCheck::Sat(mu)
            } else {
                TreeCheck::Unsat(None)
            });
        }
    }
}

/// A model built from a unifier, with the data behind its depth spacing.
#[derive(Clone, Debug)]
pub struct MguModel {
    pub interpretation: Interpretation,
    /// Unbound structure variables with their trees, in assignment order.
    pub free_trees: Vec<(Var, Tree)>,
    /// Largest constructor depth among the unifier's bindings.
    pub max_binding_depth: usize,
}

/// Reads a model off `mu`.
///
/// Element variables get one value per unifier class, numbered per sort in
/// first-occurrence order. Unbound structure variables get spine trees whose
/// depths grow by more than the maximal binding depth at each step, so
/// distinct unifier terms denote distinct trees. Residual selector literals
/// are satisfied through the selector table.
pub fn build_model_from_mgu(
    psi: &[Literal],
    mu: &SolvedForm,
    sig: &Signature,
) -> Result<MguModel, ReduceError> {
    let vars = cube_vars(psi);
    let mut domain = ElemDomain::new();
    let mut elem_of: BTreeMap<Var, ElemValue> = BTreeMap::new();
    let mut next_index: BTreeMap<SortId, u32> = BTreeMap::new();
    for v in vars.iter().filter(|v| sig.is_elem(v.sort)) {
        let rep = match mu.resolve(*v) {
            Term::Var(r) => r,
            Term::App(..) => unreachable!("element variables only bind to variables"),
        };
        if let std::collections::btree_map::Entry::Vacant(slot) = elem_of.entry(rep) {
            let idx = next_index.entry(rep.sort).or_insert(0);
            let value = ElemValue {
                sort: rep.sort,
                index: *idx,
            };
            *idx += 1;
            slot.insert(value);
            domain.insert(value);
        }
    }
    for s in sig.elem_sorts() {
        if domain.is_empty(s) {
            domain.insert(ElemValue { sort: s, index: 0 });
        }
    }

    let max_binding_depth = mu.bindings().map(|(_, t)| term_depth(t)).max().unwrap_or(0);
    let mut free_trees: Vec<(Var, Tree)> = Vec::new();
    let mut prev_depth = 0;
    let mut alpha: BTreeMap<Var, Tree> = BTreeMap::new();
    for v in vars
        .iter()
        .filter(|v| !sig.is_elem(v.sort) && !mu.is_bound(**v))
    {
        let at_least = prev_depth + max_binding_depth + 1;
        let tree = sig
            .tree_of_depth_at_least(v.sort, at_least, &domain)
            .ok_or(ReduceError::MalformedResidual)?;
        prev_depth = tree.depth();
        alpha.insert(*v, tree.clone());
        free_trees.push((*v, tree));
    }

    let ground = |t: &Term| -> Tree { ground_term(t, &alpha, &elem_of) };
    let mut interp = Interpretation::new(domain);
    interp.mode = SelectorMode::Strict;
    for v in &vars {
        interp.values.insert(*v, ground(&mu.resolve(*v)));
    }
    for lit in psi {
        if let Literal::SelEq(y, s, x) = lit {
            let key = (*s, interp.values[x].clone());
            let val = interp.values[y].clone();
            if let Some(old) = interp.selector_table.insert(key, val.clone()) {
                if old != val {
                    return Err(ReduceError::ConflictingSelectorEntries);
                }
            }
        }
    }
    Ok(MguModel {
        interpretation: interp,
        free_trees,
        max_binding_depth,
    })
}

fn ground_term(t: &Term, alpha: &BTreeMap<Var, Tree>, elems: &BTreeMap<Var, ElemValue>) -> Tree {
    match t {
        Term::Var(v) => match elems.get(v) {
            Some(e) => Tree::Elem(*e),
            None => alpha[v].clone(),
        },
        Term::App(crate::formula::Func::Ctor(c), args) => Tree::Node(
            *c,
            args.iter().map(|a| ground_term(a, alpha, elems)).collect(),
        ),
        Term::App(..) => unreachable!("unifier terms are built from constructors"),
    }
}

/// The reduced cubes for one is-constraint guess: rewrite, normalize the
/// leftovers, add `ρ_eq` and the trivial element equalities.
fn reduce_guess(phi: &[Literal], rho: &RhoEq, te: &[Literal]) -> Option<Cube> {
    let mut cube = rewrite_w(phi, rho)?;
    cube = normalize_residual(&cube)?;
    cube.extend(rho.literals.iter().cloned());
    cube.extend(te.iter().cloned());
    Some(cube)
}

fn reject_foreign(phi: &[Literal]) -> Result<(), ReduceError> {
    if phi.iter().any(|l| matches!(l, Literal::FunEq(..))) {
        return Err(ReduceError::ForeignLiteral);
    }
    Ok(())
}

/// The full reduction of `phi` as a disjunction of cubes free of testers and
/// of selectors on matching constructors.
pub fn reduce_cube(
    ctx: &mut Context,
    sig: &Signature,
    phi: &[Literal],
    opts: &DecideOptions,
) -> Result<Vec<Cube>, ReduceError> {
    reject_foreign(phi)?;
    let gv = compute_gv(phi);
    let te = trivial_elem_equalities(ctx, sig, phi);
    let mut fresh = FreshArgs::default();
    let guesses: Vec<RhoEq> = guesses_with(ctx, sig, &gv, &mut fresh)
        .map(|(_, r)| r)
        .collect();
    let mut out = Vec::new();
    for rho in guesses {
        let Some(cube) = reduce_guess(phi, &rho, &te) else {
            continue;
        };
        let remaining = opts.max_guesses.saturating_sub(out.len());
        out.extend(saturate_finite(ctx, sig, &cube, remaining)?);
    }
    Ok(out)
}

/// Decides a flat cube (normally extended with an arrangement of its
/// variables). The first satisfiable reduced cube, in guess order, yields
/// the model.
pub fn decide(
    ctx: &mut Context,
    sig: &Signature,
    phi: &[Literal],
    opts: &DecideOptions,
) -> Result<DecisionResult, ReduceError> {
    Ok(match decide_with_witness(ctx, sig, phi, opts)? {
        Some(found) => DecisionResult::Sat(found.interpretation),
        None => DecisionResult::Unsat,
    })
}

/// Like [`decide`], returning the unifier-based model with its depth data.
pub fn decide_with_witness(
    ctx: &mut Context,
    sig: &Signature,
    phi: &[Literal],
    opts: &DecideOptions,
) -> Result<Option<MguModel>, ReduceError> {
    reject_foreign(phi)?;
    let gv = compute_gv(phi);
    let te = trivial_elem_equalities(ctx, sig, phi);
    let mut fresh = FreshArgs::default();
    let guesses: Vec<RhoEq> = guesses_with(ctx, sig, &gv, &mut fresh)
        .map(|(_, r)| r)
        .collect();
    let mut examined = 0usize;
    for rho in guesses {
        let Some(cube) = reduce_guess(phi, &rho, &te) else {
            continue;
        };
        let mut keep = |c: &Cube| !matches!(check_cube_tree_sat(c), Ok(TreeCheck::Unsat(_)));
        let flow = saturate_dfs(ctx, sig, cube, &mut fresh, &mut keep, &mut |leaf| {
            examined += 1;
            if examined > opts.max_guesses {
                return ControlFlow::Break(Err(ReduceError::ResourceOut(opts.max_guesses)));
            }
            match check_cube_tree_sat(&leaf) {
                Ok(TreeCheck::Sat(mu)) => ControlFlow::Break(build_model_from_mgu(&leaf, &mu, sig)),
                Ok(TreeCheck::Unsat(_)) => ControlFlow::Continue(()),
                Err(e) => ControlFlow::Break(Err(e)),
            }
        });
        if let ControlFlow::Break(result) = flow {
            let model = result?;
            let ok = model
                .interpretation
                .eval_cube(sig, ctx, phi)
                .unwrap_or(false);
            if !ok {
                return Err(ReduceError::ModelCheckFailed);
            }
            return Ok(Some(model));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    struct Env {
        sig: Signature,
        ctx: Context,
        list: SortId,
        elem: SortId,
        nil: CtorId,
        cons: CtorId,
        car: SelectorId,
        cdr: SelectorId,
    }

    fn env() -> Env {
        let sig = fixtures::list_signature();
        let cons = sig.lookup_ctor("cons").unwrap();
        Env {
            list: sig.lookup_sort("list").unwrap(),
            elem: sig.lookup_sort("elem").unwrap(),
            nil: sig.lookup_ctor("nil").unwrap(),
            cons,
            car: SelectorId {
                ctor: cons,
                index: 0,
            },
            cdr: SelectorId {
                ctor: cons,
                index: 1,
            },
            ctx: Context::new(),
            sig,
        }
    }

    #[test]
    fn gv_examples() {
        let mut e = env();
        let x = e.ctx.declare_var("x", e.list).unwrap();
        let y = e.ctx.declare_var("y", e.list).unwrap();
        let y2 = e.ctx.declare_var("y'", e.list).unwrap();
        let z = e.ctx.declare_var("z", e.elem).unwrap();
        let phi = [
            Literal::SelEq(y, e.cdr, x),
            Literal::SelEq(y2, e.cdr, x),
            Literal::Tester(true, e.cons, y),
        ];
        assert_eq!(compute_gv(&phi), vec![x, y]);
        let phi = [
            Literal::SelEq(z, e.car, x),
            Literal::ConsEq(x, e.nil, vec![]),
        ];
        assert!(compute_gv(&phi).is_empty());
        assert!(compute_gv(&[Literal::VarDiseq(x, y)]).is_empty());
    }

    #[test]
    fn guess_counts() {
        let mut e = env();
        let x = e.ctx.declare_var("x", e.list).unwrap();
        let got: Vec<IsConstraint> = guess_is_constraints(&mut e.ctx, &e.sig, &[x])
            .map(|g| g.0)
            .collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].get(x), Some(e.nil));
        assert_eq!(got[1].get(x), Some(e.cons));

        let pair = fixtures::pair_signature();
        let mut ctx = Context::new();
        let p = ctx
            .declare_var("p", pair.lookup_sort("pair").unwrap())
            .unwrap();
        assert_eq!(guess_is_constraints(&mut ctx, &pair, &[p]).count(), 1);
        let empty: Vec<_> = guess_is_constraints(&mut ctx, &pair, &[]).collect();
        assert_eq!(empty.len(), 1);
        assert!(empty[0].1.literals.is_empty());

        let y = e.ctx.declare_var("y", e.list).unwrap();
        assert_eq!(guess_is_constraints(&mut e.ctx, &e.sig, &[x, y]).count(), 4);
    }

    #[test]
    fn rewrite_rules() {
        let mut e = env();
        let x = e.ctx.declare_var("x", e.list).unwrap();
        let y = e.ctx.declare_var("y", e.list).unwrap();
        let z = e.ctx.declare_var("z", e.list).unwrap();
        let u1 = e.ctx.declare_var("u1", e.elem).unwrap();
        let u2 = e.ctx.declare_var("u2", e.list).unwrap();
        let rho = RhoEq {
            literals: vec![Literal::ConsEq(x, e.cons, vec![u1, u2])],
        };
        assert_eq!(
            rewrite_w(&[Literal::SelEq(y, e.cdr, x)], &rho),
            Some(vec![Literal::VarEq(y, u2)])
        );
        assert_eq!(rewrite_w(&[Literal::Tester(false, e.cons, x)], &rho), None);
        assert_eq!(rewrite_w(&[Literal::Tester(true, e.nil, x)], &rho), None);
        assert_eq!(
            rewrite_w(
                &[Literal::Tester(true, e.cons, x), Literal::VarDiseq(x, z)],
                &rho
            ),
            Some(vec![Literal::VarDiseq(x, z)])
        );
        assert_eq!(
            rewrite_w(&[Literal::Tester(false, e.nil, x)], &rho),
            Some(vec![])
        );
    }

    #[test]
    fn saturation_only_touches_finite_sorts() {
        let mut e = env();
        let x = e.ctx.declare_var("x", e.list).unwrap();
        let phi = vec![Literal::VarEq(x, x)];
        assert_eq!(
            saturate_finite(&mut e.ctx, &e.sig, &phi, 10).unwrap(),
            vec![phi]
        );

        let lp = fixtures::lp_signature();
        let mut ctx = Context::new();
        let pair = lp.lookup_sort("pair").unwrap();
        let mk = lp.lookup_ctor("pair").unwrap();
        let p = ctx.declare_var("p", pair).unwrap();
        let phi = vec![Literal::VarEq(p, p)];
        let out = saturate_finite(&mut ctx, &lp, &phi, 10).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].len(), 2);
        assert!(
            matches!(&out[0][1], Literal::ConsEq(v, c, args) if *v == p && *c == mk && args.len() == 2)
        );

        let a = ctx
            .declare_var("a", lp.lookup_sort("elem").unwrap())
            .unwrap();
        let built = vec![Literal::ConsEq(p, mk, vec![a, a])];
        assert_eq!(
            saturate_finite(&mut ctx, &lp, &built, 10).unwrap(),
            vec![built]
        );
    }

    #[test]
    fn tree_checks() {
        let mut e = env();
        let x1 = e.ctx.declare_var("x1", e.list).unwrap();
        let x2 = e.ctx.declare_var("x2", e.list).unwrap();
        let x3 = e.ctx.declare_var("x3", e.list).unwrap();
        let x4 = e.ctx.declare_var("x4", e.list).unwrap();
        let e1 = e.ctx.declare_var("e1", e.elem).unwrap();
        let e2 = e.ctx.declare_var("e2", e.elem).unwrap();
        let gamma = vec![
            Literal::ConsEq(x1, e.cons, vec![e1, x2]),
            Literal::ConsEq(x3, e.cons, vec![e2, x4]),
            Literal::VarDiseq(x2, x4),
        ];
        let TreeCheck::Sat(mu) = check_cube_tree_sat(&gamma).unwrap() else {
            panic!("expected sat");
        };
        let model = build_model_from_mgu(&gamma, &mu, &e.sig).unwrap();
        assert!(model
            .interpretation
            .eval_cube(&e.sig, &e.ctx, &gamma)
            .unwrap());
        assert_ne!(
            model.interpretation.values[&x2],
            model.interpretation.values[&x4]
        );

        let clash = vec![
            Literal::ConsEq(x1, e.nil, vec![]),
            Literal::ConsEq(x1, e.cons, vec![e1, x2]),
        ];
        assert!(matches!(
            check_cube_tree_sat(&clash),
            Ok(TreeCheck::Unsat(Some(Unsat::Clash(..))))
        ));
        let cyc = vec![
            Literal::ConsEq(x1, e.cons, vec![e1, x2]),
            Literal::ConsEq(x2, e.cons, vec![e2, x1]),
        ];
        assert!(matches!(
            check_cube_tree_sat(&cyc),
            Ok(TreeCheck::Unsat(Some(Unsat::Occurs(..))))
        ));

        let loose = vec![Literal::SelEq(e1, e.car, x1)];
        assert_eq!(
            check_cube_tree_sat(&loose),
            Err(ReduceError::MalformedResidual)
        );
    }

    #[test]
    fn depth_gaps_separate_free_variables() {
        let mut e = env();
        let x = e.ctx.declare_var("x", e.list).unwrap();
        let y = e.ctx.declare_var("y", e.list).unwrap();
        let z = e.ctx.declare_var("z", e.list).unwrap();
        let a = e.ctx.declare_var("a", e.elem).unwrap();
        let psi = vec![
            Literal::VarDiseq(x, y),
            Literal::ConsEq(z, e.cons, vec![a, x]),
        ];
        let TreeCheck::Sat(mu) = check_cube_tree_sat(&psi).unwrap() else {
            panic!("expected sat");
        };
        let m = build_model_from_mgu(&psi, &mu, &e.sig).unwrap();
        assert_eq!(m.free_trees.len(), 2);
        let d: Vec<usize> = m.free_trees.iter().map(|(_, t)| t.depth()).collect();
        assert!(d[0] > m.max_binding_depth);
        assert!(d[1] - d[0] > m.max_binding_depth);
        assert!(m.interpretation.eval_cube(&e.sig, &e.ctx, &psi).unwrap());
    }

    #[test]
    fn decide_examples() {
        let mut e = env();
        let opts = DecideOptions::default();
        let x = e.ctx.declare_var("x", e.list).unwrap();
        let y = e.ctx.declare_var("y", e.list).unwrap();
        let y2 = e.ctx.declare_var("y'", e.list).unwrap();
        let a = e.ctx.declare_var("a", e.elem).unwrap();

        let unsat = [
            Literal::ConsEq(x, e.nil, vec![]),
            Literal::Tester(true, e.cons, x),
        ];
        assert_eq!(
            decide(&mut e.ctx, &e.sig, &unsat, &opts).unwrap(),
            DecisionResult::Unsat
        );

        let wrong = [
            Literal::SelEq(a, e.car, y),
            Literal::ConsEq(y, e.nil, vec![]),
        ];
        assert!(decide(&mut e.ctx, &e.sig, &wrong, &opts).unwrap().is_sat());

        let phi = [
            Literal::SelEq(y, e.cdr, x),
            Literal::SelEq(y2, e.cdr, x),
            Literal::Tester(true, e.cons, y),
            Literal::VarDiseq(y, y2),
        ];
        assert_eq!(
            decide(&mut e.ctx, &e.sig, &phi, &opts).unwrap(),
            DecisionResult::Unsat
        );
        let phi = [
            Literal::SelEq(y, e.cdr, x),
            Literal::SelEq(y2, e.cdr, x),
            Literal::Tester(true, e.cons, y),
            Literal::VarEq(y, y2),
            Literal::VarDiseq(x, y),
        ];
        let DecisionResult::Sat(m) = decide(&mut e.ctx, &e.sig, &phi, &opts).unwrap() else {
            panic!("expected sat");
        };
        assert!(m.eval_cube(&e.sig, &e.ctx, &phi).unwrap());
    }

    #[test]
    fn residual_selectors_are_functional() {
        let mut e = env();
        let opts = DecideOptions::default();
        let x1 = e.ctx.declare_var("x1", e.list).unwrap();
        let x2 = e.ctx.declare_var("x2", e.list).unwrap();
        let y1 = e.ctx.declare_var("y1", e.elem).unwrap();
        let y2 = e.ctx.declare_var("y2", e.elem).unwrap();
        // car(nil) has a single value.
        let phi = [
            Literal::SelEq(y1, e.car, x1),
            Literal::SelEq(y2, e.car, x2),
            Literal::ConsEq(x1, e.nil, vec![]),
            Literal::ConsEq(x2, e.nil, vec![]),
            Literal::VarDiseq(y1, y2),
        ];
        assert_eq!(
            decide(&mut e.ctx, &e.sig, &phi, &opts).unwrap(),
            DecisionResult::Unsat
        );
        let phi = [
            Literal::SelEq(y1, e.car, x1),
            Literal::SelEq(y2, e.car, x2),
            Literal::VarDiseq(y1, y2),
        ];
        assert!(decide(&mut e.ctx, &e.sig, &phi, &opts).unwrap().is_sat());
    }

    #[test]
    fn excluded_variables_keep_their_testers_honest() {
        let mut e = env();
        let opts = DecideOptions::default();
        let x = e.ctx.declare_var("x", e.list).unwrap();
        let a = e.ctx.declare_var("a", e.elem).unwrap();
        let phi = [
            Literal::SelEq(a, e.car, x),
            Literal::ConsEq(x, e.nil, vec![]),
            Literal::Tester(true, e.cons, x),
        ];
        assert_eq!(
            decide(&mut e.ctx, &e.sig, &phi, &opts).unwrap(),
            DecisionResult::Unsat
        );
    }

    #[test]
    fn budget_is_enforced() {
        let lp = fixtures::lp_signature();
        let mut ctx = Context::new();
        let pair = lp.lookup_sort("pair").unwrap();
        let ps: Vec<Var> = (0..4)
            .map(|i| ctx.declare_var(&format!("p{i}"), pair).unwrap())
            .collect();
        let phi: Vec<Literal> = ps
            .windows(2)
            .map(|w| Literal::VarDiseq(w[0], w[1]))
            .collect();
        assert!(
            decide(&mut ctx, &lp, &phi, &DecideOptions { max_guesses: 1 })
                .unwrap()
                .is_sat()
        );
        assert_eq!(
            reduce_cube(&mut ctx, &lp, &phi, &DecideOptions { max_guesses: 0 }),
            Err(ReduceError::ResourceOut(0))
        );
    }
}
