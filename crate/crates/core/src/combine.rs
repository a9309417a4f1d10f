//! Combination of the datatype theory with a second theory that shares its
//! element sorts.
//!
//! The second theory's function symbols are the foreign functions of the
//! [`Context`]. A mixed formula is purified into a datatype part and a
//! foreign part; the datatype side is witnessed, and the two sides are
//! checked against every arrangement of the witness's shared variables.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{
    cube_vars, enumerate_arrangements, to_flat_dnf, Context, Cube, Formula, FormulaError, Func,
    Literal, Term, Var,
};
use crate::reduce::{decide, DecideOptions, ReduceError};
use crate::sig::{Signature, SortId};
use crate::witness::{wtn_combined, Conjunct, WitnessOutput};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CombineError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("conjunct mixes atoms of both theories under a boolean connective")]
    MixedConjunct,
    #[error("arrangement budget of {0} exhausted")]
    ResourceOut(usize),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

/// A decision procedure for conjunctions of flat literals over element sorts
/// and foreign functions.
pub trait TheoryBackend {
    fn sorts(&self) -> Vec<SortId>;
    fn decide(&self, ctx: &Context, cube: &[Literal]) -> bool;
}

/// Equality with uninterpreted foreign functions over sorts whose
/// cardinality is bounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CardinalityBackend {
    pub bounds: BTreeMap<SortId, usize>,
}

pub fn cardinality_backend(bounds: BTreeMap<SortId, usize>) -> CardinalityBackend {
    CardinalityBackend { bounds }
}

impl TheoryBackend for CardinalityBackend {
    fn sorts(&self) -> Vec<SortId> {
        self.bounds.keys().copied().collect()
    }

    fn decide(&self, _ctx: &Context, cube: &[Literal]) -> bool {
        let vars = cube_vars(cube);
        let mut values = BTreeMap::new();
        let mut used: BTreeMap<SortId, usize> = BTreeMap::new();
        assign(self, cube, &vars, 0, &mut values, &mut used)
    }
}

/// Backtracking over block numbers, opening at most one new block per step.
fn assign(
    backend: &CardinalityBackend,
    cube: &[Literal],
    vars: &[Var],
    k: usize,
    values: &mut BTreeMap<Var, usize>,
    used: &mut BTreeMap<SortId, usize>,
) -> bool {
    if !consistent(cube, values) {
        return false;
    }
    let Some(v) = vars.get(k) else {
        return true;
    };
    let opened = used.get(&v.sort).copied().unwrap_or(0);
    let bound = backend.bounds.get(&v.sort).copied().unwrap_or(vars.len());
    for b in 0..=opened.min(bound.saturating_sub(1)) {
        values.insert(*v, b);
        used.insert(v.sort, opened.max(b + 1));
        if assign(backend, cube, vars, k + 1, values, used) {
            return true;
        }
    }
    values.remove(v);
    used.insert(v.sort, opened);
    false
}

fn consistent(cube: &[Literal], values: &BTreeMap<Var, usize>) -> bool {
    let val = |v: &Var| values.get(v).copied();
    for (i, l) in cube.iter().enumerate() {
        match l {
            Literal::VarEq(x, y) => {
                if let (Some(a), Some(b)) = (val(x), val(y)) {
                    if a != b {
                        return false;
                    }
                }
            }
            Literal::VarDiseq(x, y) => {
                if let (Some(a), Some(b)) = (val(x), val(y)) {
                    if a == b {
                        return false;
                    }
                }
            }
            Literal::FunEq(y, f, args) => {
                for m in &cube[i + 1..] {
                    let Literal::FunEq(z, g, brgs) = m else {
                        continue;
                    };
                    if f != g {
                        continue;
                    }
                    let same_args = args
                        .iter()
                        .zip(brgs)
                        .all(|(a, b)| val(a).is_some() && val(a) == val(b));
                    if same_args {
                        if let (Some(a), Some(b)) = (val(y), val(z)) {
                            if a != b {
                                return false;
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
    true
}

/// The theory of one element sort whose models have at least two elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct T0Backend {
    pub sort: SortId,
}

impl TheoryBackend for T0Backend {
    fn sorts(&self) -> Vec<SortId> {
        vec![self.sort]
    }

    fn decide(&self, ctx: &Context, cube: &[Literal]) -> bool {
        // Any equality-consistent cube extends to a model with two elements.
        cardinality_backend(BTreeMap::new()).decide(ctx, cube)
    }
}

/// `φ ∧ w₁ = w₁ ∧ w₂ = w₂` for fresh `w₁, w₂`: a witness for T₀, but not
/// a strong one.
pub fn t0_weak_witness(ctx: &mut Context, sort: SortId, phi: &[Literal]) -> Cube {
    let (w1, w2) = (ctx.fresh_var(sort), ctx.fresh_var(sort));
    let mut out = phi.to_vec();
    out.extend([Literal::VarEq(w1, w1), Literal::VarEq(w2, w2)]);
    out
}

/// `φ ∧ w₁ ≠ w₂` for fresh `w₁, w₂`.
pub fn t0_strong_witness(ctx: &mut Context, sort: SortId, phi: &[Literal]) -> Cube {
    let (w1, w2) = (ctx.fresh_var(sort), ctx.fresh_var(sort));
    let mut out = phi.to_vec();
    out.push(Literal::VarDiseq(w1, w2));
    out
}

/// The additive witness: the strong one when `φ` contains a disequality,
/// `φ` itself otherwise.
pub fn t0_additive_witness(ctx: &mut Context, sort: SortId, phi: &[Literal]) -> Cube {
    if phi.iter().any(|l| matches!(l, Literal::VarDiseq(..))) {
        t0_strong_witness(ctx, sort, phi)
    } else {
        phi.to_vec()
    }
}

/// A T₀-model of `cube` whose domain is exactly the values of the cube's
/// variables, as a block number per variable.
pub fn t0_witnessed_model(cube: &[Literal]) -> Option<BTreeMap<Var, usize>> {
    let vars = cube_vars(cube);
    let mut values = BTreeMap::new();
    let mut used = BTreeMap::new();
    fn search(
        cube: &[Literal],
        vars: &[Var],
        k: usize,
        values: &mut BTreeMap<Var, usize>,
        used: &mut BTreeMap<SortId, usize>,
    ) -> bool {
        if !consistent(cube, values) {
            return false;
        }
        let Some(v) = vars.get(k) else {
            return used.values().all(|n| *n >= 2);
        };
        let opened = used.get(&v.sort).copied().unwrap_or(0);
        for blk in 0..=opened {
            values.insert(*v, blk);
            used.insert(v.sort, opened.max(blk + 1));
            if search(cube, vars, k + 1, values, used) {
                return true;
            }
        }
        values.remove(v);
        used.insert(v.sort, opened);
        false
    }
    search(cube, &vars, 0, &mut values, &mut used).then_some(values)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedProblem {
    pub datatype_part: Formula,
    pub other_part: Formula,
    pub shared_sorts: Vec<SortId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Datatype,
    Other,
}

fn side_of(f: Func) -> Side {
    match f {
        Func::Foreign(_) => Side::Other,
        _ => Side::Datatype,
    }
}

struct Purifier<'a> {
    sig: &'a Signature,
    defs: Vec<(Side, Formula)>,
}

impl Purifier<'_> {
    /// `t` placed at a position owned by `side`; alien subterms are named.
    fn term(&mut self, ctx: &mut Context, t: &Term, side: Side) -> Term {
        let Term::App(f, args) = t else {
            return t.clone();
        };
        let own = side_of(*f);
        let args = args.iter().map(|a| self.term(ctx, a, own)).collect();
        let pure = Term::App(*f, args);
        if own == side {
            return pure;
        }
        let u = ctx.fresh_var(f.result_sort(self.sig, ctx));
        self.defs.push((own, Formula::eq(Term::Var(u), pure)));
        Term::Var(u)
    }

    fn formula(&mut self, ctx: &mut Context, f: &Formula, sides: &mut BTreeSet<Side>) -> Formula {
        match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Eq(a, b) => {
                let side = match (a, b) {
                    (Term::App(f, _), _) if side_of(*f) == Side::Datatype => Side::Datatype,
                    (_, Term::App(f, _)) if side_of(*f) == Side::Datatype => Side::Datatype,
                    (Term::App(..), _) | (_, Term::App(..)) => Side::Other,
                    _ => Side::Datatype,
                };
                sides.insert(side);
                Formula::eq(self.term(ctx, a, side), self.term(ctx, b, side))
            }
            Formula::Is(c, t) => {
                sides.insert(Side::Datatype);
                Formula::Is(*c, self.term(ctx, t, Side::Datatype))
            }
            Formula::Not(g) => Formula::not(self.formula(ctx, g, sides)),
            Formula::And(fs) => {
                Formula::And(fs.iter().map(|g| self.formula(ctx, g, sides)).collect())
            }
            Formula::Or(fs) => {
                Formula::Or(fs.iter().map(|g| self.formula(ctx, g, sides)).collect())
            }
        }
    }
}

/// Splits a formula over the datatype and foreign symbols into two pure
/// parts. Alien subterms are replaced by fresh variables whose defining
/// equations join the part of their head symbol. Variable equalities go to
/// the datatype part.
pub fn purify(
    ctx: &mut Context,
    sig: &Signature,
    phi: &Formula,
) -> Result<MixedProblem, CombineError> {
    phi.check(sig, ctx)?;
    let conjuncts = match phi {
        Formula::And(fs) => fs.clone(),
        other => vec![other.clone()],
    };
    let mut p = Purifier {
        sig,
        defs: Vec::new(),
    };
    let mut dt = Vec::new();
    let mut other = Vec::new();
    for c in &conjuncts {
        let mut sides = BTreeSet::new();
        let pure = p.formula(ctx, c, &mut sides);
        match (
            sides.contains(&Side::Datatype),
            sides.contains(&Side::Other),
        ) {
            (true, true) => return Err(CombineError::MixedConjunct),
            (false, true) => other.push(pure),
            _ => dt.push(pure),
        }
    }
    for (side, def) in p.defs {
        match side {
            Side::Datatype => dt.push(def),
            Side::Other => other.push(def),
        }
    }
    Ok(MixedProblem {
        datatype_part: Formula::And(dt),
        other_part: Formula::And(other),
        shared_sorts: sig.elem_sorts().collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CombineOptions {
    pub max_arrangements: usize,
    pub decide: DecideOptions,
}

impl Default for CombineOptions {
    fn default() -> Self {
        CombineOptions {
            max_arrangements: 1_000_000,
            decide: DecideOptions::default(),
        }
    }
}

/// The cubes of a witness output, one per choice of disjunct.
pub fn witness_cubes(out: &WitnessOutput) -> Vec<Cube> {
    let mut cubes: Vec<Cube> = vec![Vec::new()];
    for c in out.conjuncts() {
        let mut next = Vec::new();
        for cube in &cubes {
            for l in c.disjuncts() {
                let mut ext = cube.clone();
                ext.push(l.clone());
                next.push(ext);
            }
        }
        cubes = next;
        if matches!(c, Conjunct::Disj(ref ls) if ls.is_empty()) {
            break;
        }
    }
    cubes
}

/// Satisfiability of the conjunction of both parts in the combined theory.
pub fn combine_check(
    ctx: &mut Context,
    sig: &Signature,
    p: &MixedProblem,
    backend: &dyn TheoryBackend,
    opts: &CombineOptions,
) -> Result<bool, CombineError> {
    let shared: BTreeSet<SortId> = p.shared_sorts.iter().copied().collect();
    let other_cubes: Vec<Cube> = to_flat_dnf(ctx, sig, &p.other_part)?.collect();
    let mut budget = opts.max_arrangements;
    let dt_cubes: Vec<Cube> = to_flat_dnf(ctx, sig, &p.datatype_part)?.collect();
    for dt in dt_cubes {
        let w = wtn_combined(ctx, sig, &dt);
        for e in witness_cubes(&w) {
            let v: Vec<Var> = cube_vars(&e)
                .into_iter()
                .filter(|x| shared.contains(&x.sort))
                .collect();
            for o in &other_cubes {
                for delta in enumerate_arrangements(&v) {
                    if budget == 0 {
                        return Err(CombineError::ResourceOut(opts.max_arrangements));
                    }
                    budget -= 1;
                    let delta = delta.literals();
                    let mut theirs = o.clone();
                    theirs.extend(delta.iter().cloned());
                    if !backend.decide(ctx, &theirs) {
                        continue;
                    }
                    let mut ours = e.clone();
                    ours.extend(delta);
                    if decide(ctx, sig, &ours, &opts.decide)?.is_sat() {
                        return Ok(true);
                    }
                }
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sig::SelectorId;

    fn card(sig: &Signature, n: usize) -> CardinalityBackend {
        cardinality_backend(sig.elem_sorts().map(|s| (s, n)).collect())
    }

    #[test]
    fn cardinality_backend_examples() {
        let sig = fixtures::list_signature();
        let elem = sig.lookup_sort("elem").unwrap();
        let mut ctx = Context::new();
        let x = ctx.declare_var("x", elem).unwrap();
        let y = ctx.declare_var("y", elem).unwrap();
        let z = ctx.declare_var("z", elem).unwrap();
        let f = ctx.declare_foreign("f", vec![elem], elem).unwrap();
        let diseq = [Literal::VarDiseq(x, y)];
        assert!(!card(&sig, 1).decide(&ctx, &diseq));
        assert!(card(&sig, 2).decide(&ctx, &diseq));
        let tri = [
            Literal::VarEq(x, y),
            Literal::VarDiseq(y, z),
            Literal::VarDiseq(z, x),
        ];
        assert!(card(&sig, 2).decide(&ctx, &tri));
        let triangle = [
            Literal::VarDiseq(x, y),
            Literal::VarDiseq(y, z),
            Literal::VarDiseq(z, x),
        ];
        assert!(!card(&sig, 2).decide(&ctx, &triangle));
        assert!(card(&sig, 3).decide(&ctx, &triangle));
        let (fx, fy) = (
            ctx.declare_var("fx", elem).unwrap(),
            ctx.declare_var("fy", elem).unwrap(),
        );
        let congruence = [
            Literal::FunEq(fx, f, vec![x]),
            Literal::FunEq(fy, f, vec![y]),
            Literal::VarEq(x, y),
            Literal::VarDiseq(fx, fy),
        ];
        assert!(!card(&sig, 5).decide(&ctx, &congruence));
    }

    #[test]
    fn purification_names_alien_subterms() {
        let sig = fixtures::list_signature();
        let elem = sig.lookup_sort("elem").unwrap();
        let list = sig.lookup_sort("list").unwrap();
        let cons = sig.lookup_ctor("cons").unwrap();
        let car = SelectorId {
            ctor: cons,
            index: 0,
        };
        let mut ctx = Context::new();
        let x = ctx.declare_var("x", list).unwrap();
        let a = ctx.declare_var("a", elem).unwrap();
        let f = ctx.declare_foreign("f", vec![elem], elem).unwrap();
        let lhs = Term::app(Func::Sel(car), vec![Term::Var(x)]);
        let rhs = Term::app(Func::Foreign(f), vec![Term::Var(a)]);
        let p = purify(&mut ctx, &sig, &Formula::eq(lhs.clone(), rhs.clone())).unwrap();
        let Formula::And(dt) = &p.datatype_part else {
            panic!()
        };
        let Formula::And(other) = &p.other_part else {
            panic!()
        };
        assert_eq!(dt.len(), 1);
        assert_eq!(other.len(), 1);
        let Formula::Eq(l, Term::Var(u)) = &dt[0] else {
            panic!("{dt:?}")
        };
        assert_eq!(*l, lhs);
        assert!(ctx.is_fresh(*u));
        assert_eq!(other[0], Formula::eq(Term::Var(*u), rhs));

        let pure = Formula::not(Formula::eq(Term::Var(x), Term::Var(x)));
        let p = purify(&mut ctx, &sig, &pure).unwrap();
        assert_eq!(p.other_part, Formula::And(vec![]));
        let only_other = Formula::eq(
            Term::Var(a),
            Term::app(Func::Foreign(f), vec![Term::Var(a)]),
        );
        let p = purify(&mut ctx, &sig, &only_other).unwrap();
        assert_eq!(p.datatype_part, Formula::And(vec![]));

        let mixed = Formula::or(vec![
            Formula::Is(cons, Term::Var(x)),
            Formula::eq(
                Term::Var(a),
                Term::app(Func::Foreign(f), vec![Term::Var(a)]),
            ),
        ]);
        assert_eq!(
            purify(&mut ctx, &sig, &mixed),
            Err(CombineError::MixedConjunct)
        );
    }

    #[test]
    fn combination_examples() {
        let sig = fixtures::pair_signature();
        let elem = sig.lookup_sort("elem").unwrap();
        let pair = sig.lookup_sort("pair").unwrap();
        let pc = sig.lookup_ctor("pair").unwrap();
        let mut ctx = Context::new();
        let p = ctx.declare_var("p", pair).unwrap();
        let q = ctx.declare_var("q", pair).unwrap();
        let es: Vec<Var> = ["a", "b", "c", "d"]
            .iter()
            .map(|n| ctx.declare_var(n, elem).unwrap())
            .collect();
        let phi = Formula::cube(&[
            Literal::VarDiseq(p, q),
            Literal::ConsEq(p, pc, vec![es[0], es[1]]),
            Literal::ConsEq(q, pc, vec![es[2], es[3]]),
        ]);
        let prob = purify(&mut ctx, &sig, &phi).unwrap();
        let opts = CombineOptions::default();
        assert!(!combine_check(&mut ctx, &sig, &prob, &card(&sig, 1), &opts).unwrap());
        assert!(combine_check(&mut ctx, &sig, &prob, &card(&sig, 2), &opts).unwrap());

        let sig = fixtures::list_signature();
        let list = sig.lookup_sort("list").unwrap();
        let elem = sig.lookup_sort("elem").unwrap();
        let mut ctx = Context::new();
        let x = ctx.declare_var("x", list).unwrap();
        let y = ctx.declare_var("y", list).unwrap();
        let prob = purify(&mut ctx, &sig, &Literal::VarDiseq(x, y).to_formula()).unwrap();
        assert!(combine_check(&mut ctx, &sig, &prob, &card(&sig, 1), &opts).unwrap());

        let a = ctx.declare_var("a", elem).unwrap();
        let b = ctx.declare_var("b", elem).unwrap();
        let prob = purify(&mut ctx, &sig, &Literal::VarDiseq(a, b).to_formula()).unwrap();
        assert!(!combine_check(&mut ctx, &sig, &prob, &card(&sig, 1), &opts).unwrap());
    }

    #[test]
    fn t0_needs_a_strong_witness() {
        let sig = fixtures::t0_signature();
        let sigma = sig.lookup_sort("sigma").unwrap();
        let mut ctx = Context::new();
        let x = ctx.declare_var("x", sigma).unwrap();
        let w = ctx.declare_var("w", sigma).unwrap();
        let phi = [Literal::VarEq(x, x), Literal::VarEq(w, w)];
        let t0 = T0Backend { sort: sigma };

        // φ ∧ (x = w) is T₀-satisfiable, but not over a domain of {x, w}'s values.
        let mut with_delta = phi.to_vec();
        with_delta.push(Literal::VarEq(x, w));
        assert!(t0.decide(&ctx, &with_delta));
        assert_eq!(t0_witnessed_model(&with_delta), None);

        // The weak witness still admits an arrangement collapsing everything.
        let weak = t0_weak_witness(&mut ctx, sigma, &phi);
        let vars = cube_vars(&weak);
        let mut collapsed = weak.clone();
        collapsed.extend(vars.windows(2).map(|p| Literal::VarEq(p[0], p[1])));
        assert!(t0.decide(&ctx, &collapsed));
        assert_eq!(t0_witnessed_model(&collapsed), None);

        // With the strong witness every consistent arrangement has a witnessed model.
        let strong = t0_strong_witness(&mut ctx, sigma, &phi);
        let vars = cube_vars(&strong);
        let mut consistent_arrangements = 0;
        for delta in enumerate_arrangements(&vars) {
            let mut c = strong.clone();
            c.extend(delta.literals());
            if t0.decide(&ctx, &c) {
                consistent_arrangements += 1;
                assert!(t0_witnessed_model(&c).is_some());
            }
        }
        assert!(consistent_arrangements > 0);

        // The additive witness leaves disequality-free cubes alone.
        assert_eq!(t0_additive_witness(&mut ctx, sigma, &phi), phi.to_vec());
        let with_diseq = [Literal::VarDiseq(x, w)];
        assert_eq!(t0_additive_witness(&mut ctx, sigma, &with_diseq).len(), 2);
    }
}
