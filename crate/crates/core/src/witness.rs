//! Witness functions: the inductive-sort witness, the finite-sort witness,
//! their composition for arbitrary signatures, and lifting to formulas.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::formula::{
    cube_of_formula, cube_vars, to_flat_dnf, Context, Cube, Formula, FormulaError, Interpretation,
    Literal, Var,
};
use crate::sig::{CtorId, Signature, SortId, Tree};

/// Which rule produced an added conjunct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    SelectorGuess,
    TesterPos,
    TesterNeg,
    ElemIdentity,
    FiniteGuess,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Conjunct {
    Lit(Literal),
    /// A disjunction of at least two literals, or the empty (false) one.
    Disj(Vec<Literal>),
}

impl Conjunct {
    fn from_disjuncts(mut lits: Vec<Literal>) -> Self {
        if lits.len() == 1 {
            Conjunct::Lit(lits.pop().unwrap())
        } else {
            Conjunct::Disj(lits)
        }
    }

    pub fn disjuncts(&self) -> &[Literal] {
        match self {
            Conjunct::Lit(l) => std::slice::from_ref(l),
            Conjunct::Disj(ls) => ls,
        }
    }

    pub fn to_formula(&self) -> Formula {
        match self {
            Conjunct::Lit(l) => l.to_formula(),
            Conjunct::Disj(ls) => Formula::Or(ls.iter().map(Literal::to_formula).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Added {
    pub origin: Origin,
    pub conjunct: Conjunct,
}

/// `base ∧ added`, where `fresh_vars` are exactly the variables of `added`
/// that do not occur in `base`, in creation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessOutput {
    pub base: Cube,
    pub added: Vec<Added>,
    pub fresh_vars: Vec<Var>,
}

impl WitnessOutput {
    pub fn conjuncts(&self) -> impl Iterator<Item = Conjunct> + '_ {
        self.base
            .iter()
            .cloned()
            .map(Conjunct::Lit)
            .chain(self.added.iter().map(|a| a.conjunct.clone()))
    }

    pub fn to_formula(&self) -> Formula {
        Formula::And(self.conjuncts().map(|c| c.to_formula()).collect())
    }

    /// All variables, first-occurrence order.
    pub fn vars(&self) -> Vec<Var> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for c in self.conjuncts() {
            for l in c.disjuncts() {
                for v in l.vars() {
                    if seen.insert(v) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    pub fn is_cube(&self) -> bool {
        self.added
            .iter()
            .all(|a| matches!(a.conjunct, Conjunct::Lit(_)))
    }

    /// The output as a flat cube when it contains no disjunction.
    pub fn as_cube(&self) -> Option<Cube> {
        self.is_cube()
            .then(|| self.conjuncts().map(|c| c.disjuncts()[0].clone()).collect())
    }

    fn push(&mut self, origin: Origin, conjunct: Conjunct) {
        self.added.push(Added { origin, conjunct });
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("witness input is not a conjunction of flat literals")]
    NotACube,
    #[error("sort `{0}` is not finite")]
    NonFiniteSort(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("source model does not satisfy the formula")]
    ModelMismatch,
}

/// Which witness function to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    Inductive,
    Finite,
    Combined,
}

pub fn witness_cube(
    kind: WitnessKind,
    ctx: &mut Context,
    sig: &Signature,
    phi: &[Literal],
) -> Result<WitnessOutput, WitnessError> {
    match kind {
        WitnessKind::Inductive => Ok(wtn_inductive(ctx, sig, phi)),
        WitnessKind::Finite => wtn_finite(ctx, sig, phi),
        WitnessKind::Combined => Ok(wtn_combined(ctx, sig, phi)),
    }
}

/// Applies a witness to a formula that must be a conjunction of flat literals.
pub fn witness_formula(
    kind: WitnessKind,
    ctx: &mut Context,
    sig: &Signature,
    phi: &Formula,
) -> Result<WitnessOutput, WitnessError> {
    let cube = cube_of_formula(phi).ok_or(WitnessError::NotACube)?;
    witness_cube(kind, ctx, sig, &cube)
}

fn fresh_args(ctx: &mut Context, sig: &Signature, c: CtorId, out: &mut WitnessOutput) -> Vec<Var> {
    sig.ctor(c)
        .fields
        .iter()
        .map(|f| {
            let v = ctx.fresh_var(f.sort);
            out.fresh_vars.push(v);
            v
        })
        .collect()
}

/// Witness for inductive sorts. Finite structure sorts are treated like
/// element sorts: their selectors and testers are left alone and they take
/// part in the trivial-equality rule.
///
/// Rule triggers are evaluated against the input cube only, one literal at a
/// time in order.
pub fn wtn_inductive(ctx: &mut Context, sig: &Signature, phi: &[Literal]) -> WitnessOutput {
    let mut out = WitnessOutput {
        base: phi.to_vec(),
        added: Vec::new(),
        fresh_vars: Vec::new(),
    };
    let constructed = |x: Var, pred: &dyn Fn(CtorId) -> bool| {
        phi.iter()
            .any(|l| matches!(l, Literal::ConsEq(y, d, _) if *y == x && pred(*d)))
    };
    for lit in phi {
        match lit {
            Literal::SelEq(y, s, x) if sig.is_inductive(x.sort) => {
                if constructed(*x, &|_| true) {
                    continue;
                }
                let mut disjuncts = Vec::new();
                for d in sig.ctors_of(x.sort) {
                    let mut args = Vec::new();
                    for (i, f) in sig.ctor(*d).fields.iter().enumerate() {
                        if *d == s.ctor && i == s.index {
                            args.push(*y);
                        } else {
                            let v = ctx.fresh_var(f.sort);
                            out.fresh_vars.push(v);
                            args.push(v);
                        }
                    }
                    disjuncts.push(Literal::ConsEq(*x, *d, args));
                }
                out.push(Origin::SelectorGuess, Conjunct::from_disjuncts(disjuncts));
            }
            Literal::Tester(true, c, x) if sig.is_inductive(x.sort) => {
                if constructed(*x, &|d| d == *c) {
                    continue;
                }
                let args = fresh_args(ctx, sig, *c, &mut out);
                out.push(
                    Origin::TesterPos,
                    Conjunct::Lit(Literal::ConsEq(*x, *c, args)),
                );
            }
            Literal::Tester(false, c, x) if sig.is_inductive(x.sort) => {
                if constructed(*x, &|d| d != *c) {
                    continue;
                }
                let disjuncts = sig
                    .ctors_of(x.sort)
                    .iter()
                    .filter(|d| **d != *c)
                    .map(|d| {
                        let args = fresh_args(ctx, sig, *d, &mut out);
                        Literal::ConsEq(*x, *d, args)
                    })
                    .collect();
                out.push(Origin::TesterNeg, Conjunct::from_disjuncts(disjuncts));
            }
            _ => {}
        }
    }
    let present: BTreeSet<SortId> = cube_vars(phi).iter().map(|v| v.sort).collect();
    for sort in sig.sorts() {
        let elem_like = sig.is_elem(sort) || sig.is_finite(sort);
        if elem_like && !present.contains(&sort) {
            let v = ctx.fresh_var(sort);
            out.fresh_vars.push(v);
            out.push(Origin::ElemIdentity, Conjunct::Lit(Literal::VarEq(v, v)));
        }
    }
    out
}

/// Witness for signatures whose structure sorts are all finite: guess a
/// constructor for every unconstructed structure variable until none is left.
pub fn wtn_finite(
    ctx: &mut Context,
    sig: &Signature,
    phi: &[Literal],
) -> Result<WitnessOutput, WitnessError> {
    if let Some(v) = cube_vars(phi).iter().find(|v| sig.is_inductive(v.sort)) {
        return Err(WitnessError::NonFiniteSort(
            sig.sort_name(v.sort).to_owned(),
        ));
    }
    let mut out = WitnessOutput {
        base: phi.to_vec(),
        added: Vec::new(),
        fresh_vars: Vec::new(),
    };
    finite_pass(ctx, sig, &mut out);
    Ok(out)
}

/// Repeatedly picks the first finite-sorted variable (first-occurrence order)
/// with no `x = c(…)` literal anywhere in the output, disjuncts included, and
/// adds the disjunction of all its constructors over fresh arguments.
fn finite_pass(ctx: &mut Context, sig: &Signature, out: &mut WitnessOutput) {
    loop {
        let mut constructed = BTreeSet::new();
        for c in out.conjuncts() {
            for l in c.disjuncts() {
                if let Literal::ConsEq(x, _, _) = l {
                    constructed.insert(*x);
                }
            }
        }
        let Some(x) = out
            .vars()
            .into_iter()
            .find(|v| sig.is_finite(v.sort) && !constructed.contains(v))
        else {
            return;
        };
        let disjuncts = sig
            .ctors_of(x.sort)
            .iter()
            .map(|c| {
                let args = fresh_args(ctx, sig, *c, out);
                Literal::ConsEq(x, *c, args)
            })
            .collect();
        out.push(Origin::FiniteGuess, Conjunct::from_disjuncts(disjuncts));
    }
}

/// The inductive witness (finite sorts as element sorts) followed by the
/// finite witness on the finite-sorted variables of its output.
pub fn wtn_combined(ctx: &mut Context, sig: &Signature, phi: &[Literal]) -> WitnessOutput {
    let mut out = wtn_inductive(ctx, sig, phi);
    finite_pass(ctx, sig, &mut out);
    out
}

/// Applies a cube witness to every cube of the flat DNF of `phi`.
pub fn wtn_lift_parts(
    ctx: &mut Context,
    sig: &Signature,
    phi: &Formula,
    mut base: impl FnMut(&mut Context, &Signature, &[Literal]) -> Result<WitnessOutput, WitnessError>,
) -> Result<Vec<WitnessOutput>, WitnessError> {
    let cubes: Vec<Cube> = to_flat_dnf(ctx, sig, phi)?.collect();
    cubes.iter().map(|c| base(ctx, sig, c)).collect()
}

/// `⋁_j base(D_j)` over the flat DNF cubes `D_j` of `phi`.
pub fn wtn_lift(
    ctx: &mut Context,
    sig: &Signature,
    phi: &Formula,
    base: impl FnMut(&mut Context, &Signature, &[Literal]) -> Result<WitnessOutput, WitnessError>,
) -> Result<Formula, WitnessError> {
    let parts = wtn_lift_parts(ctx, sig, phi, base)?;
    Ok(Formula::Or(
        parts.iter().map(WitnessOutput::to_formula).collect(),
    ))
}

/// Extends a model of the witness input to one of the whole witness output.
///
/// Each added conjunct is satisfied by the disjunct whose constructor matches
/// the current value of its variable; fresh arguments take the corresponding
/// children. Fresh variables of the other disjuncts get least values.
pub fn extend_model(
    sig: &Signature,
    ctx: &Context,
    out: &WitnessOutput,
    source: &Interpretation,
) -> Result<Interpretation, WitnessError> {
    let mut model = source.clone();
    if !model
        .eval_cube(sig, ctx, &out.base)
        .map_err(|_| WitnessError::ModelMismatch)?
    {
        return Err(WitnessError::ModelMismatch);
    }
    let fresh: BTreeSet<Var> = out.fresh_vars.iter().copied().collect();
    for added in &out.added {
        let lits = added.conjunct.disjuncts();
        let subject = match lits.first() {
            Some(Literal::ConsEq(x, _, _)) | Some(Literal::VarEq(x, _)) => *x,
            _ => return Err(WitnessError::ModelMismatch),
        };
        let value = match model.values.get(&subject) {
            Some(v) => v.clone(),
            None => {
                let v = least_value(sig, &mut model, subject.sort);
                model.values.insert(subject, v.clone());
                v
            }
        };
        for lit in lits {
            if let Literal::ConsEq(_, c, args) = lit {
                let matching = value.root() == Some(*c);
                for (i, a) in args.iter().enumerate() {
                    if !fresh.contains(a) || model.values.contains_key(a) {
                        continue;
                    }
                    let v = if matching {
                        value.children()[i].clone()
                    } else {
                        least_value(sig, &mut model, a.sort)
                    };
                    model.values.insert(*a, v);
                }
            }
        }
    }
    for v in &out.fresh_vars {
        if !model.values.contains_key(v) {
            let t = least_value(sig, &mut model, v.sort);
            model.values.insert(*v, t);
        }
    }
    match crate::formula::eval_formula(&model, sig, ctx, &out.to_formula()) {
        Ok(true) => Ok(model),
        _ => Err(WitnessError::ModelMismatch),
    }
}

fn least_value(sig: &Signature, model: &mut Interpretation, sort: SortId) -> Tree {
    for e in sig.elem_sorts() {
        if model.domain.is_empty(e) {
            model.domain.insert(model.domain.least(e));
        }
    }
    sig.least_tree(sort, &model.domain)
}
