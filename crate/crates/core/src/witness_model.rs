//! Finite-witness model constructions.
//!
//! Given a witness output Γ and any model A of it, build a model B of Γ whose
//! element domains consist exactly of the values of Γ's element variables.
//! For signatures with inductive sorts, structure values are rebuilt from an
//! ordering of the A-equivalence classes of Γ's variables; for finite
//! signatures, B is A restricted to those element values.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{
    eval_formula, Context, Cube, Formula, Interpretation, Literal, SelectorMode, Var,
};
use crate::sig::{ElemDomain, ElemValue, Signature, SortId, Tree};
use crate::witness::{Conjunct, WitnessOutput};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("source model does not satisfy the witness output")]
    NotSatisfying,
    #[error("two selector literals demand different values at the same point")]
    ConflictingSelectorEntries,
    #[error("target cardinality {requested} for sort `{sort}` is below the current {current}")]
    CardinalityTooSmall {
        sort: String,
        requested: usize,
        current: usize,
    },
    #[error("foreign function literals are not supported here")]
    ForeignLiteral,
    #[error("constructed model fails the witness output")]
    ModelCheckFailed,
}

/// The three stages of simplification: Γ₁ (disjunctions resolved), Γ₂ (no
/// testers) and Γ′ (no selectors either).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Simplified {
    pub gamma1: Cube,
    pub gamma2: Cube,
    pub gamma_prime: Cube,
}

pub fn simplify_gamma(
    sig: &Signature,
    ctx: &Context,
    gamma: &[Conjunct],
    a: &Interpretation,
) -> Result<Simplified, ModelError> {
    let holds = |l: &Literal| a.eval_literal(sig, ctx, l).unwrap_or(false);
    let mut gamma1 = Vec::new();
    for c in gamma {
        let chosen = c
            .disjuncts()
            .iter()
            .find(|l| holds(l))
            .ok_or(ModelError::NotSatisfying)?;
        if matches!(chosen, Literal::FunEq(..)) {
            return Err(ModelError::ForeignLiteral);
        }
        gamma1.push(chosen.clone());
    }
    let gamma2: Cube = gamma1
        .iter()
        .filter(|l| !matches!(l, Literal::Tester(..)))
        .cloned()
        .collect();
    let gamma_prime = gamma2
        .iter()
        .filter(|l| !matches!(l, Literal::SelEq(..)))
        .cloned()
        .collect();
    Ok(Simplified {
        gamma1,
        gamma2,
        gamma_prime,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Class {
    /// Members in first-occurrence order.
    pub vars: Vec<Var>,
    pub sort: SortId,
    /// The common value in the source model.
    pub source_value: Tree,
    pub nullary: bool,
    pub minimal: bool,
    /// First `y = c(…)` literal of Γ′ with `y` in the class.
    pub defining: Option<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDag {
    pub classes: Vec<Class>,
    /// `(α, β)` for `α ≺ β`.
    pub edges: BTreeSet<(usize, usize)>,
    pub topo_order: Vec<usize>,
    /// Length of the longest `≺`-path.
    pub d: usize,
}

impl ClassDag {
    pub fn class_of(&self, v: Var) -> Option<usize> {
        self.classes.iter().position(|c| c.vars.contains(&v))
    }
}

/// Groups `vars` by their value under `a` and orders the classes: nullary
/// classes, then element classes, then the other minimal classes, then the
/// rest in dependency order (lowest index first among ready classes).
pub fn build_class_dag(
    sig: &Signature,
    vars: &[Var],
    gamma_prime: &[Literal],
    a: &Interpretation,
) -> ClassDag {
    let mut classes: Vec<Class> = Vec::new();
    let mut index: BTreeMap<(SortId, Tree), usize> = BTreeMap::new();
    let mut class_of: BTreeMap<Var, usize> = BTreeMap::new();
    for v in vars {
        let value = a.values[v].clone();
        let i = *index.entry((v.sort, value.clone())).or_insert_with(|| {
            classes.push(Class {
                vars: Vec::new(),
                sort: v.sort,
                nullary: matches!(&value, Tree::Node(_, kids) if kids.is_empty()),
                source_value: value,
                minimal: true,
                defining: None,
            });
            classes.len() - 1
        });
        classes[i].vars.push(*v);
        class_of.insert(*v, i);
    }
    let mut edges = BTreeSet::new();
    for lit in gamma_prime {
        if let Literal::ConsEq(y, _, args) = lit {
            let beta = class_of[y];
            if classes[beta].defining.is_none() {
                classes[beta].defining = Some(lit.clone());
            }
            for w in args {
                edges.insert((class_of[w], beta));
            }
        }
    }
    for (_, beta) in &edges {
        classes[*beta].minimal = false;
    }

    let n = classes.len();
    let mut topo_order: Vec<usize> = Vec::with_capacity(n);
    let group = |c: &Class| {
        if c.nullary {
            0
        } else if sig.is_elem(c.sort) {
            1
        } else {
            2
        }
    };
    for g in 0..3 {
        topo_order.extend((0..n).filter(|i| classes[*i].minimal && group(&classes[*i]) == g));
    }
    let mut placed: Vec<bool> = (0..n).map(|i| classes[i].minimal).collect();
    while topo_order.len() < n {
        let next = (0..n)
            .find(|b| !placed[*b] && edges.iter().all(|(x, y)| *y != *b || placed[*x]))
            .expect("class relation of a satisfied cube is acyclic");
        placed[next] = true;
        topo_order.push(next);
    }

    let mut longest = vec![0usize; n];
    for &b in &topo_order {
        for (x, y) in &edges {
            if *y == b {
                longest[b] = longest[b].max(longest[*x] + 1);
            }
        }
    }
    ClassDag {
        classes,
        edges,
        topo_order,
        d: longest.into_iter().max().unwrap_or(0),
    }
}

/// Variable values of the model under construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialModel {
    pub domain: ElemDomain,
    pub values: BTreeMap<Var, Tree>,
    /// Depths of the values given to minimal non-nullary structure classes,
    /// in construction order.
    pub spine_depths: Vec<usize>,
}

/// Element domains of B: the source values of the element variables.
fn restricted_domain(sig: &Signature, vars: &[Var], a: &Interpretation) -> ElemDomain {
    let mut dom = ElemDomain::new();
    for v in vars {
        if let Some(Tree::Elem(e)) = a.values.get(v) {
            dom.insert(*e);
        }
    }
    for s in sig.elem_sorts() {
        if dom.is_empty(s) {
            dom.insert(a.domain.least(s));
        }
    }
    dom
}

pub fn assign_classes(
    sig: &Signature,
    dag: &ClassDag,
    vars: &[Var],
    a: &Interpretation,
) -> PartialModel {
    let domain = restricted_domain(sig, vars, a);
    let mut class_values: Vec<Option<Tree>> = vec![None; dag.classes.len()];
    let mut running_max = 0;
    let mut spine_depths = Vec::new();
    for &i in &dag.topo_order {
        let class = &dag.classes[i];
        let value = if class.nullary || sig.is_elem(class.sort) {
            class.source_value.clone()
        } else if class.minimal {
            if sig.is_inductive(class.sort) {
                let t = sig
                    .tree_of_depth_at_least(class.sort, running_max + dag.d + 1, &domain)
                    .expect("inductive sorts have trees of unbounded depth");
                spine_depths.push(t.depth());
                t
            } else {
                class.source_value.clone()
            }
        } else {
            let Some(Literal::ConsEq(_, c, args)) = &class.defining else {
                unreachable!("non-minimal classes have a defining literal")
            };
            let kids = args
                .iter()
                .map(|w| {
                    let j = dag.class_of(*w).expect("argument belongs to a class");
                    class_values[j]
                        .clone()
                        .expect("arguments precede in topological order")
                })
                .collect();
            Tree::Node(*c, kids)
        };
        running_max = running_max.max(value.depth());
        class_values[i] = Some(value);
    }
    let values = dag
        .classes
        .iter()
        .zip(class_values)
        .flat_map(|(c, v)| {
            let v = v.expect("every class is assigned");
            c.vars.iter().map(move |x| (*x, v.clone()))
        })
        .collect();
    PartialModel {
        domain,
        values,
        spine_depths,
    }
}

/// Fills the selector table from the selector literals of Γ₂. Entries not
/// forced by a literal default to least values.
pub fn complete_selectors(
    gamma2: &[Literal],
    partial: &PartialModel,
) -> Result<Interpretation, ModelError> {
    let mut b = Interpretation::new(partial.domain.clone());
    b.values = partial.values.clone();
    b.mode = SelectorMode::Default;
    for lit in gamma2 {
        if let Literal::SelEq(y, s, x) = lit {
            let xv = &b.values[x];
            if xv.root() == Some(s.ctor) {
                continue;
            }
            let key = (*s, xv.clone());
            let yv = b.values[y].clone();
            match b.selector_table.get(&key) {
                Some(prev) if *prev != yv => return Err(ModelError::ConflictingSelectorEntries),
                _ => {
                    b.selector_table.insert(key, yv);
                }
            }
        }
    }
    Ok(b)
}

/// Everything built along the way, for inspection.
#[derive(Clone, Debug)]
pub struct Construction {
    pub simplified: Simplified,
    pub dag: ClassDag,
    pub spine_depths: Vec<usize>,
    pub model: Interpretation,
}

fn gamma_vars(gamma: &[Conjunct]) -> Vec<Var> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for c in gamma {
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

fn check(
    sig: &Signature,
    ctx: &Context,
    gamma: &[Conjunct],
    b: &Interpretation,
) -> Result<(), ModelError> {
    let f = Formula::And(gamma.iter().map(Conjunct::to_formula).collect());
    match eval_formula(b, sig, ctx, &f) {
        Ok(true) => Ok(()),
        _ => Err(ModelError::ModelCheckFailed),
    }
}

/// The class-ordering construction. Finite structure sorts, if any, are
/// handled like the constructed part of an inductive sort: nullary classes
/// and classes without a defining literal keep their source value.
pub fn construct_inductive(
    sig: &Signature,
    ctx: &Context,
    gamma: &[Conjunct],
    a: &Interpretation,
) -> Result<Construction, ModelError> {
    let simplified = simplify_gamma(sig, ctx, gamma, a)?;
    let vars = gamma_vars(gamma);
    let dag = build_class_dag(sig, &vars, &simplified.gamma_prime, a);
    let partial = assign_classes(sig, &dag, &vars, a);
    let model = complete_selectors(&simplified.gamma2, &partial)?;
    check(sig, ctx, gamma, &model)?;
    Ok(Construction {
        simplified,
        dag,
        spine_depths: partial.spine_depths,
        model,
    })
}

pub fn finite_witness_inductive(
    sig: &Signature,
    ctx: &Context,
    gamma: &[Conjunct],
    a: &Interpretation,
) -> Result<Interpretation, ModelError> {
    construct_inductive(sig, ctx, gamma, a).map(|c| c.model)
}

/// Restricts element domains to the values of Γ's element variables, keeping
/// variable values and the selector entries that stay inside the domain.
pub fn finite_witness_finite(
    sig: &Signature,
    ctx: &Context,
    gamma: &[Conjunct],
    a: &Interpretation,
) -> Result<Interpretation, ModelError> {
    let f = Formula::And(gamma.iter().map(Conjunct::to_formula).collect());
    if !eval_formula(a, sig, ctx, &f).unwrap_or(false) {
        return Err(ModelError::NotSatisfying);
    }
    let vars = gamma_vars(gamma);
    let domain = restricted_domain(sig, &vars, a);
    let inside = |t: &Tree| {
        let mut ok = true;
        t.for_each_elem(&mut |e: ElemValue| ok &= domain.contains(e));
        ok
    };
    let mut b = Interpretation::new(domain.clone());
    b.mode = SelectorMode::Default;
    b.values = vars.iter().map(|v| (*v, a.values[v].clone())).collect();
    b.selector_table = a
        .selector_table
        .iter()
        .filter(|((_, k), v)| inside(k) && inside(v))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    check(sig, ctx, gamma, &b)?;
    Ok(b)
}

/// Dispatches on the sorts of Γ's variables: the restriction when none is
/// inductive, the class construction otherwise.
pub fn finite_witness(
    sig: &Signature,
    ctx: &Context,
    gamma: &[Conjunct],
    a: &Interpretation,
) -> Result<Interpretation, ModelError> {
    if gamma_vars(gamma).iter().any(|v| sig.is_inductive(v.sort)) {
        finite_witness_inductive(sig, ctx, gamma, a)
    } else {
        finite_witness_finite(sig, ctx, gamma, a)
    }
}

pub fn witness_conjuncts(out: &WitnessOutput) -> Vec<Conjunct> {
    out.conjuncts().collect()
}

/// Adds fresh element values until every sort in `kappa` has the requested
/// cardinality. Variable values and selector entries are unchanged.
pub fn smooth_inflate(
    sig: &Signature,
    b: &Interpretation,
    kappa: &BTreeMap<SortId, usize>,
) -> Result<Interpretation, ModelError> {
    let mut out = b.clone();
    for (sort, want) in kappa {
        let have = out.domain.len(*sort);
        if *want < have {
            return Err(ModelError::CardinalityTooSmall {
                sort: sig.sort_name(*sort).to_owned(),
                requested: *want,
                current: have,
            });
        }
        for _ in have..*want {
            let index = out.domain.fresh_index(*sort);
            out.domain.insert(ElemValue { sort: *sort, index });
        }
    }
    Ok(out)
}
