//! Random flat cubes over the canonical signatures, sized so that every
//! satisfiable instance has a model inside the oracle bounds used here.
#![allow(dead_code)]

use std::collections::BTreeMap;

use adt_polite_core::fixtures::{list_signature, lp_signature, pair_signature};
use adt_polite_core::{
    brute_force_sat, cube_vars, enumerate_arrangements, Context, Cube, Formula, Literal,
    OracleConfig, OracleResult, Signature, SortId, Var, WitnessKind,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub const DEPTH: usize = 4;

pub struct Fx {
    pub name: &'static str,
    pub sig: Signature,
    pub kind: WitnessKind,
    pub elem_size: u32,
    /// Per-sort variable caps, by sort name.
    pub caps: Vec<(&'static str, usize)>,
}

impl Fx {
    pub fn sort(&self, name: &str) -> SortId {
        self.sig.lookup_sort(name).unwrap()
    }

    pub fn oracle(&self) -> OracleConfig {
        OracleConfig::uniform(&self.sig, self.elem_size, DEPTH)
    }

    pub fn oracle_sat(&self, ctx: &Context, f: &Formula) -> OracleResult {
        brute_force_sat(&self.sig, ctx, f, &self.oracle()).expect("oracle budget")
    }
}

pub fn list() -> Fx {
    Fx {
        name: "list",
        sig: list_signature(),
        kind: WitnessKind::Inductive,
        elem_size: 3,
        caps: vec![("list", 3), ("elem", 3)],
    }
}

pub fn pair() -> Fx {
    Fx {
        name: "pair",
        sig: pair_signature(),
        kind: WitnessKind::Finite,
        elem_size: 3,
        caps: vec![("pair", 3), ("elem", 3)],
    }
}

pub fn lp() -> Fx {
    Fx {
        name: "lp",
        sig: lp_signature(),
        kind: WitnessKind::Combined,
        elem_size: 2,
        caps: vec![("list", 2), ("pair", 2), ("elem", 2)],
    }
}

/// Lists only, with room for four pairwise-distinct list variables.
pub fn wide_list() -> Fx {
    Fx {
        name: "wide-list",
        caps: vec![("list", 4), ("elem", 1)],
        ..list()
    }
}

pub fn all() -> Vec<Fx> {
    vec![list(), pair(), lp()]
}

pub const MAX_VARS: usize = 5;

/// Declares between one and five variables, at least one of a structure sort.
pub fn random_vars(rng: &mut impl Rng, fx: &Fx, ctx: &mut Context) -> Vec<Var> {
    loop {
        let counts: Vec<usize> = fx.caps.iter().map(|(_, c)| rng.gen_range(0..=*c)).collect();
        let total: usize = counts.iter().sum();
        let structs: usize = fx
            .caps
            .iter()
            .zip(&counts)
            .filter(|((s, _), _)| !fx.sig.is_elem(fx.sort(s)))
            .map(|(_, n)| n)
            .sum();
        if total == 0 || total > MAX_VARS || structs == 0 {
            continue;
        }
        let mut vars = Vec::new();
        for ((s, _), n) in fx.caps.iter().zip(counts) {
            for _ in 0..n {
                vars.push(ctx.fresh_var(fx.sort(s)));
            }
        }
        return vars;
    }
}

fn pick_of_sort(rng: &mut impl Rng, vars: &[Var], sort: SortId) -> Option<Var> {
    let of: Vec<Var> = vars.iter().copied().filter(|v| v.sort == sort).collect();
    of.choose(rng).copied()
}

pub fn random_literal(rng: &mut impl Rng, sig: &Signature, vars: &[Var]) -> Option<Literal> {
    let x = *vars.choose(rng)?;
    let kind = if sig.is_elem(x.sort) {
        rng.gen_range(0..2)
    } else {
        rng.gen_range(0..5)
    };
    match kind {
        0 => Some(Literal::VarEq(x, pick_of_sort(rng, vars, x.sort)?)),
        1 => Some(Literal::VarDiseq(x, pick_of_sort(rng, vars, x.sort)?)),
        2 => {
            let c = *sig.ctors_of(x.sort).choose(rng)?;
            let args: Option<Vec<Var>> = sig
                .ctor(c)
                .fields
                .iter()
                .map(|f| pick_of_sort(rng, vars, f.sort))
                .collect();
            Some(Literal::ConsEq(x, c, args?))
        }
        3 => {
            let s = *sig
                .selectors()
                .filter(|s| sig.selector_domain(*s) == x.sort)
                .collect::<Vec<_>>()
                .choose(rng)?;
            let y = pick_of_sort(rng, vars, sig.selector(s).sort)?;
            Some(Literal::SelEq(y, s, x))
        }
        _ => {
            let c = *sig.ctors_of(x.sort).choose(rng)?;
            Some(Literal::Tester(rng.gen_bool(0.5), c, x))
        }
    }
}

/// One to four literals over fresh variables of `fx`.
pub fn random_cube(rng: &mut impl Rng, fx: &Fx, ctx: &mut Context) -> Cube {
    let vars = random_vars(rng, fx, ctx);
    let n = rng.gen_range(1..=4);
    let mut cube = Vec::new();
    while cube.len() < n {
        if let Some(l) = random_literal(rng, &fx.sig, &vars) {
            cube.push(l);
        }
    }
    cube
}

/// Disequalities between every two distinct structure variables of `vars`,
/// followed by up to two random literals.
pub fn spread_cube(rng: &mut impl Rng, fx: &Fx, ctx: &mut Context) -> Cube {
    let vars = random_vars(rng, fx, ctx);
    let structs: Vec<Var> = vars
        .iter()
        .copied()
        .filter(|v| !fx.sig.is_elem(v.sort))
        .collect();
    let mut cube = Vec::new();
    for (i, x) in structs.iter().enumerate() {
        for y in &structs[i + 1..] {
            if x.sort == y.sort {
                cube.push(Literal::VarDiseq(*x, *y));
            }
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        cube.extend(random_literal(rng, &fx.sig, &vars));
    }
    if cube.is_empty() {
        cube.push(Literal::VarEq(vars[0], vars[0]));
    }
    cube
}

/// A uniformly chosen arrangement of the element variables of `cube`.
pub fn random_arrangement(rng: &mut impl Rng, sig: &Signature, cube: &[Literal]) -> Cube {
    let elems: Vec<Var> = cube_vars(cube)
        .into_iter()
        .filter(|v| sig.is_elem(v.sort))
        .collect();
    let all: Vec<_> = enumerate_arrangements(&elems).collect();
    all.choose(rng).unwrap().literals()
}

/// Up to three equalities and disequalities between element variables,
/// drawn from `pool` plus one new variable per element sort.
pub fn random_elem_conjunction(
    rng: &mut impl Rng,
    sig: &Signature,
    ctx: &mut Context,
    pool: &[Var],
) -> Cube {
    let mut vars: Vec<Var> = pool
        .iter()
        .copied()
        .filter(|v| sig.is_elem(v.sort))
        .collect();
    for s in sig.elem_sorts().collect::<Vec<_>>() {
        vars.push(ctx.fresh_var(s));
    }
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| {
            let x = *vars.choose(rng).unwrap();
            let y = pick_of_sort(rng, &vars, x.sort).unwrap();
            if rng.gen_bool(0.5) {
                Literal::VarEq(x, y)
            } else {
                Literal::VarDiseq(x, y)
            }
        })
        .collect()
}

/// `{σ ↦ |σ| + k}` for every element sort of the model's domain.
pub fn inflated_sizes(
    sig: &Signature,
    m: &adt_polite_core::Interpretation,
    k: usize,
) -> BTreeMap<SortId, usize> {
    sig.elem_sorts().map(|s| (s, m.domain.len(s) + k)).collect()
}
