//! Scalable instances for the benchmarks.

use adt_polite_core::fixtures::{list_signature, pair_signature};
use adt_polite_core::{cube_vars, enumerate_arrangements, Context, Cube, Literal, Signature, Var};

pub struct Instance {
    pub sig: Signature,
    pub ctx: Context,
    pub cube: Cube,
}

fn selector(sig: &Signature, name: &str) -> adt_polite_core::SelectorId {
    sig.selectors()
        .find(|s| sig.selector_name(*s) == name)
        .expect("selector exists")
}

/// `x_{i+1} = cdr(x_i)` for `i < n`, with `x_n` a cons cell.
pub fn cdr_chain(n: usize) -> Instance {
    let sig = list_signature();
    let list = sig.lookup_sort("list").unwrap();
    let cdr = selector(&sig, "cdr");
    let cons = sig.lookup_ctor("cons").unwrap();
    let mut ctx = Context::new();
    let xs: Vec<Var> = (0..=n).map(|_| ctx.fresh_var(list)).collect();
    let mut cube: Cube = xs
        .windows(2)
        .map(|w| Literal::SelEq(w[1], cdr, w[0]))
        .collect();
    cube.push(Literal::Tester(true, cons, xs[n]));
    Instance { sig, ctx, cube }
}

/// `n` pairwise-distinct free lists sharing one element.
pub fn distinct_lists(n: usize) -> Instance {
    let sig = list_signature();
    let list = sig.lookup_sort("list").unwrap();
    let elem = sig.lookup_sort("elem").unwrap();
    let cons = sig.lookup_ctor("cons").unwrap();
    let mut ctx = Context::new();
    let e = ctx.fresh_var(elem);
    let xs: Vec<Var> = (0..n).map(|_| ctx.fresh_var(list)).collect();
    let mut cube = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        for y in &xs[i + 1..] {
            cube.push(Literal::VarDiseq(*x, *y));
        }
    }
    if let [a, b, ..] = xs[..] {
        cube.push(Literal::ConsEq(a, cons, vec![e, b]));
    }
    Instance { sig, ctx, cube }
}

/// `n` pairwise-distinct pairs whose first components are all `a`.
pub fn pairs_sharing_first(n: usize) -> Instance {
    let sig = pair_signature();
    let pair = sig.lookup_sort("pair").unwrap();
    let elem = sig.lookup_sort("elem").unwrap();
    let first = selector(&sig, "first");
    let mut ctx = Context::new();
    let a = ctx.fresh_var(elem);
    let ps: Vec<Var> = (0..n).map(|_| ctx.fresh_var(pair)).collect();
    let mut cube: Cube = ps.iter().map(|p| Literal::SelEq(a, first, *p)).collect();
    for (i, p) in ps.iter().enumerate() {
        for q in &ps[i + 1..] {
            cube.push(Literal::VarDiseq(*p, *q));
        }
    }
    Instance { sig, ctx, cube }
}

/// The instance's cube extended with the arrangement that keeps every
/// element variable distinct.
pub fn with_distinct_elems(mut inst: Instance) -> Instance {
    let elems: Vec<Var> = cube_vars(&inst.cube)
        .into_iter()
        .filter(|v| inst.sig.is_elem(v.sort))
        .collect();
    let finest = enumerate_arrangements(&elems)
        .last()
        .expect("one arrangement");
    inst.cube.extend(finest.literals());
    inst
}
