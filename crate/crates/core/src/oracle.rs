//! Bounded brute-force satisfiability, used as ground truth in tests.
//!
//! Variables range over all trees up to a depth bound built from finite
//! element domains. Selector applications off their constructor, and foreign
//! function applications, only matter at the finitely many points where the
//! formula applies them, so each such point gets its own enumerated value,
//! kept functional across points with equal arguments.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::formula::{Context, Formula, Func, Interpretation, SelectorMode, Term, Var};
use crate::sig::{enumerate_trees, CtorId, ElemDomain, ElemValue, Signature, SortId, Tree};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub elem_sizes: BTreeMap<SortId, u32>,
    pub depth_bound: usize,
    /// Maximum number of search nodes before giving up.
    pub budget: u64,
}

impl OracleConfig {
    pub fn uniform(sig: &Signature, elem_size: u32, depth_bound: usize) -> Self {
        OracleConfig {
            elem_sizes: sig.elem_sorts().map(|s| (s, elem_size)).collect(),
            depth_bound,
            budget: 50_000_000,
        }
    }

    pub fn domain(&self) -> ElemDomain {
        let mut dom = ElemDomain::new();
        for (s, n) in &self.elem_sizes {
            for index in 0..*n {
                dom.insert(ElemValue { sort: *s, index });
            }
        }
        dom
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleResult {
    Sat(Interpretation),
    UnsatWithinBounds,
}

impl OracleResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleResult::Sat(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle search budget of {0} nodes exhausted")]
    ResourceOut(u64),
}

/// A partially known value.
#[derive(Clone, Debug)]
enum PVal {
    Unknown,
    Elem(ElemValue),
    Node(CtorId, Vec<PVal>),
}

impl PVal {
    fn of(t: &Tree) -> PVal {
        match t {
            Tree::Elem(e) => PVal::Elem(*e),
            Tree::Node(c, kids) => PVal::Node(*c, kids.iter().map(PVal::of).collect()),
        }
    }

    fn to_tree(&self) -> Option<Tree> {
        match self {
            PVal::Unknown => None,
            PVal::Elem(e) => Some(Tree::Elem(*e)),
            PVal::Node(c, kids) => Some(Tree::Node(
                *c,
                kids.iter().map(PVal::to_tree).collect::<Option<Vec<_>>>()?,
            )),
        }
    }

    fn root(&self) -> Option<CtorId> {
        match self {
            PVal::Node(c, _) => Some(*c),
            _ => None,
        }
    }
}

/// Three-valued equality.
fn peq(a: &PVal, b: &PVal) -> Option<bool> {
    match (a, b) {
        (PVal::Unknown, _) | (_, PVal::Unknown) => None,
        (PVal::Elem(x), PVal::Elem(y)) => Some(x == y),
        (PVal::Node(c, xs), PVal::Node(d, ys)) => {
            if c != d {
                return Some(false);
            }
            let mut all = Some(true);
            for (x, y) in xs.iter().zip(ys) {
                match peq(x, y) {
                    Some(false) => return Some(false),
                    None => all = None,
                    Some(true) => {}
                }
            }
            all
        }
        _ => Some(false),
    }
}

/// An application of a selector or foreign function occurring in the formula.
struct Point {
    func: Func,
    args: Vec<Term>,
    sort: SortId,
}

struct Search<'a> {
    sig: &'a Signature,
    phi: &'a Formula,
    vars: Vec<Var>,
    points: Vec<Point>,
    point_index: HashMap<Term, usize>,
    universes: HashMap<SortId, Vec<Tree>>,
    var_vals: HashMap<Var, Tree>,
    point_vals: Vec<Option<Tree>>,
    /// Whether a point is a real table entry (true) or determined by the
    /// constructor of its argument.
    point_in_table: Vec<bool>,
    budget: u64,
    visited: u64,
}

impl<'a> Search<'a> {
    fn term(&self, t: &Term) -> PVal {
        match t {
            Term::Var(v) => self.var_vals.get(v).map_or(PVal::Unknown, PVal::of),
            Term::App(Func::Ctor(c), args) => {
                PVal::Node(*c, args.iter().map(|a| self.term(a)).collect())
            }
            Term::App(f, args) => {
                if let (Func::Sel(s), [arg]) = (f, args.as_slice()) {
                    if let PVal::Node(c, kids) = self.term(arg) {
                        if c == s.ctor {
                            return kids[s.index].clone();
                        }
                    }
                }
                let i = self.point_index[t];
                self.point_vals[i].as_ref().map_or(PVal::Unknown, PVal::of)
            }
        }
    }

    fn formula(&self, f: &Formula) -> Option<bool> {
        match f {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::Eq(a, b) => peq(&self.term(a), &self.term(b)),
            Formula::Is(c, t) => match self.term(t) {
                PVal::Unknown => None,
                v => Some(v.root() == Some(*c)),
            },
            Formula::Not(g) => self.formula(g).map(|b| !b),
            Formula::And(fs) => {
                let mut all = Some(true);
                for g in fs {
                    match self.formula(g) {
                        Some(false) => return Some(false),
                        None => all = None,
                        Some(true) => {}
                    }
                }
                all
            }
            Formula::Or(fs) => {
                let mut any = Some(false);
                for g in fs {
                    match self.formula(g) {
                        Some(true) => return Some(true),
                        None => any = None,
                        Some(false) => {}
                    }
                }
                any
            }
        }
    }

    fn universe(&self, sort: SortId) -> Vec<Tree> {
        self.universes[&sort].clone()
    }

    fn run(&mut self, k: usize) -> Result<bool, OracleError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(OracleError::ResourceOut(self.budget));
        }
        match self.formula(self.phi) {
            Some(false) => return Ok(false),
            Some(true) if k == self.vars.len() + self.points.len() => return Ok(true),
            _ => {}
        }
        if k == self.vars.len() + self.points.len() {
            return Ok(false);
        }
        if k < self.vars.len() {
            let v = self.vars[k];
            for t in self.universe(v.sort) {
                self.var_vals.insert(v, t);
                if self.run(k + 1)? {
                    return Ok(true);
                }
            }
            self.var_vals.remove(&v);
            return Ok(false);
        }
        let i = k - self.vars.len();
        let args: Vec<Tree> = self.points[i]
            .args
            .iter()
            .map(|a| {
                self.term(a)
                    .to_tree()
                    .expect("point arguments are assigned first")
            })
            .collect();
        let func = self.points[i].func;
        let forced = match func {
            Func::Sel(s) => match &args[0] {
                Tree::Node(c, kids) if *c == s.ctor => Some((kids[s.index].clone(), false)),
                _ => None,
            },
            _ => None,
        };
        let forced = forced.or_else(|| {
            (0..i).find_map(|j| {
                let same = self.point_in_table[j]
                    && self.points[j].func == func
                    && self.points[j]
                        .args
                        .iter()
                        .zip(&args)
                        .all(|(a, t)| self.term(a).to_tree().as_ref() == Some(t));
                same.then(|| (self.point_vals[j].clone().unwrap(), true))
            })
        });
        let candidates = match forced {
            Some((v, in_table)) => {
                self.point_in_table[i] = in_table;
                vec![v]
            }
            None => {
                self.point_in_table[i] = true;
                self.universe(self.points[i].sort)
            }
        };
        for t in candidates {
            self.point_vals[i] = Some(t);
            if self.run(k + 1)? {
                return Ok(true);
            }
        }
        self.point_vals[i] = None;
        Ok(false)
    }
}

fn collect_points(
    t: &Term,
    sig: &Signature,
    ctx: &Context,
    points: &mut Vec<Point>,
    index: &mut HashMap<Term, usize>,
) {
    if let Term::App(f, args) = t {
        for a in args {
            collect_points(a, sig, ctx, points, index);
        }
        if !matches!(f, Func::Ctor(_)) && !index.contains_key(t) {
            index.insert(t.clone(), points.len());
            points.push(Point {
                func: *f,
                args: args.clone(),
                sort: f.result_sort(sig, ctx),
            });
        }
    }
}

fn formula_points(
    f: &Formula,
    sig: &Signature,
    ctx: &Context,
    points: &mut Vec<Point>,
    index: &mut HashMap<Term, usize>,
) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Eq(a, b) => {
            collect_points(a, sig, ctx, points, index);
            collect_points(b, sig, ctx, points, index);
        }
        Formula::Is(_, t) => collect_points(t, sig, ctx, points, index),
        Formula::Not(g) => formula_points(g, sig, ctx, points, index),
        Formula::And(fs) | Formula::Or(fs) => fs
            .iter()
            .for_each(|g| formula_points(g, sig, ctx, points, index)),
    }
}

fn atoms<'a>(phi: &'a Formula, out: &mut Vec<&'a Formula>) {
    match phi {
        Formula::Eq(..) | Formula::Is(..) => out.push(phi),
        Formula::Not(g) => atoms(g, out),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| atoms(g, out)),
        Formula::True | Formula::False => {}
    }
}

/// Free variables of `phi`, greedily ordered so that each next variable
/// completes as many atoms as possible, then by smallest universe, then by
/// occurrence count, then by first occurrence.
fn search_order(phi: &Formula, universe_len: impl Fn(SortId) -> usize) -> Vec<Var> {
    let mut found = Vec::new();
    atoms(phi, &mut found);
    let mut pending: Vec<Vec<Var>> = found.iter().map(|a| a.free_vars()).collect();
    let mut left = phi.free_vars();
    let mut order = Vec::with_capacity(left.len());
    while !left.is_empty() {
        let score = |v: &Var| {
            let completes = pending.iter().filter(|a| a.iter().all(|w| w == v)).count();
            let occurs = pending.iter().filter(|a| a.contains(v)).count();
            (completes, std::cmp::Reverse(universe_len(v.sort)), occurs)
        };
        let best = (0..left.len())
            .rev()
            .max_by_key(|&i| score(&left[i]))
            .unwrap();
        let v = left.remove(best);
        for a in &mut pending {
            a.retain(|w| *w != v);
        }
        order.push(v);
    }
    order
}

/// Searches for a model of `phi` whose variable values have depth at most
/// `cfg.depth_bound` over element domains of exactly the configured sizes.
pub fn brute_force_sat(
    sig: &Signature,
    ctx: &Context,
    phi: &Formula,
    cfg: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    let dom = cfg.domain();
    let mut points = Vec::new();
    let mut point_index = HashMap::new();
    formula_points(phi, sig, ctx, &mut points, &mut point_index);
    let universes: HashMap<SortId, Vec<Tree>> = sig
        .sorts()
        .map(|s| (s, enumerate_trees(sig, s, cfg.depth_bound, &dom)))
        .collect();
    let n_points = points.len();
    let vars = search_order(phi, |s| universes[&s].len());
    let mut search = Search {
        sig,
        phi,
        vars,
        points,
        point_index,
        universes,
        var_vals: HashMap::new(),
        point_vals: vec![None; n_points],
        point_in_table: vec![false; n_points],
        budget: cfg.budget,
        visited: 0,
    };
    if !search.run(0)? {
        return Ok(OracleResult::UnsatWithinBounds);
    }
    let mut interp = Interpretation::new(dom);
    interp.mode = SelectorMode::Strict;
    interp.values = search
        .var_vals
        .iter()
        .map(|(v, t)| (*v, t.clone()))
        .collect();
    for (i, p) in search.points.iter().enumerate() {
        if !search.point_in_table[i] {
            continue;
        }
        let args: Vec<Tree> = p
            .args
            .iter()
            .map(|a| search.term(a).to_tree().unwrap())
            .collect();
        let val = search.point_vals[i].clone().unwrap();
        match p.func {
            Func::Sel(s) => {
                interp.selector_table.insert((s, args[0].clone()), val);
            }
            Func::Foreign(g) => {
                interp.foreign_table.insert((g, args), val);
            }
            Func::Ctor(_) => {}
        }
    }
    let _ = search.sig;
    Ok(OracleResult::Sat(interp))
}
