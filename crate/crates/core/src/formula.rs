//! Variables, terms, flat literals and quantifier-free formulas, together with
//! flattening, flat DNF, arrangements and evaluation under an interpretation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::sig::{CtorId, ElemDomain, ElemValue, SelectorId, Signature, SortId, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub id: u32,
    pub sort: SortId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ForeignId(pub(crate) u32);

impl ForeignId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An uninterpreted function over element sorts, owned by a partner theory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForeignDecl {
    pub name: String,
    pub args: Vec<SortId>,
    pub result: SortId,
}

pub const FRESH_PREFIX: &str = "_k!";

/// Per-solve naming context: declared and fresh variables plus foreign
/// function declarations. Fresh names are `_k!<n>` with a monotone counter.
#[derive(Clone, Debug, Default)]
pub struct Context {
    names: Vec<String>,
    sorts: Vec<SortId>,
    fresh: Vec<bool>,
    by_name: HashMap<String, Var>,
    foreign: Vec<ForeignDecl>,
    foreign_by_name: HashMap<String, ForeignId>,
    counter: u32,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_var(&mut self, name: &str, sort: SortId) -> Result<Var, FormulaError> {
        if self.by_name.contains_key(name) || self.foreign_by_name.contains_key(name) {
            return Err(FormulaError::DuplicateName(name.to_owned()));
        }
        Ok(self.push_var(name.to_owned(), sort, false))
    }

    fn push_var(&mut self, name: String, sort: SortId, fresh: bool) -> Var {
        let var = Var {
            id: self.names.len() as u32,
            sort,
        };
        self.by_name.insert(name.clone(), var);
        self.names.push(name);
        self.sorts.push(sort);
        self.fresh.push(fresh);
        var
    }

    pub fn fresh_var(&mut self, sort: SortId) -> Var {
        loop {
            let name = format!("{FRESH_PREFIX}{}", self.counter);
            self.counter += 1;
            if !self.by_name.contains_key(&name) {
                return self.push_var(name, sort, true);
            }
        }
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.names[v.id as usize]
    }

    pub fn is_fresh(&self, v: Var) -> bool {
        self.fresh[v.id as usize]
    }

    pub fn lookup_var(&self, name: &str) -> Option<Var> {
        self.by_name.get(name).copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.sorts.iter().enumerate().map(|(i, s)| Var {
            id: i as u32,
            sort: *s,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn declare_foreign(
        &mut self,
        name: &str,
        args: Vec<SortId>,
        result: SortId,
    ) -> Result<ForeignId, FormulaError> {
        if self.by_name.contains_key(name) || self.foreign_by_name.contains_key(name) {
            return Err(FormulaError::DuplicateName(name.to_owned()));
        }
        let id = ForeignId(self.foreign.len() as u32);
        self.foreign.push(ForeignDecl {
            name: name.to_owned(),
            args,
            result,
        });
        self.foreign_by_name.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn foreign(&self, id: ForeignId) -> &ForeignDecl {
        &self.foreign[id.index()]
    }

    pub fn foreigns(&self) -> impl Iterator<Item = ForeignId> + '_ {
        (0..self.foreign.len()).map(|i| ForeignId(i as u32))
    }

    pub fn lookup_foreign(&self, name: &str) -> Option<ForeignId> {
        self.foreign_by_name.get(name).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Ctor(CtorId),
    Sel(SelectorId),
    Foreign(ForeignId),
}

impl Func {
    pub fn result_sort(self, sig: &Signature, ctx: &Context) -> SortId {
        match self {
            Func::Ctor(c) => sig.ctor(c).result,
            Func::Sel(s) => sig.selector(s).sort,
            Func::Foreign(f) => ctx.foreign(f).result,
        }
    }

    pub fn arg_sorts(self, sig: &Signature, ctx: &Context) -> Vec<SortId> {
        match self {
            Func::Ctor(c) => sig.ctor(c).fields.iter().map(|f| f.sort).collect(),
            Func::Sel(s) => vec![sig.selector_domain(s)],
            Func::Foreign(f) => ctx.foreign(f).args.clone(),
        }
    }

    pub fn name<'a>(self, sig: &'a Signature, ctx: &'a Context) -> &'a str {
        match self {
            Func::Ctor(c) => sig.ctor_name(c),
            Func::Sel(s) => sig.selector_name(s),
            Func::Foreign(f) => &ctx.foreign(f).name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    App(Func, Vec<Term>),
}

impl Term {
    pub fn app(f: Func, args: Vec<Term>) -> Self {
        Term::App(f, args)
    }

    pub fn ctor(c: CtorId, args: &[Var]) -> Self {
        Term::App(Func::Ctor(c), args.iter().copied().map(Term::Var).collect())
    }

    pub fn as_var(&self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(*v),
            Term::App(..) => None,
        }
    }

    /// Sort of a well-sorted term.
    pub fn sort(&self, sig: &Signature, ctx: &Context) -> SortId {
        match self {
            Term::Var(v) => v.sort,
            Term::App(f, _) => f.result_sort(sig, ctx),
        }
    }

    /// Checks arities and argument sorts, returning the term's sort.
    pub fn check(&self, sig: &Signature, ctx: &Context) -> Result<SortId, FormulaError> {
        match self {
            Term::Var(v) => Ok(v.sort),
            Term::App(f, args) => {
                let expected = f.arg_sorts(sig, ctx);
                if expected.len() != args.len() {
                    return Err(FormulaError::ArityMismatch {
                        func: f.name(sig, ctx).to_owned(),
                        expected: expected.len(),
                        found: args.len(),
                    });
                }
                for (arg, want) in args.iter().zip(expected) {
                    let got = arg.check(sig, ctx)?;
                    if got != want {
                        return Err(FormulaError::SortMismatch {
                            expected: sig.sort_name(want).to_owned(),
                            found: sig.sort_name(got).to_owned(),
                        });
                    }
                }
                Ok(f.result_sort(sig, ctx))
            }
        }
    }

    fn collect_vars(&self, seen: &mut BTreeSet<Var>, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if seen.insert(*v) {
                    out.push(*v);
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(seen, out)),
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature, ctx: &'a Context) -> Printer<'a, Term> {
        Printer {
            item: self,
            sig,
            ctx,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    Is(CtorId, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn eq(a: Term, b: Term) -> Self {
        Formula::Eq(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(parts: Vec<Formula>) -> Self {
        Formula::And(parts)
    }

    pub fn or(parts: Vec<Formula>) -> Self {
        Formula::Or(parts)
    }

    pub fn cube(lits: &[Literal]) -> Self {
        Formula::And(lits.iter().map(Literal::to_formula).collect())
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.collect_vars(&mut seen, &mut out);
        out
    }

    fn collect_vars(&self, seen: &mut BTreeSet<Var>, out: &mut Vec<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) => {
                a.collect_vars(seen, out);
                b.collect_vars(seen, out);
            }
            Formula::Is(_, t) => t.collect_vars(seen, out),
            Formula::Not(f) => f.collect_vars(seen, out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(seen, out)),
        }
    }

    pub fn check(&self, sig: &Signature, ctx: &Context) -> Result<(), FormulaError> {
        match self {
            Formula::True | Formula::False => Ok(()),
            Formula::Eq(a, b) => {
                let (sa, sb) = (a.check(sig, ctx)?, b.check(sig, ctx)?);
                if sa != sb {
                    return Err(FormulaError::SortMismatch {
                        expected: sig.sort_name(sa).to_owned(),
                        found: sig.sort_name(sb).to_owned(),
                    });
                }
                Ok(())
            }
            Formula::Is(c, t) => {
                let want = sig.ctor(*c).result;
                let got = t.check(sig, ctx)?;
                if want != got {
                    return Err(FormulaError::SortMismatch {
                        expected: sig.sort_name(want).to_owned(),
                        found: sig.sort_name(got).to_owned(),
                    });
                }
                Ok(())
            }
            Formula::Not(f) => f.check(sig, ctx),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(|f| f.check(sig, ctx)),
        }
    }

    /// True when every atom is a flat literal at its polarity.
    pub fn is_flat(&self) -> bool {
        self.is_flat_at(true)
    }

    fn is_flat_at(&self, positive: bool) -> bool {
        match self {
            Formula::True | Formula::False => true,
            Formula::Not(f) => f.is_flat_at(!positive),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(|f| f.is_flat_at(positive)),
            Formula::Is(_, t) => t.as_var().is_some(),
            Formula::Eq(a, b) => match (a, b) {
                (Term::Var(_), Term::Var(_)) => true,
                (Term::Var(_), Term::App(_, args)) | (Term::App(_, args), Term::Var(_)) => {
                    positive && args.iter().all(|t| t.as_var().is_some())
                }
                _ => false,
            },
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature, ctx: &'a Context) -> Printer<'a, Formula> {
        Printer {
            item: self,
            sig,
            ctx,
        }
    }
}

/// A flat literal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    VarEq(Var, Var),
    VarDiseq(Var, Var),
    /// `x = c(args)`
    ConsEq(Var, CtorId, Vec<Var>),
    /// `y = s(x)`
    SelEq(Var, SelectorId, Var),
    Tester(bool, CtorId, Var),
    /// `y = f(args)` for a foreign function.
    FunEq(Var, ForeignId, Vec<Var>),
}

impl Literal {
    /// Variables in textual order, possibly with repetitions.
    pub fn vars(&self) -> Vec<Var> {
        match self {
            Literal::VarEq(x, y) | Literal::VarDiseq(x, y) => vec![*x, *y],
            Literal::ConsEq(x, _, args) | Literal::FunEq(x, _, args) => {
                std::iter::once(*x).chain(args.iter().copied()).collect()
            }
            Literal::SelEq(y, _, x) => vec![*y, *x],
            Literal::Tester(_, _, x) => vec![*x],
        }
    }

    pub fn to_formula(&self) -> Formula {
        match self {
            Literal::VarEq(x, y) => Formula::Eq(Term::Var(*x), Term::Var(*y)),
            Literal::VarDiseq(x, y) => Formula::not(Formula::Eq(Term::Var(*x), Term::Var(*y))),
            Literal::ConsEq(x, c, args) => Formula::Eq(Term::Var(*x), Term::ctor(*c, args)),
            Literal::SelEq(y, s, x) => {
                Formula::Eq(Term::Var(*y), Term::App(Func::Sel(*s), vec![Term::Var(*x)]))
            }
            Literal::Tester(true, c, x) => Formula::Is(*c, Term::Var(*x)),
            Literal::Tester(false, c, x) => Formula::not(Formula::Is(*c, Term::Var(*x))),
            Literal::FunEq(y, f, args) => Formula::Eq(
                Term::Var(*y),
                Term::App(
                    Func::Foreign(*f),
                    args.iter().copied().map(Term::Var).collect(),
                ),
            ),
        }
    }

    /// Recognizes a flat literal; both orientations of an application
    /// equality are accepted.
    pub fn from_formula(f: &Formula) -> Option<Literal> {
        match f {
            Formula::Not(inner) => match &**inner {
                Formula::Eq(Term::Var(x), Term::Var(y)) => Some(Literal::VarDiseq(*x, *y)),
                Formula::Is(c, Term::Var(x)) => Some(Literal::Tester(false, *c, *x)),
                _ => None,
            },
            Formula::Is(c, Term::Var(x)) => Some(Literal::Tester(true, *c, *x)),
            Formula::Eq(Term::Var(x), Term::Var(y)) => Some(Literal::VarEq(*x, *y)),
            Formula::Eq(Term::Var(x), Term::App(func, args))
            | Formula::Eq(Term::App(func, args), Term::Var(x)) => {
                let args: Option<Vec<Var>> = args.iter().map(Term::as_var).collect();
                let args = args?;
                match func {
                    Func::Ctor(c) => Some(Literal::ConsEq(*x, *c, args)),
                    Func::Sel(s) => (args.len() == 1).then(|| Literal::SelEq(*x, *s, args[0])),
                    Func::Foreign(g) => Some(Literal::FunEq(*x, *g, args)),
                }
            }
            _ => None,
        }
    }

    pub fn is_elem_only(&self, sig: &Signature) -> bool {
        self.vars().iter().all(|v| sig.is_elem(v.sort))
    }

    pub fn display<'a>(&'a self, sig: &'a Signature, ctx: &'a Context) -> Printer<'a, Literal> {
        Printer {
            item: self,
            sig,
            ctx,
        }
    }
}

/// A conjunction of flat literals.
pub type Cube = Vec<Literal>;

/// Variables of a cube in first-occurrence order.
pub fn cube_vars(cube: &[Literal]) -> Vec<Var> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for lit in cube {
        for v in lit.vars() {
            if seen.insert(v) {
                out.push(v);
            }
        }
    }
    out
}

/// Parses a formula that is a conjunction of flat literals.
pub fn cube_of_formula(f: &Formula) -> Option<Cube> {
    match f {
        Formula::True => Some(Vec::new()),
        Formula::And(parts) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(cube_of_formula(p)?);
            }
            Some(out)
        }
        other => Literal::from_formula(other).map(|l| vec![l]),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("sort mismatch: expected `{expected}`, found `{found}`")]
    SortMismatch { expected: String, found: String },
    #[error("`{func}` expects {expected} arguments, found {found}")]
    ArityMismatch {
        func: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
}

/// Rewrites `phi` into a formula whose atoms are flat literals.
///
/// Every nested application is named by a fresh variable, shared between
/// identical subterms; the naming equations are conjoined in front of the
/// rewritten body. Atoms that are already flat at their polarity are kept as
/// they are, so flat input comes back unchanged.
pub fn flatten(ctx: &mut Context, sig: &Signature, phi: &Formula) -> Result<Formula, FormulaError> {
    phi.check(sig, ctx)?;
    let mut namer = Namer::default();
    let body = namer.formula(ctx, sig, phi, true);
    if namer.defs.is_empty() {
        return Ok(body);
    }
    let mut parts: Vec<Formula> = namer.defs.iter().map(Literal::to_formula).collect();
    parts.push(body);
    Ok(Formula::And(parts))
}

#[derive(Default)]
struct Namer {
    names: HashMap<(Func, Vec<Var>), Var>,
    defs: Vec<Literal>,
}

impl Namer {
    fn formula(
        &mut self,
        ctx: &mut Context,
        sig: &Signature,
        f: &Formula,
        positive: bool,
    ) -> Formula {
        match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Not(inner) => Formula::not(self.formula(ctx, sig, inner, !positive)),
            Formula::And(fs) => Formula::And(
                fs.iter()
                    .map(|g| self.formula(ctx, sig, g, positive))
                    .collect(),
            ),
            Formula::Or(fs) => Formula::Or(
                fs.iter()
                    .map(|g| self.formula(ctx, sig, g, positive))
                    .collect(),
            ),
            Formula::Is(c, t) => Formula::Is(*c, Term::Var(self.name(ctx, sig, t))),
            Formula::Eq(a, b) => match (a, b) {
                (Term::Var(_), Term::Var(_)) => f.clone(),
                (Term::Var(x), Term::App(func, args)) if positive => {
                    let args = self.args(ctx, sig, args);
                    Formula::Eq(Term::Var(*x), Term::App(*func, args))
                }
                (Term::App(func, args), Term::Var(x)) if positive => {
                    let args = self.args(ctx, sig, args);
                    Formula::Eq(Term::App(*func, args), Term::Var(*x))
                }
                _ => {
                    let x = self.name(ctx, sig, a);
                    let y = self.name(ctx, sig, b);
                    Formula::Eq(Term::Var(x), Term::Var(y))
                }
            },
        }
    }

    fn args(&mut self, ctx: &mut Context, sig: &Signature, args: &[Term]) -> Vec<Term> {
        args.iter()
            .map(|t| Term::Var(self.name(ctx, sig, t)))
            .collect()
    }

    /// Variable standing for `t`; applications get a (shared) fresh name.
    fn name(&mut self, ctx: &mut Context, sig: &Signature, t: &Term) -> Var {
        match t {
            Term::Var(v) => *v,
            Term::App(func, args) => {
                let args: Vec<Var> = args.iter().map(|a| self.name(ctx, sig, a)).collect();
                let key = (*func, args);
                if let Some(v) = self.names.get(&key) {
                    return *v;
                }
                let w = ctx.fresh_var(func.result_sort(sig, ctx));
                let (func, args) = key.clone();
                self.defs.push(match func {
                    Func::Ctor(c) => Literal::ConsEq(w, c, args),
                    Func::Sel(s) => Literal::SelEq(w, s, args[0]),
                    Func::Foreign(g) => Literal::FunEq(w, g, args),
                });
                self.names.insert(key, w);
                w
            }
        }
    }
}

/// Negation normal form over flat literals, stored as an arena so the DNF
/// iterator can refer to nodes by index.
#[derive(Clone, Debug)]
enum Nnf {
    Lit(Literal),
    And(Vec<usize>),
    Or(Vec<usize>),
}

#[derive(Clone, Debug, Default)]
struct NnfArena {
    nodes: Vec<Nnf>,
}

impl NnfArena {
    fn push(&mut self, n: Nnf) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    /// Converts a flat formula; `Or([])` encodes false and `And([])` true.
    fn build(&mut self, f: &Formula, positive: bool) -> usize {
        match f {
            Formula::True if positive => self.push(Nnf::And(Vec::new())),
            Formula::True => self.push(Nnf::Or(Vec::new())),
            Formula::False if positive => self.push(Nnf::Or(Vec::new())),
            Formula::False => self.push(Nnf::And(Vec::new())),
            Formula::Not(inner) => self.build(inner, !positive),
            Formula::And(fs) | Formula::Or(fs) => {
                let kids = fs.iter().map(|g| self.build(g, positive)).collect();
                let conj = matches!(f, Formula::And(_)) == positive;
                self.push(if conj { Nnf::And(kids) } else { Nnf::Or(kids) })
            }
            atom => {
                let wrapped;
                let signed = if positive {
                    atom
                } else {
                    wrapped = Formula::not(atom.clone());
                    &wrapped
                };
                let lit = Literal::from_formula(signed)
                    .expect("flattened formulas only contain flat atoms");
                self.push(Nnf::Lit(lit))
            }
        }
    }
}

/// Lazily produced cubes of a flat DNF, in left-to-right order.
#[derive(Clone, Debug)]
pub struct FlatDnf {
    arena: NnfArena,
    stack: Vec<(Vec<Literal>, Vec<usize>)>,
}

impl Iterator for FlatDnf {
    type Item = Cube;

    fn next(&mut self) -> Option<Cube> {
        while let Some((mut acc, mut todo)) = self.stack.pop() {
            loop {
                let Some(node) = todo.pop() else {
                    return Some(acc);
                };
                match &self.arena.nodes[node] {
                    Nnf::Lit(l) => acc.push(l.clone()),
                    Nnf::And(kids) => todo.extend(kids.iter().rev()),
                    Nnf::Or(kids) => {
                        for k in kids.iter().rev() {
                            let mut branch = todo.clone();
                            branch.push(*k);
                            self.stack.push((acc.clone(), branch));
                        }
                        break;
                    }
                }
            }
        }
        None
    }
}

/// Flattens `phi` and returns an iterator over the cubes of its DNF.
pub fn to_flat_dnf(
    ctx: &mut Context,
    sig: &Signature,
    phi: &Formula,
) -> Result<FlatDnf, FormulaError> {
    let flat = flatten(ctx, sig, phi)?;
    Ok(dnf_of_flat(&flat))
}

/// DNF of a formula that is already flat.
pub fn dnf_of_flat(flat: &Formula) -> FlatDnf {
    let mut arena = NnfArena::default();
    let root = arena.build(flat, true);
    FlatDnf {
        arena,
        stack: vec![(Vec::new(), vec![root])],
    }
}

/// One equivalence relation per sort over a variable set, as blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arrangement {
    pub blocks: Vec<(SortId, Vec<Vec<Var>>)>,
}

impl Arrangement {
    /// `x = y` for related pairs and `x ≠ y` for the others, over all
    /// unordered pairs of same-sorted variables.
    pub fn literals(&self) -> Vec<Literal> {
        let mut out = Vec::new();
        for (_, blocks) in &self.blocks {
            let mut members: Vec<(Var, usize)> = blocks
                .iter()
                .enumerate()
                .flat_map(|(b, vs)| vs.iter().map(move |v| (*v, b)))
                .collect();
            members.sort();
            for (i, (x, bx)) in members.iter().enumerate() {
                for (y, by) in &members[i + 1..] {
                    out.push(if bx == by {
                        Literal::VarEq(*x, *y)
                    } else {
                        Literal::VarDiseq(*x, *y)
                    });
                }
            }
        }
        out
    }

    pub fn related(&self, x: Var, y: Var) -> bool {
        x == y
            || self
                .blocks
                .iter()
                .any(|(_, blocks)| blocks.iter().any(|b| b.contains(&x) && b.contains(&y)))
    }
}

/// All arrangements of `vars`: restricted-growth strings per sort, sorts in
/// declaration order with the first sort varying slowest.
pub fn enumerate_arrangements(vars: &[Var]) -> Arrangements {
    let mut by_sort: BTreeMap<SortId, Vec<Var>> = BTreeMap::new();
    for v in vars {
        let group = by_sort.entry(v.sort).or_default();
        if !group.contains(v) {
            group.push(*v);
        }
    }
    let groups: Vec<(SortId, Vec<Var>)> = by_sort.into_iter().collect();
    let rgs = groups
        .iter()
        .map(|(_, vs)| vec![0usize; vs.len()])
        .collect();
    Arrangements {
        groups,
        rgs,
        done: false,
    }
}

#[derive(Clone, Debug)]
pub struct Arrangements {
    groups: Vec<(SortId, Vec<Var>)>,
    rgs: Vec<Vec<usize>>,
    done: bool,
}

/// Advances a restricted-growth string in place; false after the last one.
pub(crate) fn next_rgs(a: &mut [usize]) -> bool {
    for i in (1..a.len()).rev() {
        let prefix_max = a[..i].iter().copied().max().unwrap_or(0);
        if a[i] <= prefix_max {
            a[i] += 1;
            a[i + 1..].iter_mut().for_each(|x| *x = 0);
            return true;
        }
    }
    false
}

impl Iterator for Arrangements {
    type Item = Arrangement;

    fn next(&mut self) -> Option<Arrangement> {
        if self.done {
            return None;
        }
        let blocks = self
            .groups
            .iter()
            .zip(&self.rgs)
            .map(|((sort, vars), rgs)| {
                let n = rgs.iter().copied().max().map_or(0, |m| m + 1);
                let mut blocks = vec![Vec::new(); n];
                for (v, b) in vars.iter().zip(rgs) {
                    blocks[*b].push(*v);
                }
                (*sort, blocks)
            })
            .collect();
        self.done = true;
        for rgs in self.rgs.iter_mut().rev() {
            if next_rgs(rgs) {
                self.done = false;
                break;
            }
            rgs.iter_mut().for_each(|x| *x = 0);
        }
        Some(Arrangement { blocks })
    }
}

/// How selectors behave on trees not rooted by their constructor when the
/// table has no entry.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SelectorMode {
    /// Missing entries are an evaluation error.
    #[default]
    Strict,
    /// Missing entries evaluate to the least tree (or least element) of the
    /// selector's result sort.
    Default,
}

/// A datatypes interpretation: explicit finite element domains, values for
/// variables, and the off-constructor selector (and foreign function) tables.
/// Structure domains are implicit: every sort-correct tree over the element
/// domains.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interpretation {
    pub domain: ElemDomain,
    pub values: BTreeMap<Var, Tree>,
    pub selector_table: BTreeMap<(SelectorId, Tree), Tree>,
    pub foreign_table: BTreeMap<(ForeignId, Vec<Tree>), Tree>,
    pub mode: SelectorMode,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no value for variable #{}", .0.id)]
    MissingAssignment(Var),
    #[error("no selector table entry for selector {:?}", .0)]
    MissingSelectorEntry(SelectorId),
    #[error("no table entry for foreign function #{}", .0.index())]
    MissingForeignEntry(ForeignId),
}

impl Interpretation {
    pub fn new(domain: ElemDomain) -> Self {
        Interpretation {
            domain,
            ..Default::default()
        }
    }

    pub fn value(&self, v: Var) -> Result<&Tree, EvalError> {
        self.values.get(&v).ok_or(EvalError::MissingAssignment(v))
    }

    pub fn apply_selector(
        &self,
        sig: &Signature,
        s: SelectorId,
        arg: &Tree,
    ) -> Result<Tree, EvalError> {
        if let Tree::Node(c, children) = arg {
            if *c == s.ctor {
                return Ok(children[s.index].clone());
            }
        }
        if let Some(v) = self.selector_table.get(&(s, arg.clone())) {
            return Ok(v.clone());
        }
        match self.mode {
            SelectorMode::Strict => Err(EvalError::MissingSelectorEntry(s)),
            SelectorMode::Default => Ok(sig.least_tree(sig.selector(s).sort, &self.domain)),
        }
    }

    pub fn apply_foreign(
        &self,
        ctx: &Context,
        f: ForeignId,
        args: Vec<Tree>,
    ) -> Result<Tree, EvalError> {
        if let Some(v) = self.foreign_table.get(&(f, args)) {
            return Ok(v.clone());
        }
        match self.mode {
            SelectorMode::Strict => Err(EvalError::MissingForeignEntry(f)),
            SelectorMode::Default => Ok(Tree::Elem(self.domain.least(ctx.foreign(f).result))),
        }
    }

    pub fn eval_term(&self, sig: &Signature, ctx: &Context, t: &Term) -> Result<Tree, EvalError> {
        match t {
            Term::Var(v) => self.value(*v).cloned(),
            Term::App(f, args) => {
                let args = args
                    .iter()
                    .map(|a| self.eval_term(sig, ctx, a))
                    .collect::<Result<Vec<_>, _>>()?;
                match f {
                    Func::Ctor(c) => Ok(Tree::Node(*c, args)),
                    Func::Sel(s) => self.apply_selector(sig, *s, &args[0]),
                    Func::Foreign(g) => self.apply_foreign(ctx, *g, args),
                }
            }
        }
    }

    pub fn eval_literal(
        &self,
        sig: &Signature,
        ctx: &Context,
        lit: &Literal,
    ) -> Result<bool, EvalError> {
        Ok(match lit {
            Literal::VarEq(x, y) => self.value(*x)? == self.value(*y)?,
            Literal::VarDiseq(x, y) => self.value(*x)? != self.value(*y)?,
            Literal::ConsEq(x, c, args) => {
                let v = self.value(*x)?;
                match v {
                    Tree::Node(d, children) if d == c && children.len() == args.len() => {
                        for (child, a) in children.iter().zip(args) {
                            if child != self.value(*a)? {
                                return Ok(false);
                            }
                        }
                        true
                    }
                    _ => {
                        args.iter().try_for_each(|a| self.value(*a).map(|_| ()))?;
                        false
                    }
                }
            }
            Literal::SelEq(y, s, x) => {
                let yv = self.value(*y)?;
                *yv == self.apply_selector(sig, *s, self.value(*x)?)?
            }
            Literal::Tester(pol, c, x) => (self.value(*x)?.root() == Some(*c)) == *pol,
            Literal::FunEq(y, f, args) => {
                let yv = self.value(*y)?.clone();
                let args = args
                    .iter()
                    .map(|a| self.value(*a).cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                yv == self.apply_foreign(ctx, *f, args)?
            }
        })
    }

    pub fn eval_cube(
        &self,
        sig: &Signature,
        ctx: &Context,
        cube: &[Literal],
    ) -> Result<bool, EvalError> {
        for lit in cube {
            if !self.eval_literal(sig, ctx, lit)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Every variable value is sort-correct and built from domain elements.
    pub fn is_well_formed(&self, sig: &Signature) -> bool {
        self.values.iter().all(|(v, t)| {
            let mut inside = true;
            t.for_each_elem(&mut |e: ElemValue| inside &= self.domain.contains(e));
            inside && t.sort(sig) == v.sort && t.is_sort_correct(sig)
        })
    }

    /// Element values assigned to variables of `sort`.
    pub fn elem_values_of(&self, vars: &[Var], sort: SortId) -> BTreeSet<ElemValue> {
        vars.iter()
            .filter(|v| v.sort == sort)
            .filter_map(|v| match self.values.get(v) {
                Some(Tree::Elem(e)) => Some(*e),
                _ => None,
            })
            .collect()
    }
}

/// Standard satisfaction of `phi` under `interp`.
pub fn eval_formula(
    interp: &Interpretation,
    sig: &Signature,
    ctx: &Context,
    phi: &Formula,
) -> Result<bool, EvalError> {
    Ok(match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::Eq(a, b) => interp.eval_term(sig, ctx, a)? == interp.eval_term(sig, ctx, b)?,
        Formula::Is(c, t) => interp.eval_term(sig, ctx, t)?.root() == Some(*c),
        Formula::Not(f) => !eval_formula(interp, sig, ctx, f)?,
        Formula::And(fs) => {
            for f in fs {
                if !eval_formula(interp, sig, ctx, f)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(fs) => {
            for f in fs {
                if eval_formula(interp, sig, ctx, f)? {
                    return Ok(true);
                }
            }
            false
        }
    })
}

/// SMT-LIB rendering of terms, literals and formulas.
pub struct Printer<'a, T> {
    item: &'a T,
    sig: &'a Signature,
    ctx: &'a Context,
}

fn write_app(
    f: &mut fmt::Formatter<'_>,
    name: &str,
    args: impl IntoIterator<Item = impl fmt::Display>,
) -> fmt::Result {
    let mut args = args.into_iter().peekable();
    if args.peek().is_none() {
        return write!(f, "{name}");
    }
    write!(f, "({name}")?;
    for a in args {
        write!(f, " {a}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Printer<'_, Term> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.item {
            Term::Var(v) => write!(f, "{}", self.ctx.var_name(*v)),
            Term::App(func, args) => write_app(
                f,
                func.name(self.sig, self.ctx),
                args.iter().map(|a| a.display(self.sig, self.ctx)),
            ),
        }
    }
}

impl fmt::Display for Printer<'_, Literal> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.item.to_formula().display(self.sig, self.ctx))
    }
}

impl fmt::Display for Printer<'_, Formula> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (sig, ctx) = (self.sig, self.ctx);
        match self.item {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Eq(a, b) => write!(f, "(= {} {})", a.display(sig, ctx), b.display(sig, ctx)),
            Formula::Is(c, t) => {
                write!(f, "((_ is {}) {})", sig.ctor_name(*c), t.display(sig, ctx))
            }
            Formula::Not(g) => write!(f, "(not {})", g.display(sig, ctx)),
            Formula::And(fs) if fs.is_empty() => write!(f, "true"),
            Formula::Or(fs) if fs.is_empty() => write!(f, "false"),
            Formula::And(fs) => write_app(f, "and", fs.iter().map(|g| g.display(sig, ctx))),
            Formula::Or(fs) => write_app(f, "or", fs.iter().map(|g| g.display(sig, ctx))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    struct ListEnv {
        sig: Signature,
        ctx: Context,
        nil: CtorId,
        cons: CtorId,
        car: SelectorId,
        cdr: SelectorId,
    }

    fn list_env() -> ListEnv {
        let sig = fixtures::list_signature();
        let nil = sig.lookup_ctor("nil").unwrap();
        let cons = sig.lookup_ctor("cons").unwrap();
        ListEnv {
            ctx: Context::new(),
            nil,
            cons,
            car: SelectorId {
                ctor: cons,
                index: 0,
            },
            cdr: SelectorId {
                ctor: cons,
                index: 1,
            },
            sig,
        }
    }

    fn v(t: Var) -> Term {
        Term::Var(t)
    }

    #[test]
    fn flatten_names_nested_subterms_once() {
        let pair = fixtures::pair_signature();
        let mut ctx = Context::new();
        let p = pair.lookup_sort("pair").unwrap();
        let y = ctx.declare_var("y", p).unwrap();
        let y2 = ctx.declare_var("y'", p).unwrap();
        let first = SelectorId {
            ctor: pair.lookup_ctor("pair").unwrap(),
            index: 0,
        };
        let fy = Term::app(Func::Sel(first), vec![v(y)]);
        let fy2 = Term::app(Func::Sel(first), vec![v(y2)]);
        let phi = Formula::not(Formula::eq(fy.clone(), fy2));
        let out = flatten(&mut ctx, &pair, &phi).unwrap();
        let cube: Vec<Cube> = dnf_of_flat(&out).collect();
        assert_eq!(cube.len(), 1);
        let x = ctx.lookup_var("_k!0").unwrap();
        let x2 = ctx.lookup_var("_k!1").unwrap();
        assert_eq!(
            cube[0],
            vec![
                Literal::SelEq(x, first, y),
                Literal::SelEq(x2, first, y2),
                Literal::VarDiseq(x, x2)
            ]
        );

        // Shared subterms get one name.
        let twice = Formula::and(vec![
            Formula::Is(first.ctor, Term::Var(y)),
            Formula::not(Formula::eq(fy.clone(), fy)),
        ]);
        let before = ctx.num_vars();
        flatten(&mut ctx, &pair, &twice).unwrap();
        assert_eq!(ctx.num_vars(), before + 1);
    }

    #[test]
    fn flatten_is_identity_on_flat_input() {
        let mut env = list_env();
        let elem = env.sig.lookup_sort("elem").unwrap();
        let list = env.sig.lookup_sort("list").unwrap();
        let x = env.ctx.declare_var("x", list).unwrap();
        let y = env.ctx.declare_var("y", list).unwrap();
        let e = env.ctx.declare_var("e", elem).unwrap();
        let phi = Formula::cube(&[
            Literal::ConsEq(x, env.cons, vec![e, y]),
            Literal::SelEq(y, env.cdr, x),
            Literal::Tester(false, env.nil, y),
            Literal::VarDiseq(x, y),
        ]);
        assert!(phi.is_flat());
        let before = env.ctx.num_vars();
        assert_eq!(flatten(&mut env.ctx, &env.sig, &phi).unwrap(), phi);
        assert_eq!(env.ctx.num_vars(), before);
    }

    #[test]
    fn flatten_nested_constructor() {
        let mut env = list_env();
        let elem = env.sig.lookup_sort("elem").unwrap();
        let list = env.sig.lookup_sort("list").unwrap();
        let x = env.ctx.declare_var("x", list).unwrap();
        let e = env.ctx.declare_var("e", elem).unwrap();
        let nil = Term::app(Func::Ctor(env.nil), vec![]);
        let phi = Formula::eq(Term::app(Func::Ctor(env.cons), vec![v(e), nil]), v(x));
        let out = flatten(&mut env.ctx, &env.sig, &phi).unwrap();
        let w = env.ctx.lookup_var("_k!0").unwrap();
        let cubes: Vec<Cube> = dnf_of_flat(&out).collect();
        assert_eq!(
            cubes,
            vec![vec![
                Literal::ConsEq(w, env.nil, vec![]),
                Literal::ConsEq(x, env.cons, vec![e, w])
            ]]
        );
    }

    #[test]
    fn flatten_rejects_ill_sorted_terms() {
        let mut env = list_env();
        let elem = env.sig.lookup_sort("elem").unwrap();
        let list = env.sig.lookup_sort("list").unwrap();
        let x = env.ctx.declare_var("x", list).unwrap();
        let e = env.ctx.declare_var("e", elem).unwrap();
        let phi = Formula::eq(v(x), v(e));
        assert!(matches!(
            flatten(&mut env.ctx, &env.sig, &phi),
            Err(FormulaError::SortMismatch { .. })
        ));
        let bad = Formula::eq(v(x), Term::app(Func::Ctor(env.cons), vec![v(e)]));
        assert!(matches!(
            flatten(&mut env.ctx, &env.sig, &bad),
            Err(FormulaError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn dnf_distributes_and_pushes_negation() {
        let mut env = list_env();
        let list = env.sig.lookup_sort("list").unwrap();
        let x = env.ctx.declare_var("x", list).unwrap();
        let y = env.ctx.declare_var("y", list).unwrap();
        let z = env.ctx.declare_var("z", list).unwrap();
        let a = Literal::VarEq(x, y);
        let b = Literal::Tester(true, env.cons, z);
        let c = Literal::VarDiseq(y, z);

        let single: Vec<Cube> = to_flat_dnf(&mut env.ctx, &env.sig, &a.to_formula())
            .unwrap()
            .collect();
        assert_eq!(single, vec![vec![a.clone()]]);

        let phi = Formula::and(vec![
            Formula::or(vec![a.to_formula(), b.to_formula()]),
            c.to_formula(),
        ]);
        let cubes: Vec<Cube> = to_flat_dnf(&mut env.ctx, &env.sig, &phi).unwrap().collect();
        assert_eq!(cubes, vec![vec![a.clone(), c.clone()], vec![b.clone(), c]]);

        let neg = Formula::not(Formula::and(vec![a.to_formula(), b.to_formula()]));
        let cubes: Vec<Cube> = to_flat_dnf(&mut env.ctx, &env.sig, &neg).unwrap().collect();
        assert_eq!(
            cubes,
            vec![
                vec![Literal::VarDiseq(x, y)],
                vec![Literal::Tester(false, env.cons, z)]
            ]
        );

        let none: Vec<Cube> = to_flat_dnf(&mut env.ctx, &env.sig, &Formula::False)
            .unwrap()
            .collect();
        assert!(none.is_empty());
        let one: Vec<Cube> = to_flat_dnf(&mut env.ctx, &env.sig, &Formula::not(Formula::False))
            .unwrap()
            .collect();
        assert_eq!(one, vec![vec![]]);
    }

    /// Set partitions of `0..n` by brute force over all block-label maps.
    fn brute_partitions(n: usize) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        let total = n.max(1).pow(n as u32);
        for code in 0..total.max(1) {
            let mut labels = Vec::new();
            let mut c = code;
            for _ in 0..n {
                labels.push(c % n.max(1));
                c /= n.max(1);
            }
            // Canonical relabelling by first occurrence.
            let mut map = BTreeMap::new();
            let canon: Vec<usize> = labels
                .iter()
                .map(|l| {
                    let next = map.len();
                    *map.entry(*l).or_insert(next)
                })
                .collect();
            out.insert(canon);
        }
        out
    }

    #[test]
    fn arrangement_counts_match_brute_force_partitions() {
        let sig = fixtures::lp_signature();
        let elem = sig.lookup_sort("elem").unwrap();
        let list = sig.lookup_sort("list").unwrap();
        let mut ctx = Context::new();
        for n in 0..=5 {
            let vars: Vec<Var> = (0..n).map(|_| ctx.fresh_var(elem)).collect();
            let all: Vec<Arrangement> = enumerate_arrangements(&vars).collect();
            assert_eq!(all.len(), brute_partitions(n).len().max(1));
            for (i, a) in all.iter().enumerate() {
                for b in &all[i + 1..] {
                    assert_ne!(a, b);
                }
            }
        }
        let x = ctx.fresh_var(elem);
        let y = ctx.fresh_var(list);
        let arrs: Vec<Arrangement> = enumerate_arrangements(&[x, y]).collect();
        assert_eq!(arrs.len(), 1);
        assert!(arrs[0].literals().is_empty());

        let a = ctx.fresh_var(elem);
        let b = ctx.fresh_var(elem);
        let arrs: Vec<Vec<Literal>> = enumerate_arrangements(&[a, b])
            .map(|r| r.literals())
            .collect();
        assert_eq!(
            arrs,
            vec![vec![Literal::VarEq(a, b)], vec![Literal::VarDiseq(a, b)]]
        );
    }

    #[test]
    fn arrangements_multiply_across_sorts() {
        let sig = fixtures::lp_signature();
        let elem = sig.lookup_sort("elem").unwrap();
        let list = sig.lookup_sort("list").unwrap();
        let mut ctx = Context::new();
        let mut vars: Vec<Var> = (0..3).map(|_| ctx.fresh_var(elem)).collect();
        vars.extend((0..2).map(|_| ctx.fresh_var(list)));
        let all: Vec<Arrangement> = enumerate_arrangements(&vars).collect();
        assert_eq!(all.len(), 5 * 2);
        for a in &all {
            for lit in a.literals() {
                let vs = lit.vars();
                assert_eq!(vs[0].sort, vs[1].sort);
            }
            assert_eq!(a.literals().len(), 3 + 1);
        }
    }

    #[test]
    fn evaluation_follows_datatype_semantics() {
        let mut env = list_env();
        let elem = env.sig.lookup_sort("elem").unwrap();
        let list = env.sig.lookup_sort("list").unwrap();
        let x = env.ctx.declare_var("x", list).unwrap();
        let y = env.ctx.declare_var("y", elem).unwrap();
        let mut interp = Interpretation::new(ElemDomain::canonical(&env.sig));
        interp.values.insert(x, Tree::leaf(env.nil));
        interp.values.insert(y, Tree::elem(elem, 0));
        let (sig, ctx) = (&env.sig, &env.ctx);

        assert!(eval_formula(&interp, sig, ctx, &Literal::VarEq(x, x).to_formula()).unwrap());
        assert!(!eval_formula(
            &interp,
            sig,
            ctx,
            &Literal::Tester(true, env.cons, x).to_formula()
        )
        .unwrap());

        let sel = Literal::SelEq(y, env.car, x).to_formula();
        assert_eq!(
            eval_formula(&interp, sig, ctx, &sel),
            Err(EvalError::MissingSelectorEntry(env.car))
        );
        interp
            .selector_table
            .insert((env.car, Tree::leaf(env.nil)), Tree::elem(elem, 0));
        assert!(eval_formula(&interp, sig, ctx, &sel).unwrap());

        let unknown = ctx.clone().fresh_var(list);
        assert_eq!(
            eval_formula(&interp, sig, ctx, &Literal::VarEq(x, unknown).to_formula()),
            Err(EvalError::MissingAssignment(unknown))
        );
    }

    #[test]
    fn datatype_axioms_hold_on_concrete_trees() {
        let env = list_env();
        let sig = &env.sig;
        let elem = sig.lookup_sort("elem").unwrap();
        let list = sig.lookup_sort("list").unwrap();
        let dom = ElemDomain::uniform(sig, 2);
        let trees = crate::sig::enumerate_trees(sig, list, 3, &dom);
        let elems = crate::sig::enumerate_trees(sig, elem, 0, &dom);
        let mut ctx = Context::new();
        let (x, y) = (ctx.fresh_var(list), ctx.fresh_var(list));
        let (e1, e2) = (ctx.fresh_var(elem), ctx.fresh_var(elem));
        let cons = |a: Var, b: Var| Term::app(Func::Ctor(env.cons), vec![v(a), v(b)]);
        let nil = Term::app(Func::Ctor(env.nil), vec![]);
        // Inj, Dis, Proj, Is1, Is2 over all small instantiations.
        let axioms = [
            Formula::or(vec![
                Formula::not(Formula::eq(cons(e1, x), cons(e2, y))),
                Formula::and(vec![Formula::eq(v(e1), v(e2)), Formula::eq(v(x), v(y))]),
            ]),
            Formula::not(Formula::eq(cons(e1, x), nil.clone())),
            Formula::eq(Term::app(Func::Sel(env.car), vec![cons(e1, x)]), v(e1)),
            Formula::eq(Term::app(Func::Sel(env.cdr), vec![cons(e1, x)]), v(x)),
            Formula::Is(env.cons, cons(e1, x)),
            Formula::not(Formula::Is(env.nil, cons(e1, x))),
            Formula::Is(env.nil, nil),
        ];
        for tx in &trees {
            for ty in &trees {
                for a in &elems {
                    for b in &elems {
                        let mut interp = Interpretation::new(dom.clone());
                        interp.mode = SelectorMode::Default;
                        interp.values.insert(x, tx.clone());
                        interp.values.insert(y, ty.clone());
                        interp.values.insert(e1, a.clone());
                        interp.values.insert(e2, b.clone());
                        for ax in &axioms {
                            assert!(eval_formula(&interp, sig, &ctx, ax).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn printing_uses_smtlib_syntax() {
        let mut env = list_env();
        let elem = env.sig.lookup_sort("elem").unwrap();
        let list = env.sig.lookup_sort("list").unwrap();
        let x = env.ctx.declare_var("x", list).unwrap();
        let y = env.ctx.declare_var("y", list).unwrap();
        let e = env.ctx.declare_var("e", elem).unwrap();
        let show = |l: Literal| l.display(&env.sig, &env.ctx).to_string();
        assert_eq!(
            show(Literal::ConsEq(x, env.cons, vec![e, y])),
            "(= x (cons e y))"
        );
        assert_eq!(show(Literal::ConsEq(x, env.nil, vec![])), "(= x nil)");
        assert_eq!(show(Literal::SelEq(y, env.cdr, x)), "(= y (cdr x))");
        assert_eq!(
            show(Literal::Tester(false, env.cons, x)),
            "(not ((_ is cons) x))"
        );
        assert_eq!(show(Literal::VarDiseq(x, y)), "(not (= x y))");
    }
}
