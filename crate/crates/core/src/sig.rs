//! Datatypes signatures, ground trees and the sort classifications built on
//! top of them.
//!
//! A signature partitions its sorts into element sorts (uninterpreted, shared
//! with other theories) and structure sorts (generated by constructors). Every
//! constructor argument carries a selector, and every constructor has a tester.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SortId(pub(crate) u32);

impl SortId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CtorId(pub(crate) u32);

impl CtorId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The `index`-th selector (0-based) of constructor `ctor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectorId {
    pub ctor: CtorId,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SortKind {
    Elem,
    Struct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Finiteness {
    Finite,
    Inductive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortDecl {
    pub name: String,
    pub kind: SortKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    /// Selector name.
    pub name: String,
    pub sort: SortId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructorDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub result: SortId,
}

impl ConstructorDecl {
    pub fn arity(&self) -> usize {
        self.fields.len()
    }

    pub fn is_nullary(&self) -> bool {
        self.fields.is_empty()
    }
}

/// A function symbol of a datatypes signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FuncRef {
    Ctor(CtorId),
    Selector(SelectorId),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("constructor `{ctor}` must build a structure sort, not `{sort}`")]
    ElemResult { ctor: String, sort: String },
    #[error("sort `{0}` is not well-founded")]
    NotWellFounded(String),
    #[error("structure sort `{0}` has no constructors")]
    EmptyConstructorSet(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawConstructor {
    pub name: String,
    pub result: String,
    pub fields: Vec<(String, String)>,
}

/// An unvalidated signature, in declaration order and with names unresolved.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawSignature {
    pub sorts: Vec<(String, SortKind)>,
    pub constructors: Vec<RawConstructor>,
}

impl RawSignature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn elem(mut self, name: &str) -> Self {
        self.sorts.push((name.to_owned(), SortKind::Elem));
        self
    }

    pub fn structure(mut self, name: &str) -> Self {
        self.sorts.push((name.to_owned(), SortKind::Struct));
        self
    }

    pub fn ctor(mut self, name: &str, result: &str, fields: &[(&str, &str)]) -> Self {
        self.constructors.push(RawConstructor {
            name: name.to_owned(),
            result: result.to_owned(),
            fields: fields
                .iter()
                .map(|(s, t)| ((*s).to_owned(), (*t).to_owned()))
                .collect(),
        });
        self
    }

    pub fn validate(&self) -> Result<Signature, SignatureError> {
        validate_signature(self)
    }
}

/// A validated datatypes signature. Immutable; ids are indices in declaration
/// order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    sorts: Vec<SortDecl>,
    ctors: Vec<ConstructorDecl>,
    ctors_of: Vec<Vec<CtorId>>,
    finiteness: Vec<Option<Finiteness>>,
    min_depth: Vec<usize>,
    sort_names: HashMap<String, SortId>,
    func_names: HashMap<String, FuncRef>,
}

pub fn validate_signature(raw: &RawSignature) -> Result<Signature, SignatureError> {
    let mut sort_names = HashMap::new();
    let mut sorts = Vec::new();
    for (name, kind) in &raw.sorts {
        let id = SortId(sorts.len() as u32);
        if sort_names.insert(name.clone(), id).is_some() {
            return Err(SignatureError::DuplicateName(name.clone()));
        }
        sorts.push(SortDecl {
            name: name.clone(),
            kind: *kind,
        });
    }
    let resolve = |name: &str| {
        sort_names
            .get(name)
            .copied()
            .ok_or_else(|| SignatureError::UnknownSort(name.to_owned()))
    };

    let mut func_names = HashMap::new();
    let mut ctors = Vec::new();
    let mut ctors_of = vec![Vec::new(); sorts.len()];
    for raw_ctor in &raw.constructors {
        let id = CtorId(ctors.len() as u32);
        let result = resolve(&raw_ctor.result)?;
        if sorts[result.index()].kind == SortKind::Elem {
            return Err(SignatureError::ElemResult {
                ctor: raw_ctor.name.clone(),
                sort: raw_ctor.result.clone(),
            });
        }
        if func_names
            .insert(raw_ctor.name.clone(), FuncRef::Ctor(id))
            .is_some()
        {
            return Err(SignatureError::DuplicateName(raw_ctor.name.clone()));
        }
        let mut fields = Vec::new();
        for (index, (sel, sort)) in raw_ctor.fields.iter().enumerate() {
            let sort = resolve(sort)?;
            let selector = FuncRef::Selector(SelectorId { ctor: id, index });
            if func_names.insert(sel.clone(), selector).is_some() {
                return Err(SignatureError::DuplicateName(sel.clone()));
            }
            fields.push(FieldDecl {
                name: sel.clone(),
                sort,
            });
        }
        ctors_of[result.index()].push(id);
        ctors.push(ConstructorDecl {
            name: raw_ctor.name.clone(),
            fields,
            result,
        });
    }

    for (i, decl) in sorts.iter().enumerate() {
        if decl.kind == SortKind::Struct && ctors_of[i].is_empty() {
            return Err(SignatureError::EmptyConstructorSet(decl.name.clone()));
        }
    }

    let min_depth = inhabited_depths(&sorts, &ctors, &ctors_of);
    if let Some(i) = min_depth.iter().position(|d| *d == usize::MAX) {
        return Err(SignatureError::NotWellFounded(sorts[i].name.clone()));
    }

    let mut sig = Signature {
        sorts,
        ctors,
        ctors_of,
        finiteness: Vec::new(),
        min_depth,
        sort_names,
        func_names,
    };
    let classes = classify_sorts(&sig);
    sig.finiteness = (0..sig.sorts.len())
        .map(|i| classes.get(&SortId(i as u32)).copied())
        .collect();
    Ok(sig)
}

/// Least fixpoint of "inhabited": element sorts are inhabited at depth 0, and a
/// structure sort becomes inhabited once one of its constructors has all
/// argument sorts inhabited. Returns the minimal ground-tree depth per sort,
/// `usize::MAX` for uninhabited sorts.
fn inhabited_depths(
    sorts: &[SortDecl],
    ctors: &[ConstructorDecl],
    ctors_of: &[Vec<CtorId>],
) -> Vec<usize> {
    let mut depth: Vec<usize> = sorts
        .iter()
        .map(|s| match s.kind {
            SortKind::Elem => 0,
            SortKind::Struct => usize::MAX,
        })
        .collect();
    loop {
        let mut changed = false;
        for (i, owned) in ctors_of.iter().enumerate() {
            for c in owned {
                let decl = &ctors[c.index()];
                let args: Option<usize> = decl
                    .fields
                    .iter()
                    .map(|f| depth[f.sort.index()])
                    .try_fold(0usize, |acc, d| (d != usize::MAX).then(|| acc.max(d)));
                if let Some(m) = args {
                    let candidate = if decl.is_nullary() { 1 } else { m + 1 };
                    if candidate < depth[i] {
                        depth[i] = candidate;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return depth;
        }
    }
}

/// Classifies every structure sort as finite or inductive.
///
/// Least fixpoint: a sort is finite once every constructor of it has only
/// element-sorted or already-finite arguments. Whatever never enters the
/// fixpoint reaches itself through constructor arguments and is inductive.
pub fn classify_sorts(sig: &Signature) -> BTreeMap<SortId, Finiteness> {
    let mut finite: BTreeSet<SortId> = BTreeSet::new();
    loop {
        let mut changed = false;
        for sort in sig.struct_sorts() {
            if finite.contains(&sort) {
                continue;
            }
            let all_finite = sig.ctors_of(sort).iter().all(|c| {
                sig.ctor(*c)
                    .fields
                    .iter()
                    .all(|f| sig.is_elem(f.sort) || finite.contains(&f.sort))
            });
            if all_finite {
                finite.insert(sort);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    sig.struct_sorts()
        .map(|s| {
            let class = if finite.contains(&s) {
                Finiteness::Finite
            } else {
                Finiteness::Inductive
            };
            (s, class)
        })
        .collect()
}

impl Signature {
    pub fn sorts(&self) -> impl Iterator<Item = SortId> + '_ {
        (0..self.sorts.len()).map(|i| SortId(i as u32))
    }

    pub fn elem_sorts(&self) -> impl Iterator<Item = SortId> + '_ {
        self.sorts().filter(|s| self.is_elem(*s))
    }

    pub fn struct_sorts(&self) -> impl Iterator<Item = SortId> + '_ {
        self.sorts().filter(|s| !self.is_elem(*s))
    }

    pub fn sort(&self, id: SortId) -> &SortDecl {
        &self.sorts[id.index()]
    }

    pub fn sort_name(&self, id: SortId) -> &str {
        &self.sorts[id.index()].name
    }

    pub fn is_elem(&self, id: SortId) -> bool {
        self.sorts[id.index()].kind == SortKind::Elem
    }

    pub fn finiteness(&self, id: SortId) -> Option<Finiteness> {
        self.finiteness.get(id.index()).copied().flatten()
    }

    pub fn is_finite(&self, id: SortId) -> bool {
        self.finiteness(id) == Some(Finiteness::Finite)
    }

    pub fn is_inductive(&self, id: SortId) -> bool {
        self.finiteness(id) == Some(Finiteness::Inductive)
    }

    pub fn has_finite_sorts(&self) -> bool {
        self.struct_sorts().any(|s| self.is_finite(s))
    }

    pub fn has_inductive_sorts(&self) -> bool {
        self.struct_sorts().any(|s| self.is_inductive(s))
    }

    pub fn ctors(&self) -> impl Iterator<Item = CtorId> + '_ {
        (0..self.ctors.len()).map(|i| CtorId(i as u32))
    }

    pub fn ctor(&self, id: CtorId) -> &ConstructorDecl {
        &self.ctors[id.index()]
    }

    pub fn ctor_name(&self, id: CtorId) -> &str {
        &self.ctors[id.index()].name
    }

    pub fn ctors_of(&self, sort: SortId) -> &[CtorId] {
        &self.ctors_of[sort.index()]
    }

    pub fn selector(&self, id: SelectorId) -> &FieldDecl {
        &self.ctors[id.ctor.index()].fields[id.index]
    }

    pub fn selector_name(&self, id: SelectorId) -> &str {
        &self.selector(id).name
    }

    /// Sort of the argument of a selector (the constructor's result sort).
    pub fn selector_domain(&self, id: SelectorId) -> SortId {
        self.ctor(id.ctor).result
    }

    pub fn selectors(&self) -> impl Iterator<Item = SelectorId> + '_ {
        self.ctors().flat_map(move |c| {
            (0..self.ctor(c).arity()).map(move |index| SelectorId { ctor: c, index })
        })
    }

    pub fn lookup_sort(&self, name: &str) -> Option<SortId> {
        self.sort_names.get(name).copied()
    }

    pub fn lookup_func(&self, name: &str) -> Option<FuncRef> {
        self.func_names.get(name).copied()
    }

    pub fn lookup_ctor(&self, name: &str) -> Option<CtorId> {
        match self.lookup_func(name) {
            Some(FuncRef::Ctor(c)) => Some(c),
            _ => None,
        }
    }

    /// Depth of the shallowest ground tree of `sort`.
    pub fn min_depth(&self, sort: SortId) -> usize {
        self.min_depth[sort.index()]
    }

    /// Minimal-depth ground tree of `sort` over `dom`, choosing constructors
    /// in declaration order and the least element value of each element sort.
    pub fn least_tree(&self, sort: SortId, dom: &ElemDomain) -> Tree {
        if self.is_elem(sort) {
            return Tree::Elem(dom.least(sort));
        }
        let target = self.min_depth(sort);
        let ctor = self
            .ctors_of(sort)
            .iter()
            .copied()
            .find(|c| {
                let decl = self.ctor(*c);
                let d = decl
                    .fields
                    .iter()
                    .map(|f| self.min_depth(f.sort))
                    .max()
                    .map_or(1, |m| m + 1);
                d == target
            })
            .expect("validated signature has a minimal constructor");
        let children = self
            .ctor(ctor)
            .fields
            .iter()
            .map(|f| self.least_tree(f.sort, dom))
            .collect();
        Tree::Node(ctor, children)
    }

    /// A ground tree of `sort` whose depth is the smallest achievable depth
    /// that is at least `at_least`. The tree is a spine: one argument carries
    /// the depth, all other arguments are least trees.
    ///
    /// Returns `None` when no such depth exists (finite sorts with
    /// `at_least` above their maximal depth).
    pub fn tree_of_depth_at_least(
        &self,
        sort: SortId,
        at_least: usize,
        dom: &ElemDomain,
    ) -> Option<Tree> {
        let limit = at_least + 4 * (self.sorts.len() + 2);
        let table = DepthTable::new(self, limit);
        (at_least..=limit)
            .find(|d| table.achievable(sort, *d))
            .map(|d| table.build(self, sort, d, dom))
    }
}

/// `exact[s][d]` records whether some ground tree of sort `s` has depth
/// exactly `d`.
struct DepthTable {
    exact: Vec<Vec<bool>>,
}

impl DepthTable {
    fn new(sig: &Signature, limit: usize) -> Self {
        let n = sig.sorts.len();
        let mut exact = vec![vec![false; limit + 1]; n];
        for s in sig.elem_sorts() {
            exact[s.index()][0] = true;
        }
        for d in 1..=limit {
            for s in sig.struct_sorts() {
                exact[s.index()][d] = sig
                    .ctors_of(s)
                    .iter()
                    .any(|c| Self::ctor_reaches(sig, &exact, *c, d));
            }
        }
        DepthTable { exact }
    }

    fn ctor_reaches(sig: &Signature, exact: &[Vec<bool>], c: CtorId, d: usize) -> bool {
        Self::carrier(sig, exact, c, d).is_some()
    }

    /// Argument position that carries depth `d - 1` for constructor `c`
    /// (`Some(None)` for a nullary constructor at depth 1).
    fn carrier(sig: &Signature, exact: &[Vec<bool>], c: CtorId, d: usize) -> Option<Option<usize>> {
        let decl = sig.ctor(c);
        if decl.is_nullary() {
            return (d == 1).then_some(None);
        }
        if d == 0 {
            return None;
        }
        if decl.fields.iter().any(|f| sig.min_depth(f.sort) > d - 1) {
            return None;
        }
        decl.fields
            .iter()
            .position(|f| exact[f.sort.index()][d - 1])
            .map(Some)
    }

    fn achievable(&self, sort: SortId, d: usize) -> bool {
        self.exact[sort.index()].get(d).copied().unwrap_or(false)
    }

    fn build(&self, sig: &Signature, sort: SortId, d: usize, dom: &ElemDomain) -> Tree {
        if sig.is_elem(sort) {
            return Tree::Elem(dom.least(sort));
        }
        for c in sig.ctors_of(sort) {
            match Self::carrier(sig, &self.exact, *c, d) {
                Some(None) => return Tree::Node(*c, Vec::new()),
                Some(Some(pos)) => {
                    let children = sig
                        .ctor(*c)
                        .fields
                        .iter()
                        .enumerate()
                        .map(|(i, f)| {
                            if i == pos {
                                self.build(sig, f.sort, d - 1, dom)
                            } else {
                                sig.least_tree(f.sort, dom)
                            }
                        })
                        .collect();
                    return Tree::Node(*c, children);
                }
                None => {}
            }
        }
        unreachable!(
            "depth {d} recorded as achievable for sort {}",
            sig.sort_name(sort)
        )
    }
}

/// A value of an element sort, identified by `(sort, index)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElemValue {
    pub sort: SortId,
    pub index: u32,
}

/// A ground constructor term over element values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tree {
    Elem(ElemValue),
    Node(CtorId, Vec<Tree>),
}

impl Tree {
    pub fn elem(sort: SortId, index: u32) -> Self {
        Tree::Elem(ElemValue { sort, index })
    }

    pub fn leaf(ctor: CtorId) -> Self {
        Tree::Node(ctor, Vec::new())
    }

    pub fn depth(&self) -> usize {
        match self {
            Tree::Elem(_) => 0,
            Tree::Node(_, children) => 1 + children.iter().map(Tree::depth).max().unwrap_or(0),
        }
    }

    pub fn root(&self) -> Option<CtorId> {
        match self {
            Tree::Elem(_) => None,
            Tree::Node(c, _) => Some(*c),
        }
    }

    pub fn children(&self) -> &[Tree] {
        match self {
            Tree::Elem(_) => &[],
            Tree::Node(_, children) => children,
        }
    }

    pub fn sort(&self, sig: &Signature) -> SortId {
        match self {
            Tree::Elem(v) => v.sort,
            Tree::Node(c, _) => sig.ctor(*c).result,
        }
    }

    /// Calls `f` on every element value occurring in the tree.
    pub fn for_each_elem(&self, f: &mut impl FnMut(ElemValue)) {
        match self {
            Tree::Elem(v) => f(*v),
            Tree::Node(_, children) => children.iter().for_each(|c| c.for_each_elem(f)),
        }
    }

    /// Checks that every child matches its constructor's declared argument sort.
    pub fn is_sort_correct(&self, sig: &Signature) -> bool {
        match self {
            Tree::Elem(v) => sig.is_elem(v.sort),
            Tree::Node(c, children) => {
                let decl = sig.ctor(*c);
                decl.arity() == children.len()
                    && decl
                        .fields
                        .iter()
                        .zip(children)
                        .all(|(f, t)| t.sort(sig) == f.sort && t.is_sort_correct(sig))
            }
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> TreeDisplay<'a> {
        TreeDisplay { tree: self, sig }
    }
}

pub fn tree_depth(t: &Tree) -> usize {
    t.depth()
}

/// SMT-LIB rendering of a tree; element values print as `(as @<sort>!<k> <sort>)`.
pub struct TreeDisplay<'a> {
    tree: &'a Tree,
    sig: &'a Signature,
}

impl fmt::Display for TreeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tree {
            Tree::Elem(v) => {
                let name = self.sig.sort_name(v.sort);
                write!(f, "(as @{name}!{} {name})", v.index)
            }
            Tree::Node(c, children) if children.is_empty() => {
                write!(f, "{}", self.sig.ctor_name(*c))
            }
            Tree::Node(c, children) => {
                write!(f, "({}", self.sig.ctor_name(*c))?;
                for child in children {
                    write!(f, " {}", child.display(self.sig))?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Finite element domains, one per element sort.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ElemDomain {
    values: BTreeMap<SortId, BTreeSet<ElemValue>>,
}

impl ElemDomain {
    pub fn new() -> Self {
        Self::default()
    }

    /// `{ElemValue(σ, 0)}` for every element sort σ.
    pub fn canonical(sig: &Signature) -> Self {
        Self::uniform(sig, 1)
    }

    /// `n` values per element sort, indices `0..n`.
    pub fn uniform(sig: &Signature, n: u32) -> Self {
        let mut dom = Self::new();
        for s in sig.elem_sorts() {
            for index in 0..n {
                dom.insert(ElemValue { sort: s, index });
            }
        }
        dom
    }

    pub fn insert(&mut self, v: ElemValue) -> bool {
        self.values.entry(v.sort).or_default().insert(v)
    }

    pub fn contains(&self, v: ElemValue) -> bool {
        self.values.get(&v.sort).is_some_and(|s| s.contains(&v))
    }

    pub fn values(&self, sort: SortId) -> impl Iterator<Item = ElemValue> + '_ {
        self.values.get(&sort).into_iter().flatten().copied()
    }

    pub fn len(&self, sort: SortId) -> usize {
        self.values.get(&sort).map_or(0, BTreeSet::len)
    }

    pub fn is_empty(&self, sort: SortId) -> bool {
        self.len(sort) == 0
    }

    pub fn sorts(&self) -> impl Iterator<Item = SortId> + '_ {
        self.values.keys().copied()
    }

    /// Least value of the sort; index 0 when the sort has no values yet.
    pub fn least(&self, sort: SortId) -> ElemValue {
        self.values
            .get(&sort)
            .and_then(|s| s.first().copied())
            .unwrap_or(ElemValue { sort, index: 0 })
    }

    /// An index not yet used in `sort`.
    pub fn fresh_index(&self, sort: SortId) -> u32 {
        self.values
            .get(&sort)
            .and_then(|s| s.last())
            .map_or(0, |v| v.index + 1)
    }
}

/// `T_{sort, depth_bound}` over `elem_domain`, computed stratum by stratum.
/// Trees are deduplicated and ordered by depth, then structurally.
pub fn enumerate_trees(
    sig: &Signature,
    sort: SortId,
    depth_bound: usize,
    elem_domain: &ElemDomain,
) -> Vec<Tree> {
    let strata = strata(sig, depth_bound, elem_domain);
    let mut out: Vec<Tree> = strata[sort.index()].iter().cloned().collect();
    out.sort_by(|a, b| a.depth().cmp(&b.depth()).then_with(|| a.cmp(b)));
    out
}

/// `T_{σ, bound}` for every sort σ at once.
pub(crate) fn strata(sig: &Signature, bound: usize, dom: &ElemDomain) -> Vec<BTreeSet<Tree>> {
    let mut level: Vec<BTreeSet<Tree>> = sig
        .sorts()
        .map(|s| {
            if sig.is_elem(s) {
                dom.values(s).map(Tree::Elem).collect()
            } else {
                BTreeSet::new()
            }
        })
        .collect();
    for _ in 0..bound {
        let mut next = level.clone();
        for c in sig.ctors() {
            let decl = sig.ctor(c);
            let pools: Vec<&BTreeSet<Tree>> =
                decl.fields.iter().map(|f| &level[f.sort.index()]).collect();
            let target = &mut next[decl.result.index()];
            for_each_product(&pools, &mut |args| {
                target.insert(Tree::Node(c, args.to_vec()));
            });
        }
        level = next;
    }
    level
}

fn for_each_product(pools: &[&BTreeSet<Tree>], f: &mut impl FnMut(&[Tree])) {
    fn go(pools: &[&BTreeSet<Tree>], acc: &mut Vec<Tree>, f: &mut impl FnMut(&[Tree])) {
        match pools.split_first() {
            None => f(acc),
            Some((first, rest)) => {
                for t in first.iter() {
                    acc.push(t.clone());
                    go(rest, acc, f);
                    acc.pop();
                }
            }
        }
    }
    go(pools, &mut Vec::with_capacity(pools.len()), f)
}
