//! SMT-LIB 2 subset: parsing, printing and the solve driver.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::combine::{cardinality_backend, combine_check, purify, CombineError, CombineOptions};
use crate::formula::{
    cube_vars, enumerate_arrangements, eval_formula, to_flat_dnf, Context, Cube, Formula, Func,
    Interpretation, Literal, Term, Var,
};
use crate::reduce::{
    build_model_from_mgu, decide, reduce_cube, DecideOptions, DecisionResult, ReduceError,
};
use crate::sig::{FuncRef, RawConstructor, RawSignature, Signature, SortId, SortKind};
use crate::unify::{check_disequalities, disequalities_of, equations_of, unify};
use crate::witness::{extend_model, wtn_combined};
use crate::witness_model::{finite_witness, ModelError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    SyntaxError { pos: Pos, msg: String },
    #[error("{pos}: unknown symbol `{name}`")]
    UnknownSymbol { pos: Pos, name: String },
    #[error("{pos}: `{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        pos: Pos,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{pos}: sort mismatch: expected {expected}, found {found}")]
    SortMismatch {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("{pos}: {msg}")]
    Declaration { pos: Pos, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs, _) => Some(xs),
            Sexp::Atom(..) => None,
        }
    }
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::SyntaxError {
        pos,
        msg: msg.into(),
    }
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        match c {
            '(' => {
                stack.push((Vec::new(), pos));
                advance(c, &mut line, &mut col);
                i += 1;
            }
            ')' => {
                let (items, open) = stack.pop().ok_or_else(|| syntax(pos, "unexpected `)`"))?;
                let s = Sexp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(s),
                    None => top.push(s),
                }
                advance(c, &mut line, &mut col);
                i += 1;
            }
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
            }
            c if c.is_whitespace() => {
                advance(c, &mut line, &mut col);
                i += 1;
            }
            _ => {
                let mut tok = String::new();
                let (open, close) = match c {
                    '"' => (Some('"'), '"'),
                    '|' => (Some('|'), '|'),
                    _ => (None, ' '),
                };
                if let Some(o) = open {
                    tok.push(o);
                    advance(o, &mut line, &mut col);
                    i += 1;
                    loop {
                        let Some(&d) = chars.get(i) else {
                            return Err(syntax(pos, "unterminated literal"));
                        };
                        tok.push(d);
                        advance(d, &mut line, &mut col);
                        i += 1;
                        if d == close {
                            if close == '"' && chars.get(i) == Some(&'"') {
                                i += 1;
                                col += 1;
                                continue;
                            }
                            break;
                        }
                    }
                } else {
                    while i < chars.len()
                        && !chars[i].is_whitespace()
                        && !matches!(chars[i], '(' | ')' | ';' | '"' | '|')
                    {
                        tok.push(chars[i]);
                        i += 1;
                        col += 1;
                    }
                }
                let s = Sexp::Atom(tok, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(s),
                    None => top.push(s),
                }
            }
        }
    }
    if let Some((_, open)) = stack.pop() {
        return Err(syntax(open, "unclosed `(`"));
    }
    Ok(top)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtorDecl {
    pub name: String,
    pub fields: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatatypeDecl {
    pub name: String,
    pub ctors: Vec<CtorDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    SetLogic(String),
    SetOption(String, String),
    DeclareSort(String),
    DeclareDatatypes(Vec<DatatypeDecl>),
    DeclareConst(String, String),
    DeclareFun(String, Vec<String>, String),
    Assert(Formula),
    CheckSat,
    GetModel,
    Exit,
}

/// A parsed script with the signature and variables it declares.
#[derive(Clone, Debug)]
pub struct Script {
    pub commands: Vec<Command>,
    pub signature: Signature,
    pub context: Context,
}

struct Parser {
    raw: RawSignature,
    sig: Signature,
    ctx: Context,
}

impl Parser {
    fn sort(&self, s: &Sexp) -> Result<SortId, ParseError> {
        let name = s
            .atom()
            .ok_or_else(|| syntax(s.pos(), "expected a sort name"))?;
        self.sig
            .lookup_sort(name)
            .ok_or_else(|| ParseError::UnknownSymbol {
                pos: s.pos(),
                name: name.to_owned(),
            })
    }

    fn symbol<'s>(&self, s: &'s Sexp) -> Result<&'s str, ParseError> {
        match s.atom() {
            Some(a) if !a.starts_with(':') && !a.starts_with('"') => Ok(a),
            _ => Err(syntax(s.pos(), "expected a symbol")),
        }
    }

    fn fresh_sort_name(&self, pos: Pos, name: &str) -> Result<(), ParseError> {
        if self.sig.lookup_sort(name).is_some() {
            return Err(ParseError::Declaration {
                pos,
                msg: format!("sort `{name}` is already declared"),
            });
        }
        Ok(())
    }

    fn fresh_name(&self, pos: Pos, name: &str) -> Result<(), ParseError> {
        if self.sig.lookup_func(name).is_some()
            || self.ctx.lookup_var(name).is_some()
            || self.ctx.lookup_foreign(name).is_some()
        {
            return Err(ParseError::Declaration {
                pos,
                msg: format!("`{name}` is already declared"),
            });
        }
        Ok(())
    }

    fn revalidate(&mut self, pos: Pos) -> Result<(), ParseError> {
        self.sig = self.raw.validate().map_err(|e| ParseError::Declaration {
            pos,
            msg: e.to_string(),
        })?;
        Ok(())
    }

    fn sort_mismatch(&self, pos: Pos, expected: SortId, found: SortId) -> ParseError {
        ParseError::SortMismatch {
            pos,
            expected: self.sig.sort_name(expected).to_owned(),
            found: self.sig.sort_name(found).to_owned(),
        }
    }

    fn command(&mut self, s: &Sexp) -> Result<Command, ParseError> {
        let items = s
            .list()
            .ok_or_else(|| syntax(s.pos(), "expected a command"))?;
        let (head, args) = items
            .split_first()
            .ok_or_else(|| syntax(s.pos(), "empty command"))?;
        let name = head
            .atom()
            .ok_or_else(|| syntax(head.pos(), "expected a command name"))?;
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(ParseError::ArityMismatch {
                    pos: s.pos(),
                    name: name.to_owned(),
                    expected: n,
                    found: args.len(),
                })
            }
        };
        match name {
            "set-logic" => {
                want(1)?;
                Ok(Command::SetLogic(self.symbol(&args[0])?.to_owned()))
            }
            "set-option" => {
                want(2)?;
                let key = args[0].atom().filter(|k| k.starts_with(':'));
                let key = key.ok_or_else(|| syntax(args[0].pos(), "expected a keyword"))?;
                let val = args[1]
                    .atom()
                    .ok_or_else(|| syntax(args[1].pos(), "expected an option value"))?;
                Ok(Command::SetOption(key.to_owned(), val.to_owned()))
            }
            "declare-sort" => {
                want(2)?;
                let n = self.symbol(&args[0])?;
                if args[1].atom() != Some("0") {
                    return Err(syntax(args[1].pos(), "only sorts of arity 0 are supported"));
                }
                self.fresh_sort_name(args[0].pos(), n)?;
                self.raw.sorts.push((n.to_owned(), SortKind::Elem));
                self.revalidate(s.pos())?;
                Ok(Command::DeclareSort(n.to_owned()))
            }
            "declare-datatypes" => {
                want(2)?;
                self.datatypes(s.pos(), &args[0], &args[1])
            }
            "declare-const" => {
                want(2)?;
                self.constant(&args[0], &args[1])
            }
            "declare-fun" => {
                want(3)?;
                let params = args[1]
                    .list()
                    .ok_or_else(|| syntax(args[1].pos(), "expected a parameter list"))?;
                if params.is_empty() {
                    return self.constant(&args[0], &args[2]);
                }
                let n = self.symbol(&args[0])?;
                self.fresh_name(args[0].pos(), n)?;
                let mut arg_sorts = Vec::new();
                for p in params.iter().chain([&args[2]]) {
                    let sort = self.sort(p)?;
                    if !self.sig.is_elem(sort) {
                        return Err(ParseError::Declaration {
                            pos: p.pos(),
                            msg: format!("function `{n}` must range over uninterpreted sorts"),
                        });
                    }
                    arg_sorts.push(sort);
                }
                let result = arg_sorts.pop().unwrap();
                self.ctx
                    .declare_foreign(n, arg_sorts.clone(), result)
                    .expect("name checked above");
                Ok(Command::DeclareFun(
                    n.to_owned(),
                    arg_sorts
                        .iter()
                        .map(|a| self.sig.sort_name(*a).to_owned())
                        .collect(),
                    self.sig.sort_name(result).to_owned(),
                ))
            }
            "assert" => {
                want(1)?;
                Ok(Command::Assert(self.formula(&args[0])?))
            }
            "check-sat" => want(0).map(|_| Command::CheckSat),
            "get-model" => want(0).map(|_| Command::GetModel),
            "exit" => want(0).map(|_| Command::Exit),
            other => Err(ParseError::UnknownSymbol {
                pos: head.pos(),
                name: other.to_owned(),
            }),
        }
    }

    fn constant(&mut self, name: &Sexp, sort: &Sexp) -> Result<Command, ParseError> {
        let n = self.symbol(name)?;
        self.fresh_name(name.pos(), n)?;
        let s = self.sort(sort)?;
        self.ctx.declare_var(n, s).expect("name checked above");
        Ok(Command::DeclareConst(
            n.to_owned(),
            self.sig.sort_name(s).to_owned(),
        ))
    }

    fn datatypes(&mut self, pos: Pos, heads: &Sexp, bodies: &Sexp) -> Result<Command, ParseError> {
        let heads = heads
            .list()
            .ok_or_else(|| syntax(heads.pos(), "expected sort declarations"))?;
        let bodies_list = bodies
            .list()
            .ok_or_else(|| syntax(bodies.pos(), "expected datatype bodies"))?;
        if heads.len() != bodies_list.len() {
            return Err(ParseError::ArityMismatch {
                pos: bodies.pos(),
                name: "declare-datatypes".into(),
                expected: heads.len(),
                found: bodies_list.len(),
            });
        }
        let mut decls = Vec::new();
        for h in heads {
            let parts = h
                .list()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| syntax(h.pos(), "expected (<name> 0)"))?;
            let n = self.symbol(&parts[0])?;
            if parts[1].atom() != Some("0") {
                return Err(syntax(
                    parts[1].pos(),
                    "parametric datatypes are not supported",
                ));
            }
            self.fresh_sort_name(parts[0].pos(), n)?;
            if decls.iter().any(|d: &DatatypeDecl| d.name == n) {
                return Err(ParseError::Declaration {
                    pos: parts[0].pos(),
                    msg: format!("sort `{n}` is already declared"),
                });
            }
            decls.push(DatatypeDecl {
                name: n.to_owned(),
                ctors: Vec::new(),
            });
        }
        let known = |name: &str, decls: &[DatatypeDecl], sig: &Signature| {
            sig.lookup_sort(name).is_some() || decls.iter().any(|d| d.name == name)
        };
        let mut seen_funcs: Vec<String> = Vec::new();
        for (decl_index, body) in bodies_list.iter().enumerate() {
            let ctors = body
                .list()
                .ok_or_else(|| syntax(body.pos(), "expected a constructor list"))?;
            for c in ctors {
                let (cname, fields) = match c {
                    Sexp::Atom(..) => (self.symbol(c)?, &[][..]),
                    Sexp::List(items, p) => {
                        let (h, rest) = items
                            .split_first()
                            .ok_or_else(|| syntax(*p, "empty constructor"))?;
                        (self.symbol(h)?, rest)
                    }
                };
                let mut decl = CtorDecl {
                    name: cname.to_owned(),
                    fields: Vec::new(),
                };
                let mut names = vec![(cname, c.pos())];
                for f in fields {
                    let parts = f
                        .list()
                        .filter(|p| p.len() == 2)
                        .ok_or_else(|| syntax(f.pos(), "expected (<selector> <sort>)"))?;
                    let sel = self.symbol(&parts[0])?;
                    let sort = self.symbol(&parts[1])?;
                    if !known(sort, &decls, &self.sig) {
                        return Err(ParseError::UnknownSymbol {
                            pos: parts[1].pos(),
                            name: sort.to_owned(),
                        });
                    }
                    names.push((sel, parts[0].pos()));
                    decl.fields.push((sel.to_owned(), sort.to_owned()));
                }
                for (n, p) in names {
                    self.fresh_name(p, n)?;
                    if seen_funcs.iter().any(|s| s == n) {
                        return Err(ParseError::Declaration {
                            pos: p,
                            msg: format!("`{n}` is already declared"),
                        });
                    }
                    seen_funcs.push(n.to_owned());
                }
                decls[decl_index].ctors.push(decl);
            }
        }
        for d in &decls {
            self.raw.sorts.push((d.name.clone(), SortKind::Struct));
        }
        for d in &decls {
            for c in &d.ctors {
                self.raw.constructors.push(RawConstructor {
                    name: c.name.clone(),
                    result: d.name.clone(),
                    fields: c.fields.clone(),
                });
            }
        }
        self.revalidate(pos)?;
        Ok(Command::DeclareDatatypes(decls))
    }

    fn formula(&self, s: &Sexp) -> Result<Formula, ParseError> {
        let items = match s {
            Sexp::Atom(a, pos) => {
                return match a.as_str() {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    _ => {
                        let (_, sort) = self.term(s)?;
                        Err(ParseError::SortMismatch {
                            pos: *pos,
                            expected: "Bool".into(),
                            found: self.sig.sort_name(sort).to_owned(),
                        })
                    }
                };
            }
            Sexp::List(items, _) => items,
        };
        let (head, args) = items
            .split_first()
            .ok_or_else(|| syntax(s.pos(), "empty application"))?;
        if let Some(h) = head.list() {
            if h.len() == 3 && h[0].atom() == Some("_") && h[1].atom() == Some("is") {
                let cname = self.symbol(&h[2])?;
                let c = self
                    .sig
                    .lookup_ctor(cname)
                    .ok_or_else(|| ParseError::UnknownSymbol {
                        pos: h[2].pos(),
                        name: cname.to_owned(),
                    })?;
                self.arity(s.pos(), "is", 1, args.len())?;
                let (t, sort) = self.term(&args[0])?;
                let expected = self.sig.ctor(c).result;
                if sort != expected {
                    return Err(self.sort_mismatch(args[0].pos(), expected, sort));
                }
                return Ok(Formula::Is(c, t));
            }
            return Err(syntax(head.pos(), "unsupported indexed operator"));
        }
        let name = head.atom().unwrap();
        let at_least = |n: usize| {
            if args.len() >= n {
                Ok(())
            } else {
                Err(ParseError::ArityMismatch {
                    pos: s.pos(),
                    name: name.to_owned(),
                    expected: n,
                    found: args.len(),
                })
            }
        };
        let subformulas = || {
            args.iter()
                .map(|a| self.formula(a))
                .collect::<Result<Vec<_>, _>>()
        };
        match name {
            "not" => {
                self.arity(s.pos(), name, 1, args.len())?;
                Ok(Formula::not(self.formula(&args[0])?))
            }
            "and" if args.is_empty() => Ok(Formula::True),
            "or" if args.is_empty() => Ok(Formula::False),
            "and" => Ok(Formula::And(subformulas()?)),
            "or" => Ok(Formula::Or(subformulas()?)),
            "=>" => {
                at_least(2)?;
                let mut fs = subformulas()?;
                let mut acc = fs.pop().unwrap();
                while let Some(prev) = fs.pop() {
                    acc = Formula::Or(vec![Formula::not(prev), acc]);
                }
                Ok(acc)
            }
            "=" | "distinct" => {
                at_least(2)?;
                let mut terms = Vec::new();
                for a in args {
                    let (t, sort) = self.term(a)?;
                    if let Some((_, first)) = terms.first() {
                        if *first != sort {
                            return Err(self.sort_mismatch(a.pos(), *first, sort));
                        }
                    }
                    terms.push((t, sort));
                }
                let terms: Vec<Term> = terms.into_iter().map(|(t, _)| t).collect();
                let mut parts = Vec::new();
                if name == "=" {
                    for w in terms.windows(2) {
                        parts.push(Formula::eq(w[0].clone(), w[1].clone()));
                    }
                } else {
                    for i in 0..terms.len() {
                        for j in i + 1..terms.len() {
                            parts.push(Formula::not(Formula::eq(
                                terms[i].clone(),
                                terms[j].clone(),
                            )));
                        }
                    }
                }
                Ok(if parts.len() == 1 {
                    parts.pop().unwrap()
                } else {
                    Formula::And(parts)
                })
            }
            _ => {
                let (_, sort) = self.term(s)?;
                Err(ParseError::SortMismatch {
                    pos: s.pos(),
                    expected: "Bool".into(),
                    found: self.sig.sort_name(sort).to_owned(),
                })
            }
        }
    }

    fn arity(&self, pos: Pos, name: &str, expected: usize, found: usize) -> Result<(), ParseError> {
        if expected == found {
            Ok(())
        } else {
            Err(ParseError::ArityMismatch {
                pos,
                name: name.to_owned(),
                expected,
                found,
            })
        }
    }

    fn func(&self, pos: Pos, name: &str) -> Result<Func, ParseError> {
        match self.sig.lookup_func(name) {
            Some(FuncRef::Ctor(c)) => Ok(Func::Ctor(c)),
            Some(FuncRef::Selector(s)) => Ok(Func::Sel(s)),
            None => match self.ctx.lookup_foreign(name) {
                Some(f) => Ok(Func::Foreign(f)),
                None => Err(ParseError::UnknownSymbol {
                    pos,
                    name: name.to_owned(),
                }),
            },
        }
    }

    fn term(&self, s: &Sexp) -> Result<(Term, SortId), ParseError> {
        match s {
            Sexp::Atom(a, pos) => {
                if let Some(v) = self.ctx.lookup_var(a) {
                    return Ok((Term::Var(v), v.sort));
                }
                let f = self.func(*pos, a)?;
                let expected = f.arg_sorts(&self.sig, &self.ctx).len();
                self.arity(*pos, a, expected, 0)?;
                Ok((Term::App(f, vec![]), f.result_sort(&self.sig, &self.ctx)))
            }
            Sexp::List(items, pos) => {
                let (head, args) = items
                    .split_first()
                    .ok_or_else(|| syntax(*pos, "empty application"))?;
                let name = head
                    .atom()
                    .ok_or_else(|| syntax(head.pos(), "expected a function symbol"))?;
                if name == "as" {
                    self.arity(*pos, name, 2, args.len())?;
                    let (t, sort) = self.term(&args[0])?;
                    let want = self.sort(&args[1])?;
                    if want != sort {
                        return Err(self.sort_mismatch(args[0].pos(), want, sort));
                    }
                    return Ok((t, sort));
                }
                let f = self.func(head.pos(), name)?;
                let sorts = f.arg_sorts(&self.sig, &self.ctx);
                self.arity(*pos, name, sorts.len(), args.len())?;
                let mut ts = Vec::new();
                for (a, want) in args.iter().zip(sorts) {
                    let (t, sort) = self.term(a)?;
                    if sort != want {
                        return Err(self.sort_mismatch(a.pos(), want, sort));
                    }
                    ts.push(t);
                }
                Ok((Term::App(f, ts), f.result_sort(&self.sig, &self.ctx)))
            }
        }
    }
}

pub fn parse_script(text: &str) -> Result<Script, ParseError> {
    let mut p = Parser {
        raw: RawSignature::new(),
        sig: RawSignature::new()
            .validate()
            .expect("empty signature is valid"),
        ctx: Context::new(),
    };
    let mut commands = Vec::new();
    for s in read_sexps(text)? {
        commands.push(p.command(&s)?);
    }
    Ok(Script {
        commands,
        signature: p.sig,
        context: p.ctx,
    })
}

impl Script {
    /// SMT-LIB text that parses back to the same commands.
    pub fn print(&self) -> String {
        let mut out = String::new();
        for c in &self.commands {
            print_command(&mut out, c, &self.signature, &self.context);
            out.push('\n');
        }
        out
    }

    /// Conjunction of all asserted formulas.
    pub fn assertions(&self) -> Formula {
        Formula::And(
            self.commands
                .iter()
                .filter_map(|c| match c {
                    Command::Assert(f) => Some(f.clone()),
                    _ => None,
                })
                .collect(),
        )
    }
}

fn print_command(out: &mut String, c: &Command, sig: &Signature, ctx: &Context) {
    let _ = match c {
        Command::SetLogic(l) => write!(out, "(set-logic {l})"),
        Command::SetOption(k, v) => write!(out, "(set-option {k} {v})"),
        Command::DeclareSort(n) => write!(out, "(declare-sort {n} 0)"),
        Command::DeclareDatatypes(decls) => {
            let heads: Vec<String> = decls.iter().map(|d| format!("({} 0)", d.name)).collect();
            let bodies: Vec<String> = decls
                .iter()
                .map(|d| {
                    let ctors: Vec<String> = d
                        .ctors
                        .iter()
                        .map(|c| {
                            let mut s = format!("({}", c.name);
                            for (sel, sort) in &c.fields {
                                let _ = write!(s, " ({sel} {sort})");
                            }
                            s.push(')');
                            s
                        })
                        .collect();
                    format!("({})", ctors.join(" "))
                })
                .collect();
            write!(
                out,
                "(declare-datatypes ({}) ({}))",
                heads.join(" "),
                bodies.join(" ")
            )
        }
        Command::DeclareConst(n, s) => write!(out, "(declare-const {n} {s})"),
        Command::DeclareFun(n, args, r) => {
            write!(out, "(declare-fun {n} ({}) {r})", args.join(" "))
        }
        Command::Assert(f) => write!(out, "(assert {})", f.display(sig, ctx)),
        Command::CheckSat => write!(out, "(check-sat)"),
        Command::GetModel => write!(out, "(get-model)"),
        Command::Exit => write!(out, "(exit)"),
    };
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Procedure {
    /// Is-constraint guessing and reduction to unification.
    #[default]
    Reduce,
    /// Plain unification; constructor equalities and disequalities only.
    Unify,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub procedure: Procedure,
    pub dump_witness: bool,
    pub dump_reduction: bool,
    pub minimize_model: bool,
    /// Cardinality bounds by sort name for the combination backend.
    pub combine: Option<BTreeMap<String, usize>>,
    pub max_cubes: usize,
    pub max_guesses: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            procedure: Procedure::Reduce,
            dump_witness: false,
            dump_reduction: false,
            minimize_model: false,
            combine: None,
            max_cubes: 4096,
            max_guesses: DecideOptions::default().max_guesses,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RunErrorKind {
    #[error("no model available")]
    NoModel,
    #[error("resource limit reached: {0}")]
    ResourceOut(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Reduce(ReduceError),
    #[error(transparent)]
    Combine(CombineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model fails the assertions")]
    ModelCheckFailed,
}

impl From<ReduceError> for RunErrorKind {
    fn from(e: ReduceError) -> Self {
        match e {
            ReduceError::ResourceOut(n) => RunErrorKind::ResourceOut(format!("{n} reduced cubes")),
            e => RunErrorKind::Reduce(e),
        }
    }
}

impl From<CombineError> for RunErrorKind {
    fn from(e: CombineError) -> Self {
        match e {
            CombineError::ResourceOut(n) => RunErrorKind::ResourceOut(format!("{n} arrangements")),
            CombineError::Reduce(r) => r.into(),
            e => RunErrorKind::Combine(e),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("command {command}: {kind}")]
pub struct RunError {
    /// Zero-based index of the failing command.
    pub command: usize,
    pub kind: RunErrorKind,
}

/// Output produced up to the end of the script or the first error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub output: String,
    pub error: Option<RunError>,
}

impl Run {
    /// 0 when the script completed, 2 on resource exhaustion, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            None => 0,
            Some(RunError {
                kind: RunErrorKind::ResourceOut(_),
                ..
            }) => 2,
            Some(_) => 1,
        }
    }
}

pub fn run_script(script: &Script, opts: &RunOptions) -> Run {
    let mut driver = Driver {
        sig: &script.signature,
        ctx: script.context.clone(),
        opts,
        out: String::new(),
        model: None,
    };
    let mut error = None;
    for (i, c) in script.commands.iter().enumerate() {
        let step = match c {
            Command::CheckSat => driver.check_sat(&script.assertions(), script),
            Command::GetModel => driver.get_model(script),
            Command::Exit => break,
            _ => Ok(()),
        };
        if let Err(kind) = step {
            error = Some(RunError { command: i, kind });
            break;
        }
    }
    Run {
        output: driver.out,
        error,
    }
}

/// Parses and runs `text`; parse errors are reported as `(error …)` lines
/// by the caller.
pub fn run_text(text: &str, opts: &RunOptions) -> Result<Run, ParseError> {
    Ok(run_script(&parse_script(text)?, opts))
}

struct Driver<'a> {
    sig: &'a Signature,
    ctx: Context,
    opts: &'a RunOptions,
    out: String,
    model: Option<Interpretation>,
}

impl Driver<'_> {
    fn check_sat(&mut self, phi: &Formula, script: &Script) -> Result<(), RunErrorKind> {
        self.model = None;
        let sat = match &self.opts.combine {
            Some(bounds) => self.combined(phi, bounds)?,
            None => {
                let found = self.solve(phi)?;
                if let Some(mut m) = found {
                    self.complete(&mut m, script);
                    if !eval_formula(&m, self.sig, &self.ctx, phi).unwrap_or(false) {
                        return Err(RunErrorKind::ModelCheckFailed);
                    }
                    self.model = Some(m);
                    true
                } else {
                    false
                }
            }
        };
        self.out.push_str(if sat { "sat\n" } else { "unsat\n" });
        Ok(())
    }

    fn combined(
        &mut self,
        phi: &Formula,
        bounds: &BTreeMap<String, usize>,
    ) -> Result<bool, RunErrorKind> {
        let mut by_sort = BTreeMap::new();
        for (name, n) in bounds {
            let s = self
                .sig
                .lookup_sort(name)
                .filter(|s| self.sig.is_elem(*s))
                .ok_or_else(|| {
                    RunErrorKind::Unsupported(format!("`{name}` is not an uninterpreted sort"))
                })?;
            by_sort.insert(s, *n);
        }
        let problem = purify(&mut self.ctx, self.sig, phi)?;
        let opts = CombineOptions {
            decide: self.decide_options(),
            ..CombineOptions::default()
        };
        Ok(combine_check(
            &mut self.ctx,
            self.sig,
            &problem,
            &cardinality_backend(by_sort),
            &opts,
        )?)
    }

    fn decide_options(&self) -> DecideOptions {
        DecideOptions {
            max_guesses: self.opts.max_guesses,
        }
    }

    fn comment(&mut self, label: &str, cube: &[Literal]) {
        let f = Formula::cube(cube);
        let _ = writeln!(self.out, "; {label}: {}", f.display(self.sig, &self.ctx));
    }

    fn solve(&mut self, phi: &Formula) -> Result<Option<Interpretation>, RunErrorKind> {
        let dnf = to_flat_dnf(&mut self.ctx, self.sig, phi)
            .map_err(|e| RunErrorKind::Unsupported(e.to_string()))?;
        for (n, cube) in dnf.enumerate() {
            if n >= self.opts.max_cubes {
                return Err(RunErrorKind::ResourceOut(format!(
                    "{} cubes",
                    self.opts.max_cubes
                )));
            }
            if cube.iter().any(|l| matches!(l, Literal::FunEq(..))) {
                return Err(RunErrorKind::Unsupported(
                    "uninterpreted functions require a combination backend".into(),
                ));
            }
            if self.opts.dump_witness {
                let w = wtn_combined(&mut self.ctx, self.sig, &cube);
                let text = w.to_formula().display(self.sig, &self.ctx).to_string();
                let _ = writeln!(self.out, "; witness: {text}");
            }
            let found = match self.opts.procedure {
                Procedure::Unify => self.unify_cube(&cube)?,
                Procedure::Reduce => self.reduce_cube(&cube)?,
            };
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    fn unify_cube(&mut self, cube: &[Literal]) -> Result<Option<Interpretation>, RunErrorKind> {
        if cube
            .iter()
            .any(|l| matches!(l, Literal::SelEq(..) | Literal::Tester(..)))
        {
            return Err(RunErrorKind::Unsupported(
                "the unification procedure accepts constructor equalities and disequalities only"
                    .into(),
            ));
        }
        let Ok(mu) = unify(&equations_of(cube)) else {
            return Ok(None);
        };
        if !check_disequalities(&mu, &disequalities_of(cube)) {
            return Ok(None);
        }
        Ok(Some(
            build_model_from_mgu(cube, &mu, self.sig)?.interpretation,
        ))
    }

    fn reduce_cube(&mut self, cube: &[Literal]) -> Result<Option<Interpretation>, RunErrorKind> {
        let elems: Vec<Var> = cube_vars(cube)
            .into_iter()
            .filter(|v| self.sig.is_elem(v.sort))
            .collect();
        let opts = self.decide_options();
        for delta in enumerate_arrangements(&elems) {
            let mut full: Cube = cube.to_vec();
            full.extend(delta.literals());
            if self.opts.dump_reduction {
                for r in reduce_cube(&mut self.ctx, self.sig, &full, &opts)? {
                    self.comment("reduction", &r);
                }
            }
            if let DecisionResult::Sat(m) = decide(&mut self.ctx, self.sig, &full, &opts)? {
                if !self.opts.minimize_model {
                    return Ok(Some(m));
                }
                let w = wtn_combined(&mut self.ctx, self.sig, &full);
                let a = extend_model(self.sig, &self.ctx, &w, &m)
                    .map_err(|_| RunErrorKind::ModelCheckFailed)?;
                let conjuncts: Vec<_> = w.conjuncts().collect();
                return Ok(Some(finite_witness(self.sig, &self.ctx, &conjuncts, &a)?));
            }
        }
        Ok(None)
    }

    /// Gives unconstrained declared constants least values.
    fn complete(&self, m: &mut Interpretation, script: &Script) {
        for s in self.sig.elem_sorts() {
            if m.domain.is_empty(s) {
                m.domain.insert(m.domain.least(s));
            }
        }
        for v in script.context.vars() {
            if !m.values.contains_key(&v) {
                m.values.insert(v, self.sig.least_tree(v.sort, &m.domain));
            }
        }
    }

    fn get_model(&mut self, script: &Script) -> Result<(), RunErrorKind> {
        let m = self.model.as_ref().ok_or(RunErrorKind::NoModel)?;
        let mut text = String::from("(model\n");
        for v in script.context.vars() {
            let _ = writeln!(
                text,
                "  (define-fun {} () {} {})",
                script.context.var_name(v),
                self.sig.sort_name(v.sort),
                m.values[&v].display(self.sig)
            );
        }
        text.push_str(")\n");
        self.out.push_str(&text);
        Ok(())
    }
}
