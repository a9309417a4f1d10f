//! Canonical signatures and the golden regression corpus.

use thiserror::Error;

use crate::sig::{RawSignature, Signature};

/// An SMT-LIB script together with the transcript it must produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GoldenScript {
    pub name: &'static str,
    pub input: &'static str,
    pub expected: &'static str,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub signature: Signature,
    pub scripts: Vec<GoldenScript>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
}

pub const FIXTURE_NAMES: [&str; 5] = ["list", "pair", "lp", "example1", "t0"];

macro_rules! golden {
    ($name:literal) => {
        GoldenScript {
            name: $name,
            input: include_str!(concat!("../fixtures/", $name, ".smt2")),
            expected: include_str!(concat!("../fixtures/", $name, ".expected")),
        }
    };
}

pub fn load_fixture(name: &str) -> Result<Fixture, FixtureError> {
    let (name, signature, scripts) = match name {
        "list" => (
            "list",
            list_signature(),
            vec![
                golden!("list_selector_chain"),
                golden!("list_disjoint_tails"),
                golden!("list_tester_clash"),
                golden!("list_wrong_selector"),
                golden!("list_acyclic"),
            ],
        ),
        "pair" => (
            "pair",
            pair_signature(),
            vec![golden!("pair_first_diseq"), golden!("pair_pigeonhole")],
        ),
        "lp" => ("lp", lp_signature(), vec![golden!("lp_pair_in_list")]),
        "example1" => (
            "example1",
            example1_signature(),
            vec![golden!("example1_trees")],
        ),
        "t0" => ("t0", t0_signature(), vec![golden!("t0_two_elements")]),
        other => return Err(FixtureError::UnknownFixture(other.to_owned())),
    };
    Ok(Fixture {
        name,
        signature,
        scripts,
    })
}

/// `elem`, `list` with `nil` and `cons(car: elem, cdr: list)`.
pub fn list_signature() -> Signature {
    RawSignature::new()
        .elem("elem")
        .structure("list")
        .ctor("nil", "list", &[])
        .ctor("cons", "list", &[("car", "elem"), ("cdr", "list")])
        .validate()
        .expect("list signature is valid")
}

/// `elem`, `pair` with `pair(first: elem, second: elem)`.
pub fn pair_signature() -> Signature {
    RawSignature::new()
        .elem("elem")
        .structure("pair")
        .ctor("pair", "pair", &[("first", "elem"), ("second", "elem")])
        .validate()
        .expect("pair signature is valid")
}

/// Lists of pairs: `elem`, `pair`, and `list` with `cons(car: pair, cdr: list)`.
pub fn lp_signature() -> Signature {
    RawSignature::new()
        .elem("elem")
        .structure("pair")
        .structure("list")
        .ctor("pair", "pair", &[("first", "elem"), ("second", "elem")])
        .ctor("nil", "list", &[])
        .ctor("cons", "list", &[("car", "pair"), ("cdr", "list")])
        .validate()
        .expect("lp signature is valid")
}

/// `elem`, `struct` with `b` and `c(c1: elem, c2: struct, c3: struct)`.
pub fn example1_signature() -> Signature {
    RawSignature::new()
        .elem("elem")
        .structure("struct")
        .ctor("b", "struct", &[])
        .ctor(
            "c",
            "struct",
            &[("c1", "elem"), ("c2", "struct"), ("c3", "struct")],
        )
        .validate()
        .expect("example signature is valid")
}

/// A single element sort and no function symbols; its theory requires at
/// least two elements (see `combine::T0Backend`).
pub fn t0_signature() -> Signature {
    RawSignature::new()
        .elem("sigma")
        .validate()
        .expect("t0 signature is valid")
}
