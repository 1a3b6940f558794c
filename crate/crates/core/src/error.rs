use thiserror::Error;

use crate::groups::{GroupElement, GroupError};
use crate::int::Int;
use crate::rational::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone)]
pub enum Error {
    #[error(transparent)]
    Group(#[from] GroupError),

    #[error("{what} has {size} elements, above the enumeration budget of {cap}")]
    BudgetExceeded { what: String, size: Int, cap: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("the side schedule is empty")]
    EmptySchedule,

    #[error("duplicate element {0} in an ordered list that must be distinct")]
    DuplicateElement(GroupElement),

    #[error("schedule does not diverge: {0}")]
    ScheduleNotDivergent(String),

    #[error("N = {n}: image {image} of {element} is not in the target set")]
    InclusionViolation {
        n: u32,
        element: GroupElement,
        image: GroupElement,
    },

    #[error("N = {n}: ratio {ratio} is below the bound {eta}")]
    RatioBelowEta { n: u32, ratio: Rational, eta: Rational },

    #[error("N = {n}: the fiber over {image} has {fiber} elements, above the bound {bound}")]
    FiberExceeded {
        n: u32,
        image: GroupElement,
        fiber: u64,
        bound: u64,
    },

    #[error("coset blocks {first} and {second} overlap at N = {n}")]
    CosetOverlap { n: u32, first: usize, second: usize },

    #[error("no witness found: {0}")]
    NoWitness(String),

    #[error("counterexample slice violated: {0}")]
    CounterexampleViolation(String),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, size: Int, cap: u64) -> Error {
        Error::BudgetExceeded {
            what: what.into(),
            size,
            cap,
        }
    }
}
